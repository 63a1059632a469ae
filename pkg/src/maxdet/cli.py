"""Command-line interface: ``maxdet <subcommand> ...``.

Exit codes: 0 success, 2 budget exhausted (result incomplete), 1 error.
"""
from __future__ import annotations

import argparse
import ast
import logging
import operator
import os
import sys
import time
from pathlib import Path

log = logging.getLogger("maxdet")

EXIT_OK, EXIT_ERROR, EXIT_INCOMPLETE = 0, 1, 2

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Pow: operator.pow, ast.FloorDiv: operator.floordiv}


def parse_int_expr(text: str) -> int:
    """Evaluate an integer expression such as ``833*4^6*2^18`` exactly.

    ``^`` and ``**`` both mean power; only integer literals, + - * // and
    parentheses are allowed.
    """
    try:
        tree = ast.parse(text.strip().replace("^", "**"), mode="eval")
    except SyntaxError:
        raise ValueError(f"bad integer expression {text!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow) and (b < 0 or b > 10000):
                raise ValueError("exponent out of range")
            return _OPS[type(node.op)](a, b)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ValueError(f"bad integer expression {text!r}")

    return ev(tree)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MAXDET_WORKERS", "1")))
    except ValueError:
        return 1


def _subtree(text: str | None):
    if not text:
        return None
    i, k = text.split("/")
    return int(i), int(k)


def _jset(text: str):
    return tuple(int(x) for x in text.split(",") if x.strip())


def cmd_bounds(args) -> int:
    from .bounds import ehlich_barba_bound, ehlich_bound, hadamard_bound

    n = args.n
    rows = [("hadamard", hadamard_bound(n))]
    if n % 2:
        rows.append(("ehlich-barba", ehlich_barba_bound(n)))
    if n % 4 == 3:
        rows.append(("ehlich", ehlich_bound(n)))
    for name, b in rows:
        sq = b.squared
        print(f"{name}: squared={sq} value~{b.value:.6g} d_n~{b.scaled:.6g} "
              f"floor={b.floor}")
    return EXIT_OK


def _search_one(cfg):
    from .gramsearch import search_grams

    return search_grams(cfg)


def cmd_gram_search(args) -> int:
    from dataclasses import replace

    from .equivalence import dedup
    from .exact import det_exact
    from .gramsearch import SearchConfig, search_grams
    from .io import RunLedgerEntry, append_ledger, format_gram_file, text_digest, _write

    d_min = parse_int_expr(args.dmin)
    cfg = SearchConfig(args.n, d_min, bound=args.bound, checkpoint=args.checkpoint,
                       subtree=_subtree(args.subtree), split_depth=args.split_depth)
    t0 = time.monotonic()
    workers = _workers()
    if workers > 1 and cfg.subtree is None:
        from concurrent.futures import ProcessPoolExecutor

        units = [replace(cfg, subtree=(i, workers), checkpoint=(
            f"{cfg.checkpoint}.{i}" if cfg.checkpoint else None)) for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_search_one, units))
        found = [m for r in results for m in r.candidates]
        found.sort(key=lambda m: (-det_exact(m), m.tobytes()))
        cands, _ = dedup(found, "gram")
        nodes = sum(r.nodes for r in results)
    else:
        res = search_grams(cfg)
        cands, nodes = res.candidates, res.nodes
    text = format_gram_file(cands, args.n, d_min * d_min)
    _write(args.out, text)
    wall = time.monotonic() - t0
    print(f"gram-search n={args.n} dmin={d_min}: {len(cands)} classes, "
          f"{nodes} nodes, {wall:.1f}s", file=sys.stderr)
    append_ledger(args.ledger, RunLedgerEntry(
        "gram-search", cfg.digest(), {}, nodes, wall, {"candidates": text_digest(text)}, True))
    return EXIT_OK


def _load(path, kind=None):
    from .io import parse_matrix_file

    f = parse_matrix_file(path)
    if kind and f.kind != kind:
        raise ValueError(f"{path}: expected a {kind} file, found {f.kind}")
    return f


def cmd_decompose(args) -> int:
    from .decompose import GramPairContext, decompose_all, decompose_first, \
        decompose_random, enumerate_pairs
    from .io import RunLedgerEntry, append_ledger, file_digest, format_sign_file, \
        text_digest, _write

    f = _load(args.grams, "gram")
    mats, n = f.matrices, f.n
    jset = _jset(args.jset)
    budget = dict(budget_nodes=args.budget_nodes, budget_seconds=args.budget_seconds)
    pairs = enumerate_pairs(mats)
    sols, incomplete, nodes = [], False, 0
    t0 = time.monotonic()
    for i, j in pairs:
        ctx = GramPairContext(mats[i], mats[j], jset=jset)
        if args.mode == "first":
            out = decompose_first(ctx, **budget)
        elif args.mode == "all":
            out = decompose_all(ctx, **budget)
        else:
            out = decompose_random(ctx, seed=args.seed, fanout=args.fanout, **budget)
        nodes += out.nodes
        incomplete |= out.status == "timeout"
        print(f"pair {i} {j}: {out.status} solutions={len(out.solutions)} "
              f"nodes={out.nodes} max_level={out.max_level}")
        sols.extend(out.solutions)
    text = format_sign_file(sols, n)
    if args.out:
        _write(args.out, text)
    append_ledger(args.ledger, RunLedgerEntry(
        "decompose", f"{args.mode}:{args.seed}:{args.fanout}:{args.jset}",
        {"grams": file_digest(args.grams)}, nodes, time.monotonic() - t0,
        {"solutions": text_digest(text)}, not incomplete))
    return EXIT_INCOMPLETE if incomplete else EXIT_OK


def cmd_hasse(args) -> int:
    from itertools import combinations_with_replacement

    from .decompose import enumerate_pairs
    from .exact import char_poly
    from .rational import hm_indecomposability

    f = _load(args.grams, "gram")
    mats = f.matrices
    if args.pairs == "all":
        pairs = [(i, j) for i, j in combinations_with_replacement(range(len(mats)), 2)
                 if char_poly(mats[i]) == char_poly(mats[j])]
    else:
        pairs = enumerate_pairs(mats)
    unfactored = False
    for i, j in pairs:
        c = hm_indecomposability(mats[i], mats[j], mode=args.mode)
        unfactored |= c.status.endswith("(unfactored)")
        extra = f" j={c.j} {c.direction}" if c.ruled_out else ""
        print(f"pair {i} {j}: {c.status}{extra}")
    return EXIT_INCOMPLETE if unfactored else EXIT_OK


def cmd_canon(args) -> int:
    from .equivalence import dedup, gram_canonical, hadamard_canonical

    if bool(args.grams) == bool(args.designs):
        raise ValueError("give exactly one of --grams or --designs")
    if args.grams:
        mats, kind, canon = _load(args.grams, "gram").matrices, "gram", gram_canonical
    else:
        mats, kind, canon = _load(args.designs, "sign").matrices, "hadamard", hadamard_canonical
    for k, m in enumerate(mats):
        c = canon(m)
        print(f"# matrix {k}")
        for row in c.canonical:
            print(" ".join(str(int(x)) for x in row))
    reps, sizes = dedup(mats, kind)
    print(f"classes: {len(reps)}")
    for k, s in enumerate(sizes):
        print(f"class {k}: {s}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .io import write_sign_file
    from .spectrum import full_spectrum

    d_min = parse_int_expr(args.dmin) if args.dmin else None
    res = full_spectrum(args.n, budget=args.budget, seed=args.seed, d_min=d_min,
                        budget_nodes=args.budget_nodes)
    print(res.report())
    if args.witness_dir:
        out = Path(args.witness_dir)
        out.mkdir(parents=True, exist_ok=True)
        vals = sorted(res.values)
        write_sign_file(out / f"spectrum_n{args.n}.txt", [res.values[v] for v in vals], args.n)
        (out / f"spectrum_n{args.n}_values.txt").write_text(
            "\n".join(f"{v} {res.provenance[v]}" for v in vals) + "\n")
    return EXIT_OK if res.complete_above else EXIT_INCOMPLETE


def cmd_pipeline(args) -> int:
    from .io import RunLedgerEntry, append_ledger, config_hash, run_pipeline

    d_min = parse_int_expr(args.dmin)
    candidates = _load(args.grams, "gram").matrices if args.grams else None
    t0 = time.monotonic()
    s = run_pipeline(args.n, d_min, bound=args.bound, budget_nodes=args.budget_nodes,
                     budget_seconds=args.budget_seconds, hasse=args.hasse,
                     classes=args.classes, checkpoint=args.checkpoint,
                     candidates=candidates)
    print(s.report())
    append_ledger(args.ledger, RunLedgerEntry(
        "pipeline", config_hash([args.n, d_min, args.bound]), {}, s.nodes,
        time.monotonic() - t0, {"values": config_hash(s.values)}, s.complete))
    return EXIT_OK if s.complete else EXIT_INCOMPLETE


def cmd_verify(args) -> int:
    from .io import verify_candidates

    f = _load(args.grams, "gram")
    n = args.n or f.n
    d_min = parse_int_expr(args.dmin) if args.dmin else 1
    rep = verify_candidates(f.matrices, n, d_min)
    print(rep.summary())
    return EXIT_OK if rep.ok else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxdet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("--ledger", help="append a run record (JSON lines) to this file")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bounds", help="determinant upper bounds for order n")
    s.add_argument("n", type=int)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("gram-search", help="enumerate candidate Gram matrices")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dmin", required=True, help="threshold d_min, e.g. 2173*2^12")
    s.add_argument("--bound", default="auto", choices=["auto", "km", "sharper", "partition", "none"])
    s.add_argument("--checkpoint")
    s.add_argument("--subtree", help="work unit i/k (0-based)")
    s.add_argument("--split-depth", type=int)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_gram_search)

    s = sub.add_parser("decompose", help="decompose Gram pairs into sign matrices")
    s.add_argument("--grams", required=True)
    s.add_argument("--mode", default="first", choices=["first", "all", "random"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--fanout", type=int, default=1)
    s.add_argument("--jset", default="1,2")
    s.add_argument("--budget-nodes", type=int)
    s.add_argument("--budget-seconds", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("hasse", help="Hasse-Minkowski indecomposability certificates")
    s.add_argument("--grams", required=True)
    s.add_argument("--pairs", default="same-charpoly", choices=["all", "same-charpoly"])
    s.add_argument("--mode", default="reduced", choices=["reduced", "literal"])
    s.set_defaults(func=cmd_hasse)

    s = sub.add_parser("canon", help="canonical forms and class counts")
    s.add_argument("--grams")
    s.add_argument("--designs")
    s.set_defaults(func=cmd_canon)

    s = sub.add_parser("spectrum", help="determinant spectrum of order n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dmin", help="scaled exhaustive threshold (default: first heuristic gap)")
    s.add_argument("--budget", type=int, default=20000, help="local-search steps")
    s.add_argument("--budget-nodes", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--witness-dir")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("pipeline", help="search, decompose and report D_n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dmin", required=True)
    s.add_argument("--grams", help="use this candidate file instead of searching")
    s.add_argument("--bound", default="auto", choices=["auto", "km", "sharper", "partition", "none"])
    s.add_argument("--budget-nodes", type=int)
    s.add_argument("--budget-seconds", type=float)
    s.add_argument("--checkpoint")
    s.add_argument("--hasse", action="store_true")
    s.add_argument("--classes", action="store_true")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("verify", help="check a candidate file")
    s.add_argument("--grams", required=True)
    s.add_argument("--n", type=int)
    s.add_argument("--dmin")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
