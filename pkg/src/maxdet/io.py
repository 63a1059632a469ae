"""File formats, candidate verification, the run ledger and the full pipeline.

Formats are ASCII with LF line endings:

* Gram candidates: header ``maxdet-gram v1 n=<n> dmin2=<d>``, then blocks of a
  ``det2=<det>`` line followed by n rows of integers, blocks separated by a
  blank line.
* Sign matrices: header ``maxdet-sol v1 n=<n>``, then blocks of n rows of
  ``+``/``-`` characters.  Headerless files of either kind are accepted on
  input.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from dataclasses import dataclass, field

import numpy as np

from .exact import as_int_matrix, det_exact, is_perfect_square

log = logging.getLogger(__name__)

GRAM_HEADER = re.compile(r"^maxdet-gram v1 n=(\d+) dmin2=(\d+)$")
SOL_HEADER = re.compile(r"^maxdet-sol v1 n=(\d+)$")


class FormatError(ValueError):
    def __init__(self, path, line, msg):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


@dataclass
class MatrixFile:
    kind: str  # "gram" or "sign"
    n: int | None
    matrices: list
    dmin2: int | None = None
    dets: list | None = None


def format_gram_file(mats, n: int, dmin2: int) -> str:
    out = [f"maxdet-gram v1 n={n} dmin2={dmin2}"]
    for k, m in enumerate(mats):
        m = as_int_matrix(m)
        if k:
            out.append("")
        out.append(f"det2={det_exact(m)}")
        out.extend(" ".join(str(int(x)) for x in row) for row in m)
    return "\n".join(out) + "\n"


def format_sign_file(mats, n: int) -> str:
    out = [f"maxdet-sol v1 n={n}"]
    for k, m in enumerate(mats):
        if k:
            out.append("")
        out.extend("".join("+" if x > 0 else "-" for x in row) for row in np.asarray(m))
    return "\n".join(out) + "\n"


def _write(path, text: str):
    if path in (None, "-"):
        import sys

        sys.stdout.write(text)
        return
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def write_gram_file(path, mats, n: int, dmin2: int):
    _write(path, format_gram_file(mats, n, dmin2))


def write_sign_file(path, mats, n: int):
    _write(path, format_sign_file(mats, n))


def parse_matrix_text(text: str, path: str = "<string>") -> MatrixFile:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    n = dmin2 = None
    kind = None
    start = 0
    if lines:
        m = GRAM_HEADER.match(lines[0])
        if m:
            kind, n, dmin2, start = "gram", int(m.group(1)), int(m.group(2)), 1
        else:
            m = SOL_HEADER.match(lines[0])
            if m:
                kind, n, start = "sign", int(m.group(1)), 1
    blocks: list[list[tuple[int, str]]] = []
    cur: list[tuple[int, str]] = []
    for no, line in enumerate(lines[start:], start=start + 1):
        if line.strip() == "":
            if cur:
                blocks.append(cur)
                cur = []
            continue
        cur.append((no, line.rstrip("\r")))
    if cur:
        blocks.append(cur)
    mats, dets = [], []
    for block in blocks:
        det = None
        if block[0][1].startswith("det2="):
            if kind == "sign":
                raise FormatError(path, block[0][0], "det2 line in a sign-matrix file")
            try:
                det = int(block[0][1][5:])
            except ValueError:
                raise FormatError(path, block[0][0], "malformed det2 line") from None
            block = block[1:]
            kind = kind or "gram"
        rows = []
        for no, line in block:
            s = line.strip()
            if s and set(s) <= {"+", "-"}:
                if kind == "gram":
                    raise FormatError(path, no, "sign row in an integer-matrix file")
                kind = kind or "sign"
                rows.append([1 if ch == "+" else -1 for ch in s])
            else:
                if kind == "sign":
                    raise FormatError(path, no, "expected a row of + and - characters")
                try:
                    rows.append([int(tok) for tok in s.split()])
                except ValueError:
                    raise FormatError(path, no, "malformed integer row") from None
                kind = kind or "gram"
        if not rows:
            raise FormatError(path, block[0][0] if block else 0, "empty matrix block")
        size = len(rows)
        for (no, _), row in zip(block, rows):
            if len(row) != size:
                raise FormatError(path, no, f"row has {len(row)} entries, expected {size}")
        if n is not None and size != n:
            raise FormatError(path, block[0][0], f"matrix has order {size}, header says {n}")
        m = np.array(rows, dtype=np.int64) if size < 64 else np.array(rows, dtype=object)
        if det is not None and det_exact(m) != det:
            raise FormatError(path, block[0][0] - 1, "det2 does not match the matrix")
        mats.append(m)
        dets.append(det)
    if n is None and mats:
        n = mats[0].shape[0]
    return MatrixFile(kind or "gram", n, mats, dmin2, dets)


def parse_matrix_file(path) -> MatrixFile:
    with open(path, encoding="ascii", newline="") as fh:
        text = fh.read()
    return parse_matrix_text(text, str(path))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("ascii")).hexdigest()


@dataclass
class CandidateCheck:
    index: int
    symmetric: bool
    positive_definite: bool
    diagonal: bool
    congruence: bool
    square_det: bool
    threshold: bool

    @property
    def ok(self) -> bool:
        return all((self.symmetric, self.positive_definite, self.diagonal,
                    self.congruence, self.square_det, self.threshold))

    def failures(self) -> list[str]:
        names = ("symmetric", "positive_definite", "diagonal", "congruence",
                 "square_det", "threshold")
        return [k for k in names if not getattr(self, k)]


@dataclass
class VerifyReport:
    checks: list
    classes: int
    duplicates: int

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks) and self.duplicates == 0

    def summary(self) -> str:
        bad = [c for c in self.checks if not c.ok]
        lines = [f"candidates: {len(self.checks)}", f"failing: {len(bad)}",
                 f"classes: {self.classes}", f"duplicates: {self.duplicates}"]
        for c in bad:
            lines.append(f"  #{c.index}: {', '.join(c.failures())}")
        return "\n".join(lines)


def verify_candidates(mats, n: int, d_min: int) -> VerifyReport:
    """Check each matrix against the candidate Gram properties, then count classes."""
    from .equivalence import dedup

    checks = []
    for k, m in enumerate(mats):
        m = as_int_matrix(m)
        sym = m.shape == (n, n) and np.array_equal(m, m.T)
        diag = sym and bool(np.all(np.diagonal(m) == n))
        off = [int(m[i, j]) for i in range(m.shape[0]) for j in range(m.shape[1]) if i != j]
        cong = all((x - n) % 4 == 0 for x in off)
        pd = sym and all(det_exact(m[:r, :r]) > 0 for r in range(1, m.shape[0] + 1))
        det = det_exact(m) if sym else 0
        checks.append(CandidateCheck(k, sym, pd, diag, cong, is_perfect_square(det),
                                     det >= d_min * d_min))
    good = [as_int_matrix(m) for m, c in zip(mats, checks) if c.symmetric]
    reps, sizes = dedup(good, "gram") if good else ([], [])
    return VerifyReport(checks, len(reps), sum(s - 1 for s in sizes))


@dataclass
class RunLedgerEntry:
    command: str
    config_hash: str
    inputs: dict = field(default_factory=dict)
    nodes: int = 0
    wall: float = 0.0
    outputs: dict = field(default_factory=dict)
    complete: bool = True

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def append_ledger(path, entry: RunLedgerEntry):
    if not path:
        return
    with open(path, "a", encoding="ascii", newline="\n") as fh:
        fh.write(entry.to_json() + "\n")


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


@dataclass
class PipelineSummary:
    n: int
    d_min: int
    candidates: list = field(default_factory=list)
    pairs: list = field(default_factory=list)
    decomposable: set = field(default_factory=set)
    pair_status: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)  # scaled value -> R
    hasse: dict = field(default_factory=dict)
    design_classes: dict = field(default_factory=dict)  # scaled value -> class count
    complete: bool = True
    nodes: int = 0
    timings: dict = field(default_factory=dict)

    @property
    def values(self) -> list[int]:
        return sorted(self.witnesses)

    @property
    def d_n(self) -> int | None:
        """Maximal |det| (unscaled) if the search shows it, else None."""
        if not self.complete or not self.witnesses:
            return None
        return max(self.witnesses) << (self.n - 1)

    def report(self) -> str:
        from .spectrum import compress

        lines = [f"n={self.n} d_min={self.d_min}",
                 f"candidates: {len(self.candidates)}",
                 f"pairs: {len(self.pairs)}",
                 f"decomposable candidates: {len(self.decomposable)}",
                 f"distinct scaled determinants: {len(self.witnesses)}"]
        if self.witnesses:
            lines.append(f"values: {compress(self.witnesses)}")
        if self.hasse:
            ruled = sum(1 for c in self.hasse.values() if c.ruled_out)
            lines.append(f"pairs ruled out by Hasse-Minkowski: {ruled} of {len(self.hasse)}")
        for v, k in sorted(self.design_classes.items()):
            lines.append(f"design classes at {v}: {k}")
        dn = self.d_n
        lines.append(f"D_n: {dn if dn is not None else 'undetermined'}")
        lines.append(f"complete: {self.complete}")
        return "\n".join(lines)


def decompose_candidates(cands, n: int, summary: PipelineSummary, *, budget_nodes=None,
                         budget_seconds=None, jset=(1, 2), hasse: bool = False):
    """Settle each candidate: decomposable, or not, by pair decomposition.

    Pairs are skipped once both members are known to decompose.
    """
    from .decompose import GramPairContext, decompose_first, enumerate_pairs
    from .rational import hm_indecomposability

    summary.pairs = enumerate_pairs(cands)
    for i, j in summary.pairs:
        if i in summary.decomposable and j in summary.decomposable:
            summary.pair_status[(i, j)] = "skipped"
            continue
        ctx = GramPairContext(cands[i], cands[j], jset=jset)
        out = decompose_first(ctx, budget_nodes=budget_nodes, budget_seconds=budget_seconds)
        summary.nodes += out.nodes
        summary.pair_status[(i, j)] = out.status
        if out.status == "solutions":
            summary.decomposable.update((i, j))
            r = out.solutions[0]
            value = abs(det_exact(r)) >> (n - 1)
            summary.witnesses.setdefault(value, r)
        elif out.status == "timeout":
            summary.complete = False
        elif hasse and out.status == "none":
            summary.hasse[(i, j)] = hm_indecomposability(cands[i], cands[j])
    summary.witnesses = dict(sorted(summary.witnesses.items()))


def count_design_classes(cands, pairs, target: int, budget_nodes=None) -> int:
    """Hadamard classes of designs whose Gram pair has determinant ``target``.

    Only unordered pairs are searched, so solutions of an off-diagonal pair
    (G, H) are joined by their transposes, which solve (H, G).
    """
    from .decompose import GramPairContext, decompose_all
    from .equivalence import dedup

    designs = []
    for i, j in pairs:
        if det_exact(cands[i]) != target:
            continue
        out = decompose_all(GramPairContext(cands[i], cands[j]), budget_nodes=budget_nodes)
        designs.extend(out.solutions)
        if i != j:
            designs.extend(r.T.copy() for r in out.solutions)
    reps, _ = dedup(designs, "hadamard") if designs else ([], [])
    return len(reps)


def run_pipeline(n: int, d_min2_root: int, *, bound: str = "auto", budget_nodes=None,
                 budget_seconds=None, hasse: bool = False, classes: bool = False,
                 checkpoint=None, candidates=None) -> PipelineSummary:
    """Gram search, pairing, decomposition (+ optional Hasse-Minkowski on
    failures and class counts for the best value).

    ``d_min2_root`` is the unscaled threshold d_min (det R >= d_min).
    ``candidates`` skips the search and uses the given list.
    """
    from .gramsearch import SearchConfig, search_grams

    summary = PipelineSummary(n, d_min2_root)
    t0 = time.monotonic()
    if candidates is None:
        res = search_grams(SearchConfig(n, d_min2_root, bound=bound, checkpoint=checkpoint))
        summary.candidates = res.candidates
        summary.nodes += res.nodes
        summary.complete = res.complete
    else:
        summary.candidates = [as_int_matrix(c) for c in candidates]
    summary.timings["search"] = time.monotonic() - t0
    t1 = time.monotonic()
    decompose_candidates(summary.candidates, n, summary, budget_nodes=budget_nodes,
                         budget_seconds=budget_seconds, hasse=hasse)
    summary.timings["decompose"] = time.monotonic() - t1
    if classes and summary.witnesses:
        best = max(summary.witnesses)
        target = (best << (n - 1)) ** 2
        summary.design_classes[best] = count_design_classes(
            summary.candidates, summary.pairs, target, budget_nodes)
    return summary
