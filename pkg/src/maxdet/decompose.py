"""Decomposition of Gram pairs (G, H) into {+1,-1} matrices R with
R R^T = G and R^T R = H.

R is built one row at a time.  Columns that agree on every row so far are
kept together in a frame; inside a frame only the number of +1 entries of
the next row matters (the +1's are placed first), so a row is described by
one integer per frame.  Those integers satisfy a small linear system coming
from g_{i,k} = r_i . r_k, which is solved by splitting the variables into
basic and non-basic ones.  Rows that survive are checked against
G^(j+1) = R H^j R^T restricted to the rows already known.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .exact import as_int_matrix, char_poly, matrix_power

log = logging.getLogger(__name__)

_CHUNK = 1 << 15


@dataclass(frozen=True)
class Framing:
    widths: tuple[int, ...]

    def __post_init__(self):
        if any(w < 1 for w in self.widths):
            raise ValueError("frame widths must be positive")

    @property
    def n(self) -> int:
        return sum(self.widths)

    @property
    def m(self) -> int:
        return len(self.widths)

    def refines(self, other: "Framing") -> bool:
        """True if every frame of self lies inside a frame of other."""
        cuts = set(np.cumsum(other.widths).tolist())
        return cuts <= set(np.cumsum(self.widths).tolist()) and self.n == other.n


@dataclass
class FrameState:
    """Q holds the distinct columns of the rows fixed so far (k x m)."""

    q: np.ndarray
    widths: tuple[int, ...]

    @property
    def level(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return len(self.widths)

    def expand(self) -> np.ndarray:
        """The k x n partial design represented by this state."""
        return np.repeat(self.q, self.widths, axis=1)

    def key(self):
        return (self.q.tobytes(), self.widths)


def initial_state(widths: Sequence[int]) -> FrameState:
    return FrameState(np.zeros((0, len(widths)), dtype=np.int64), tuple(int(w) for w in widths))


def _basic_columns(q: np.ndarray, widths: Sequence[int]):
    """Pick an independent set of rows and basic columns of q.

    Elimination runs on exact rationals with the columns scaled by the
    frame widths; the pivot is the largest scaled entry, so wide frames
    end up basic and narrow frames are enumerated.
    """
    from fractions import Fraction

    k, m = q.shape
    a = [[Fraction(int(x)) for x in row] for row in q]
    rows, cols = [], []
    free = list(range(m))
    for t in range(k):
        best = None
        for c in free:
            v = abs(a[t][c]) * widths[c]
            if v != 0 and (best is None or v > best[0]):
                best = (v, c)
        if best is None:
            continue
        c = best[1]
        rows.append(t)
        cols.append(c)
        free.remove(c)
        piv = a[t][c]
        for u in range(t + 1, k):
            if a[u][c] != 0:
                f = a[u][c] / piv
                a[u] = [x - f * y for x, y in zip(a[u], a[t])]
    return rows, cols, free


def _exact_inverse_scaled(b: np.ndarray):
    """(det, adj) of a small integer matrix with adj @ b == det * I."""
    kk = b.shape[0]
    det = int(round(np.linalg.det(b)))
    adj = np.rint(det * np.linalg.inv(b)).astype(np.int64)
    if det != 0 and np.array_equal(adj @ b, det * np.eye(kk, dtype=np.int64)):
        return det, adj
    from .exact import adjugate, det_exact

    det = det_exact(b)
    adj = adjugate(b).astype(np.int64)
    return det, adj


def solve_frame_system(state: FrameState, rhs) -> np.ndarray:
    """All integer x with Q (2x - w) = rhs and 0 <= x_i <= w_i.

    Returns an array of shape (count, m); an empty result means the branch
    is dead.
    """
    q = np.asarray(state.q, dtype=np.int64)
    w = np.asarray(state.widths, dtype=np.int64)
    k, m = q.shape
    rhs = np.asarray(rhs, dtype=np.int64).reshape(k)
    twice = rhs + q @ w
    if np.any(twice % 2):
        return np.zeros((0, m), dtype=np.int64)
    b = twice // 2
    rows, basic, nonbasic = _basic_columns(q, state.widths)
    kb = len(basic)
    if kb:
        det, adj = _exact_inverse_scaled(q[np.ix_(rows, basic)])
    radix = [int(w[c]) + 1 for c in nonbasic]
    total = int(np.prod(radix)) if radix else 1
    found = []
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK))
        x = np.zeros((idx.size, m), dtype=np.int64)
        if nonbasic:
            x[:, nonbasic] = np.stack(np.unravel_index(idx, radix), axis=1)
        if kb:
            resid = b[rows][None, :] - x[:, nonbasic] @ q[np.ix_(rows, nonbasic)].T
            num = resid @ adj.T
            ok = np.all(num % det == 0, axis=1)
            x = x[ok]
            xb = num[ok] // det
            x[:, basic] = xb
            inside = np.all((xb >= 0) & (xb <= w[basic]), axis=1)
            x = x[inside]
        if k:
            x = x[np.all(x @ q.T == b, axis=1)]
        if x.size:
            found.append(x)
    if not found:
        return np.zeros((0, m), dtype=np.int64)
    return np.concatenate(found)


def refine_framing(state: FrameState, x) -> FrameState:
    """Split every frame into its +1 part and its -1 part for the new row."""
    x = [int(v) for v in x]
    cols, widths = [], []
    for i, (wi, xi) in enumerate(zip(state.widths, x)):
        qi = state.q[:, i]
        if xi:
            cols.append(np.append(qi, 1))
            widths.append(xi)
        if wi - xi:
            cols.append(np.append(qi, -1))
            widths.append(wi - xi)
    q = np.stack(cols, axis=1) if cols else np.zeros((state.level + 1, 0), dtype=np.int64)
    return FrameState(q.astype(np.int64), tuple(widths))


def expand_rows(widths: Sequence[int], xs: np.ndarray) -> np.ndarray:
    """Turn frame-variable vectors into explicit +1/-1 rows (+1 first)."""
    n = sum(widths)
    xs = np.atleast_2d(xs)
    offsets = np.concatenate([[0], np.cumsum(widths)[:-1]])
    pos = np.arange(n)
    frame = np.repeat(np.arange(len(widths)), widths)
    within = pos - offsets[frame]
    return np.where(within[None, :] < xs[:, frame], 1, -1).astype(np.int64)


def twin_classes(h) -> list[list[int]]:
    """Classes of indices whose transposition leaves h unchanged."""
    h = as_int_matrix(h)
    n = h.shape[0]
    label = list(range(n))
    for i in range(n):
        if label[i] != i:
            continue
        for j in range(i + 1, n):
            if label[j] != j:
                continue
            mask = np.ones(n, dtype=bool)
            mask[[i, j]] = False
            if h[i, i] == h[j, j] and np.array_equal(h[i, mask], h[j, mask]):
                label[j] = i
    classes: dict[int, list[int]] = {}
    for i, c in enumerate(label):
        classes.setdefault(c, []).append(i)
    return list(classes.values())


def initial_framing(h):
    """Framing compatible with h, plus the index order making frames contiguous.

    Returns (Framing, perm) where h[perm][:, perm] has its classes contiguous.
    """
    classes = twin_classes(h)
    perm = [i for c in classes for i in c]
    return Framing(tuple(len(c) for c in classes)), perm


def _needs_object(n: int, j: int) -> bool:
    return float(n) ** (j + 3) >= 2.0**62


class GramPairContext:
    """A pair (G, H) with the matrix powers used by the pair constraints.

    H is reordered so its twin classes are contiguous; solutions are mapped
    back to the caller's column order.
    """

    def __init__(self, g, h=None, jset: Iterable[int] = (1, 2)):
        self.g = as_int_matrix(g)
        self.n = self.g.shape[0]
        # without H only the single-Gram constraint is available; the
        # column signs are then free, so the first row is fixed to all +1
        self.single = h is None
        self.h_input = self.g if h is None else as_int_matrix(h)
        if self.g.shape != self.h_input.shape:
            raise ValueError("G and H must have the same order")
        if self.single:
            self.charpoly_match = True
            self.framing, self.perm = Framing((self.n,)), list(range(self.n))
            jset = ()
        else:
            self.charpoly_match = char_poly(self.g) == char_poly(self.h_input)
            self.framing, self.perm = initial_framing(self.h_input)
        p = np.asarray(self.perm)
        self.h = self.h_input[np.ix_(p, p)]
        self.jset = tuple(sorted(set(int(j) for j in jset)))
        self.g_pow = {}
        self.h_pow = {}
        for j in self.jset:
            if j < 1:
                raise ValueError("pair constraint degrees start at j = 1")
            gp = matrix_power(self.g, j + 1)
            hp = matrix_power(self.h, j)
            if not _needs_object(self.n, j):
                gp = gp.astype(np.int64)
                hp = hp.astype(np.int64)
            self.g_pow[j] = gp
            self.h_pow[j] = hp

    def restore_columns(self, r: np.ndarray) -> np.ndarray:
        out = np.empty_like(r)
        out[:, self.perm] = r
        return out

    def row_ok(self, rows: np.ndarray, prev: np.ndarray) -> np.ndarray:
        """Pair constraints for candidate new rows given the fixed rows.

        rows: (c, n) candidates for row k; prev: (k, n).  Checks the new
        row/column of G^(j+1) = R H^j R^T for every active j.
        """
        k = prev.shape[0]
        ok = np.ones(rows.shape[0], dtype=bool)
        for j in self.jset:
            hp = self.h_pow[j]
            gp = self.g_pow[j]
            if hp.dtype == object:
                rows_j = rows.astype(object)
                prev_j = prev.astype(object)
            else:
                rows_j, prev_j = rows, prev
            v = rows_j @ hp
            diag = (v * rows_j).sum(axis=1)
            ok &= diag == gp[k, k]
            if k:
                cross = v @ prev_j.T
                ok &= np.all(cross == gp[k, :k][None, :], axis=1)
        return ok


def check_gram_pair(state: FrameState, ctx: GramPairContext, j: int) -> bool:
    """Whether G^(j+1)[:k, :k] == R_1 H^j R_1^T for the k fixed rows."""
    r1 = state.expand().astype(object)
    k = r1.shape[0]
    hp = matrix_power(ctx.h, j)
    lhs = matrix_power(ctx.g, j + 1)[:k, :k]
    return bool(np.all(lhs == r1 @ hp @ r1.T))


@dataclass
class DecompositionOutcome:
    status: str  # "solutions" | "none" | "timeout" | "rejected"
    solutions: list = field(default_factory=list)
    nodes: int = 0
    max_level: int = 0
    elapsed: float = 0.0

    @property
    def decomposes(self) -> bool:
        return self.status == "solutions"

    @property
    def complete(self) -> bool:
        return self.status in ("solutions", "none", "rejected")


class _Budget(Exception):
    pass


class _Found(Exception):
    pass


def _children(ctx: GramPairContext, state: FrameState, prev: np.ndarray):
    k = state.level
    if ctx.single and k == 0:
        xs = np.array([state.widths], dtype=np.int64)
    else:
        xs = solve_frame_system(state, ctx.g[:k, k])
    if not len(xs):
        return xs, xs
    rows = expand_rows(state.widths, xs)
    keep = ctx.row_ok(rows, prev)
    return xs[keep], rows[keep]


def _run(ctx, mode, *, rng=None, fanout=1, budget_nodes=None, budget_seconds=None,
         max_solutions=None, start: FrameState | None = None):
    n = ctx.n
    out = DecompositionOutcome("none")
    t0 = time.monotonic()
    sols = []

    def tick(level):
        out.nodes += 1
        out.max_level = max(out.max_level, level)
        if budget_nodes is not None and out.nodes > budget_nodes:
            raise _Budget
        if budget_seconds is not None and out.nodes % 256 == 0:
            if time.monotonic() - t0 > budget_seconds:
                raise _Budget

    def walk(state: FrameState, prev: np.ndarray):
        tick(state.level)
        if state.level == n:
            sols.append(ctx.restore_columns(prev.copy()))
            if mode == "first" or mode == "random" or (
                    max_solutions is not None and len(sols) >= max_solutions):
                raise _Found
            return
        xs, rows = _children(ctx, state, prev)
        order = np.arange(len(xs))
        if mode == "random":
            rng.shuffle(order)
            order = order[:fanout]
        seen = set()
        for i in order:
            child = refine_framing(state, xs[i])
            key = child.key()
            if key in seen:
                continue
            seen.add(key)
            walk(child, np.vstack([prev, rows[i]]))

    root = initial_state(ctx.framing.widths) if start is None else start
    top = root.expand().astype(np.int64)
    try:
        if mode == "random":
            while not sols:
                walk(root, top)
        else:
            walk(root, top)
    except _Found:
        pass
    except _Budget:
        out.status = "timeout"
    out.solutions = sols
    if sols:
        out.status = "solutions"
    out.elapsed = time.monotonic() - t0
    return out


def _guard(ctx):
    if not ctx.charpoly_match:
        return DecompositionOutcome("rejected")
    return None


def decompose_first(ctx: GramPairContext, **budget) -> DecompositionOutcome:
    """Stop at the first decomposition, or prove there is none."""
    return _guard(ctx) or _run(ctx, "first", **budget)


def decompose_all(ctx: GramPairContext, **budget) -> DecompositionOutcome:
    """Every decomposition with +1's leading inside each frame."""
    return _guard(ctx) or _run(ctx, "all", **budget)


def decompose_random(ctx: GramPairContext, seed: int = 0, fanout: int = 1,
                     **budget) -> DecompositionOutcome:
    """Random dives keeping ``fanout`` children per node, restarted until a
    solution appears or the budget runs out.

    Without a budget this never returns for an indecomposable pair.
    """
    if fanout < 1:
        raise ValueError("fanout must be >= 1")
    guard = _guard(ctx)
    if guard:
        return guard
    rng = np.random.default_rng(seed)
    return _run(ctx, "random", rng=rng, fanout=fanout, **budget)


def children(ctx: GramPairContext, state: FrameState) -> list[FrameState]:
    """Distinct child states of ``state`` passing every active constraint."""
    xs, _ = _children(ctx, state, state.expand().astype(np.int64))
    out, seen = [], set()
    for x in xs:
        c = refine_framing(state, x)
        if c.key() not in seen:
            seen.add(c.key())
            out.append(c)
    return out


def search_from(ctx: GramPairContext, state: FrameState, mode: str = "first",
                **budget) -> DecompositionOutcome:
    """Explore the subtree below ``state`` (rows in the context's column order)."""
    return _guard(ctx) or _run(ctx, mode, start=state, **budget)


def decompose(g, h=None, mode: str = "first", **kw) -> DecompositionOutcome:
    """Convenience wrapper building the context; h defaults to g."""
    jset = kw.pop("jset", (1, 2))
    ctx = GramPairContext(g, g if h is None else h, jset=jset)
    if mode == "first":
        return decompose_first(ctx, **kw)
    if mode == "all":
        return decompose_all(ctx, **kw)
    if mode == "random":
        return decompose_random(ctx, **kw)
    raise ValueError(f"unknown mode {mode!r}")


def enumerate_pairs(candidates) -> list[tuple[int, int]]:
    """Unordered index pairs (i, j), i <= j, with equal characteristic polynomials."""
    mats = [as_int_matrix(c) for c in candidates]
    keys = [m.tobytes() for m in mats]
    if len(set(keys)) != len(keys):
        raise ValueError("candidate list contains duplicates")
    groups: dict = {}
    for i, m in enumerate(mats):
        groups.setdefault(char_poly(m), []).append(i)
    pairs = []
    for members in groups.values():
        pairs.extend((i, i) for i in members)
        pairs.extend(combinations(members, 2))
    return sorted(pairs)


V1_LIMIT = 9


def decompose_v1_oracle(g, limit: int = V1_LIMIT) -> list[np.ndarray]:
    """All R with first row all +1 and R R^T = G, by plain row enumeration."""
    g = as_int_matrix(g)
    n = g.shape[0]
    if n > limit:
        raise ValueError(f"oracle limited to order <= {limit}")
    cands = np.array(np.meshgrid(*[[1, -1]] * n, indexing="ij")).reshape(n, -1).T
    cands = cands[::-1].astype(np.int64)
    out = []

    def walk(rows):
        k = len(rows)
        if k == n:
            out.append(np.array(rows))
            return
        prev = np.array(rows)
        ok = np.all(cands @ prev.T == g[k, :k][None, :], axis=1)
        for row in cands[ok]:
            walk(rows + [row])

    first = np.ones(n, dtype=np.int64)
    if g[0, 0] == n:
        walk([first])
    return out
