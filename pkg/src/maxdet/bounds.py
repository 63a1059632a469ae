"""Determinant upper bounds: global bounds by order and completion bounds
used to prune the candidate Gram search.

All bounds on D_n are stored squared so they stay rational; comparisons
against a squared threshold are then exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exact import adjugate, as_int_matrix, det_exact


class PreconditionError(ValueError):
    """An argument violates the documented precondition of a bound."""


@dataclass(frozen=True)
class BoundValue:
    n: int
    squared: Fraction

    @property
    def value(self) -> float:
        """Decimal approximation of the bound itself (not squared)."""
        return math.sqrt(self.squared.numerator) / math.sqrt(self.squared.denominator)

    @property
    def floor(self) -> int:
        """Largest integer D with D**2 <= squared."""
        return math.isqrt(self.squared.numerator // self.squared.denominator)

    @property
    def scaled_squared(self) -> Fraction:
        """Squared bound on d_n = D_n / 2**(n-1)."""
        return self.squared / 4 ** (self.n - 1)

    @property
    def scaled(self) -> float:
        return self.value / 2 ** (self.n - 1)


@dataclass(frozen=True)
class EhlichParams:
    n: int
    s: int
    r: int
    u: int
    v: int


def hadamard_bound(n: int) -> BoundValue:
    if n < 1:
        raise ValueError("order must be positive")
    return BoundValue(n, Fraction(n**n))


def ehlich_barba_bound(n: int) -> BoundValue:
    if n < 1 or n % 2 == 0:
        raise ValueError("Ehlich-Barba bound needs odd n")
    return BoundValue(n, Fraction((n - 1) ** (n - 1) * (2 * n - 1)))


def ehlich_params(n: int) -> EhlichParams:
    if n % 4 != 3:
        raise ValueError("Ehlich bound needs n = 3 (mod 4)")
    if n == 3:
        s = 3
    elif n == 7:
        s = 5
    elif n <= 59:
        s = 6
    else:
        s = 7
    r = n // s
    v = n - r * s
    return EhlichParams(n, s, r, s - v, v)


def ehlich_bound(n: int) -> BoundValue:
    p = ehlich_params(n)
    a = n - 3 + 4 * p.r
    b = n + 1 + 4 * p.r
    head = 1 if n == 3 else (n - 3) ** (n - p.s)
    tail = 1 - Fraction(p.u * p.r, a) - Fraction(p.v * (p.r + 1), b)
    return BoundValue(n, head * a**p.u * b**p.v * tail)


def bordered_det(m, gamma, corner: int) -> int:
    """det [[M, g], [g^T, corner]] computed as corner*det(M) - g^T adj(M) g."""
    m = as_int_matrix(m)
    g = [int(x) for x in gamma]
    adj = adjugate(m)
    quad = sum(g[i] * adj[i, j] * g[j] for i in range(len(g)) for j in range(len(g)))
    return corner * det_exact(m) - quad


def allowable_vectors(m, n: int, phi):
    """Vectors g over phi with [[M, g], [g^T, n]] positive definite.

    Coordinates are fixed one at a time; the Cholesky factor of M gives the
    partial quadratic form, which only grows, so hopeless prefixes are cut.
    """
    m = as_int_matrix(m)
    r = m.shape[0]
    chol = np.linalg.cholesky(m.astype(float))
    phi = sorted(phi, reverse=True)
    out = []
    y = np.zeros(r)
    g = [0] * r

    def walk(i, partial):
        if i == r:
            out.append(tuple(g))
            return
        c = float(chol[i, :i] @ y[:i])
        for v in phi:
            yi = (v - c) / chol[i, i]
            s = partial + yi * yi
            if s >= n * (1 + 1e-9):
                continue
            g[i] = v
            y[i] = yi
            walk(i + 1, s)

    walk(0, 0.0)
    # float filter above is permissive; confirm positivity exactly
    adj = adjugate(m)
    det = det_exact(m)
    keep = []
    for v in out:
        quad = sum(v[i] * adj[i, j] * v[j] for i in range(r) for j in range(r))
        if n * det - quad > 0:
            keep.append(v)
    return keep


def d_star(m, c: int = 1, gammas=None, *, n: int | None = None, phi=None):
    """Largest bordered determinant det [[M, g], [g^T, c]] over allowable g.

    ``gammas`` may be given explicitly; otherwise it is generated from
    ``phi`` (default: the admissible values for order ``n``).
    Returns ``(d, g)``.
    """
    m = as_int_matrix(m)
    if gammas is None:
        if n is None:
            n = int(m[0, 0])
        if phi is None:
            from .gramsearch import admissible_values

            phi = admissible_values(n)
        gammas = allowable_vectors(m, n, phi)
    gammas = [tuple(int(x) for x in g) for g in gammas]
    if not gammas:
        raise ValueError("no allowable vectors")
    adj = adjugate(m)
    det = det_exact(m)
    r = m.shape[0]
    best = None
    for g in gammas:
        val = c * det - sum(g[i] * adj[i, j] * g[j] for i in range(r) for j in range(r))
        if best is None or val > best[0]:
            best = (val, g)
    return best


def km_bound(m, n: int, c: int, d: int) -> int:
    """u_r(c, d) = (n-c)^(n-r-1) [(n-c) det M_r + (n-r) max(0, d)]."""
    m = as_int_matrix(m)
    r = m.shape[0]
    if not 0 < c <= n:
        raise PreconditionError("need 0 < c <= n")
    if r >= n:
        raise PreconditionError("need r < n")
    return (n - c) ** (n - r - 1) * ((n - c) * det_exact(m) + (n - r) * max(0, d))


def sharper_bound(m, n: int, d: int) -> int:
    m = as_int_matrix(m)
    r = m.shape[0]
    if n % 4 != 3:
        raise PreconditionError("sharper bound needs n = 3 (mod 4)")
    if r >= n:
        raise PreconditionError("need r < n")
    k = n - r
    coef = (n - 1) ** k - (n - 3) ** k - k * (n - 3) ** (k - 1)
    return (n - 1) ** k * det_exact(m) + coef * max(0, d)


def partitions(total: int, largest: int | None = None):
    """Integer partitions of ``total`` in decreasing lexicographic order."""
    if largest is None:
        largest = total
    if total == 0:
        yield ()
        return
    for p in range(min(total, largest), 0, -1):
        for rest in partitions(total - p, p):
            yield (p,) + rest


def partition_block_matrix(m, n: int, blocks) -> np.ndarray:
    """The completion of M_r whose trailing part is a block matrix.

    Diagonal blocks are (n-3)I + 3J, off-diagonal blocks -J, and every
    border column is the all -1 vector.
    """
    m = as_int_matrix(m)
    r = m.shape[0]
    total = r + sum(blocks)
    a = np.full((total, total), -1, dtype=np.int64)
    a[:r, :r] = m
    start = r
    for b in blocks:
        a[start:start + b, start:start + b] = 3
        start += b
    np.fill_diagonal(a, n)
    return a


@lru_cache(maxsize=None)
def _partition_factors(n: int, total: int):
    out = []
    for b in partitions(total):
        k = len(b)
        p = (n - 3) ** (total - k) * math.prod(n - 3 + 4 * x for x in b)
        s = sum(Fraction(x, n - 3 + 4 * x) for x in b)
        out.append((b, p, s))
    return tuple(out)


def partition_bound_preconditions(m, n: int) -> str | None:
    """Why the partition bound may not be used for M_r, or None if it may."""
    m = as_int_matrix(m)
    r = m.shape[0]
    if n % 4 != 3:
        return "n is not 3 (mod 4)"
    if r >= n:
        return "r must be less than n"
    if any(int(m[i, r - 1]) != -1 for i in range(r - 1)):
        return "last column of M_r is not all -1"
    if not det_exact(m) > (n - 3) * det_exact(m[: r - 1, : r - 1]):
        return "det M_r <= (n-3) det M_(r-1)"
    return None


def partition_bound(m, n: int, *, with_blocks: bool = False):
    """Best block-structured completion of M_r with all -1 borders.

    Schur complement against M_r reduces every candidate to
    det(M_r) * (n-3)^(N-k) * prod(n-3+4b_i) * (1 - (1+s) sum b_i/(n-3+4b_i))
    where s = j^T M_r^{-1} j, so only a scalar changes between partitions.

    The all -1 borders make this a heuristic rather than a true bound: some
    prefixes complete to larger determinants (e.g. the all -1 order-4
    prefix at n=7), so the search uses it only when asked to.
    """
    m = as_int_matrix(m)
    why = partition_bound_preconditions(m, n)
    if why is not None:
        raise PreconditionError(why)
    r = m.shape[0]
    det = det_exact(m)
    adj = adjugate(m)
    s = Fraction(int(adj.sum()), det)
    best = None
    for b, p, ssum in _partition_factors(n, n - r):
        val = det * p * (1 - (1 + s) * ssum)
        assert val.denominator == 1
        val = int(val)
        if best is None or val > best[0]:
            best = (val, b)
    return best if with_blocks else best[0]


def is_block_matrix(a, n: int) -> bool:
    """Off-diagonals all -1 or 3, and every 3 at (i, j) joins columns that
    agree outside rows i and j."""
    a = as_int_matrix(a)
    p = a.shape[0]
    if not np.array_equal(a, a.T) or not np.all(np.diag(a) == n):
        return False
    off = a[~np.eye(p, dtype=bool)]
    if not np.all((off == -1) | (off == 3)):
        return False
    for i, j in itertools.combinations(range(p), 2):
        if a[i, j] == 3:
            rows = [k for k in range(p) if k != i and k != j]
            if not np.array_equal(a[rows, i], a[rows, j]):
                return False
    return True
