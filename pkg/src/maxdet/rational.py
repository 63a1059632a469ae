"""Rational equivalence of quadratic forms (Hasse-Minkowski) and the
indecomposability test for Gram pairs built on it.

A Gram pair (G, H) can only come from a real design if G^(j+1) and H^j are
rationally equivalent for every j >= 0 (R itself is the transform).  Since
G^(2a+1) = G^a G G^a and G^(2a) = G^a I G^a, every such check is equivalent
to one of "G ~ I" or "H ~ I"; the reduced mode uses this directly, the
literal mode evaluates each power for cross-checking.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sympy import factorint, isprime

from .exact import as_int_matrix, char_poly, det_exact, identity, matrix_power

log = logging.getLogger(__name__)


class SingularFormError(ValueError):
    pass


class UnfactoredError(RuntimeError):
    """Raised when a determinant could not be factored within the effort limit."""


@dataclass(frozen=True)
class DiagonalForm:
    """Diagonal entries d with U A U^T = diag(d), all exact rationals."""

    entries: tuple
    u: tuple

    @property
    def n(self) -> int:
        return len(self.entries)

    def matrix(self):
        return [[self.entries[i] if i == j else Fraction(0) for j in range(self.n)]
                for i in range(self.n)]


@dataclass(frozen=True)
class PSignature:
    p: int
    value: int


def _fraction_matrix(a):
    if isinstance(a, np.ndarray) and a.dtype != object:
        a = a.tolist()
    return [[Fraction(x) for x in row] for row in a]


def _congruence(u, a):
    n = len(a)
    ua = [[sum(u[i][k] * a[k][j] for k in range(n) if u[i][k]) for j in range(n)]
          for i in range(n)]
    return [[sum(ua[i][k] * u[j][k] for k in range(n) if u[j][k]) for j in range(n)]
            for i in range(n)]


def diagonalize(a, check: bool = True) -> DiagonalForm:
    """Congruence-diagonalize a nonsingular symmetric rational matrix.

    Symmetric elimination; when the pivot is zero, a later row with nonzero
    diagonal is swapped in, or failing that a row with a nonzero coupling is
    added to create one.
    """
    a0 = _fraction_matrix(a)
    n = len(a0)
    if any(len(row) != n for row in a0):
        raise ValueError("matrix must be square")
    if any(a0[i][j] != a0[j][i] for i in range(n) for j in range(i)):
        raise ValueError("matrix must be symmetric")
    w = [row[:] for row in a0]
    u = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def swap(i, j):
        w[i], w[j] = w[j], w[i]
        for row in w:
            row[i], row[j] = row[j], row[i]
        u[i], u[j] = u[j], u[i]

    def add(src, dst, f):
        # row/col dst += f * row/col src
        w[dst] = [x + f * y for x, y in zip(w[dst], w[src])]
        for row in w:
            row[dst] += f * row[src]
        u[dst] = [x + f * y for x, y in zip(u[dst], u[src])]

    for k in range(n):
        if w[k][k] == 0:
            j = next((j for j in range(k + 1, n) if w[j][j] != 0), None)
            if j is not None:
                swap(k, j)
            else:
                j = next((j for j in range(k + 1, n) if w[k][j] != 0), None)
                if j is None:
                    raise SingularFormError("matrix is singular")
                add(j, k, Fraction(1))
        piv = w[k][k]
        for i in range(k + 1, n):
            if w[i][k] != 0:
                add(k, i, -w[i][k] / piv)
    d = tuple(w[i][i] for i in range(n))
    if any(x == 0 for x in d):
        raise SingularFormError("matrix is singular")
    if check:
        assert _congruence(u, a0) == [[d[i] if i == j else 0 for j in range(n)]
                                      for i in range(n)]
    return DiagonalForm(d, tuple(tuple(r) for r in u))


def _split(x: Fraction, p: int):
    """x = p^alpha * u with u a p-adic unit; returns (alpha, num, den) of u."""
    num, den = x.numerator, x.denominator
    alpha = 0
    while num % p == 0:
        num //= p
        alpha += 1
    while den % p == 0:
        den //= p
        alpha -= 1
    return alpha, num, den


def p_signature(form: DiagonalForm, p: int) -> PSignature:
    """Conway-Sloane invariant of a diagonal form.

    p odd: the p-excess, sum(p^alpha - 1) + 4k mod 8, k counting entries with
    odd alpha and non-residue unit part.  p = 2: the oddity, sum(u) + 4k
    mod 8 with k counting odd alpha and u = +-3 mod 8.  p = -1: the exact
    signature n_plus - n_minus.
    """
    d = form.entries
    if p == -1:
        return PSignature(-1, sum(1 if x > 0 else -1 for x in d))
    if p < 2 or not isprime(p):
        raise ValueError("p must be a prime or -1")
    total = 0
    for x in d:
        alpha, num, den = _split(Fraction(x), p)
        if p == 2:
            unit = (num * den) % 8
            total += unit
            if alpha % 2 and unit in (3, 5):
                total += 4
        else:
            total += pow(p, alpha % 2) - 1
            if alpha % 2 and pow(num * den, (p - 1) // 2, p) == p - 1:
                total += 4
    return PSignature(p, total % 8)


def _is_rational_square(x: Fraction) -> bool:
    if x < 0:
        return False
    return all(math.isqrt(v) ** 2 == v for v in (x.numerator, x.denominator))


def prime_factors(x: int, effort: int = 10**6) -> list[int]:
    """Distinct prime factors of |x|; raises UnfactoredError if a composite
    part survives trial division up to ``effort`` and the bounded
    rho/p-1 stages."""
    x = abs(int(x))
    if x <= 1:
        return []
    f = factorint(x, limit=effort, use_ecm=False)
    out = set()
    for q in f:
        if isprime(q):
            out.add(int(q))
            continue
        g = factorint(q, limit=effort, use_trial=False, use_rho=True, use_pm1=True,
                      use_ecm=False)
        if not all(isprime(r) for r in g):
            raise UnfactoredError(f"could not factor {q}")
        out.update(int(r) for r in g)
    return sorted(out)


def _integral_scale(a) -> list:
    """A rational matrix times a square, made integral (same rational class)."""
    fa = _fraction_matrix(a)
    den = 1
    for row in fa:
        for x in row:
            den = math.lcm(den, x.denominator)
    return [[x * den * den for x in row] for row in fa]


def relevant_primes(a, b, effort: int = 10**6) -> list[int]:
    """Primes at which the p-signatures of a and b may differ.

    For integral forms with p not dividing 2 det, both are unimodular over
    the p-adic integers and have trivial p-excess, so only primes of
    2 det(a) det(b) need checking.
    """
    primes = {2}
    for m in (a, b):
        det = det_exact([[int(x) for x in row] for row in _integral_scale(m)])
        if det == 0:
            raise SingularFormError("matrix is singular")
        primes.update(prime_factors(det, effort))
    return sorted(primes)


def rationally_equivalent(a, b, effort: int = 10**6) -> bool:
    """Hasse-Minkowski: same order, square determinant ratio, equal
    p-signatures at p = -1 and every relevant prime."""
    fa, fb = _fraction_matrix(a), _fraction_matrix(b)
    if len(fa) != len(fb):
        raise ValueError("forms have different orders")
    da, db = diagonalize(fa), diagonalize(fb)
    ratio = math.prod(da.entries, start=Fraction(1)) / math.prod(db.entries, start=Fraction(1))
    if not _is_rational_square(ratio):
        return False
    if p_signature(da, -1) != p_signature(db, -1):
        return False
    for p in relevant_primes(fa, fb, effort):
        if p_signature(da, p) != p_signature(db, p):
            return False
    return True


@dataclass(frozen=True)
class HMCertificate:
    status: str  # "ruled-out" | "inconclusive" | "inconclusive (unfactored)"
    j: int | None = None
    direction: str | None = None  # "G^(j+1)~H^j" or "H^(j+1)~G^j"

    @property
    def ruled_out(self) -> bool:
        return self.status == "ruled-out"


def hm_indecomposability(g, h, mode: str = "reduced", jmax: int | None = None,
                         effort: int = 10**6) -> HMCertificate:
    """Least j < n at which the rational-equivalence necessary condition fails.

    mode="reduced" uses G^(2a+1) ~ G and G^(2a) ~ I, so the least failing j,
    if any, is 0; mode="literal" forms every power (slow, for cross-checks).
    """
    g, h = as_int_matrix(g), as_int_matrix(h)
    n = g.shape[0]
    if char_poly(g) != char_poly(h):
        raise ValueError("G and H must have the same characteristic polynomial")
    last = n - 1 if jmax is None else min(jmax, n - 1)
    eye = identity(n)
    try:
        if mode == "reduced":
            g_ok = rationally_equivalent(g, eye, effort)
            h_ok = rationally_equivalent(h, eye, effort)
            if not g_ok:
                return HMCertificate("ruled-out", 0, "G^(j+1)~H^j")
            if not h_ok:
                return HMCertificate("ruled-out", 0, "H^(j+1)~G^j")
            return HMCertificate("inconclusive")
        if mode != "literal":
            raise ValueError(f"unknown mode {mode!r}")
        for j in range(last + 1):
            if not rationally_equivalent(matrix_power(g, j + 1), matrix_power(h, j), effort):
                return HMCertificate("ruled-out", j, "G^(j+1)~H^j")
            if not rationally_equivalent(matrix_power(h, j + 1), matrix_power(g, j), effort):
                return HMCertificate("ruled-out", j, "H^(j+1)~G^j")
    except UnfactoredError:
        return HMCertificate("inconclusive (unfactored)")
    return HMCertificate("inconclusive")
