"""Exact integer linear algebra shared by the rest of the package.

Matrices are plain numpy arrays.  Small-entry matrices (Gram matrices, sign
matrices) use ``int64``; anything whose entries can outgrow a machine word
(powers, adjugates) uses ``dtype=object`` so that every entry is a Python
``int``.  Determinants and characteristic polynomials are always returned
as Python ints.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np


def as_int_matrix(a) -> np.ndarray:
    """Return ``a`` as a square integer array, rejecting anything else."""
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.dtype == object:
        if not all(isinstance(x, (int, np.integer)) for x in m.flat):
            raise TypeError("object matrix must hold integers")
        return m
    if not np.issubdtype(m.dtype, np.integer):
        if m.size and not np.all(np.equal(np.mod(m, 1), 0)):
            raise TypeError("matrix has non-integer entries")
        m = m.astype(np.int64)
    return m.astype(np.int64, copy=False)


def as_sign_matrix(a, square: bool = True) -> np.ndarray:
    """Validate a {+1,-1} matrix (square unless ``square=False``) as ``int64``."""
    if square:
        m = as_int_matrix(a)
    else:
        m = np.asarray(a)
        if m.ndim != 2:
            raise ValueError(f"expected a matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError("sign matrix must have order >= 1")
    if not np.all((m == 1) | (m == -1)):
        raise ValueError("sign matrix entries must be +1 or -1")
    return m.astype(np.int64)


def to_object(a) -> np.ndarray:
    """Copy an integer array into an object array of Python ints."""
    m = np.asarray(a)
    out = np.empty(m.shape, dtype=object)
    for idx, x in np.ndenumerate(m):
        out[idx] = int(x)
    return out


def identity(n: int, dtype=object) -> np.ndarray:
    out = np.zeros((n, n), dtype=dtype)
    for i in range(n):
        out[i, i] = 1
    return out


def det_exact(m) -> int:
    """Determinant by fraction-free (Bareiss) elimination."""
    a = [[int(x) for x in row] for row in np.asarray(m).tolist()]
    n = len(a)
    if n == 0:
        return 1
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        rowk = a[k]
        for i in range(k + 1, n):
            rowi = a[i]
            aik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (akk * rowi[j] - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def adjugate(m) -> np.ndarray:
    """Exact adjugate, so that ``m @ adjugate(m) == det(m) * I``."""
    a = np.asarray(m)
    n = a.shape[0]
    out = np.empty((n, n), dtype=object)
    if n == 1:
        out[0, 0] = 1
        return out
    for i in range(n):
        rows = [k for k in range(n) if k != i]
        for j in range(n):
            cols = [k for k in range(n) if k != j]
            minor = a[np.ix_(rows, cols)]
            out[j, i] = (-1) ** (i + j) * det_exact(minor)
    return out


class CharPoly(tuple):
    """Monic integer polynomial, coefficients listed from the constant term up.

    ``CharPoly((c0, c1, ..., 1))`` represents ``c0 + c1*x + ... + x**n``.
    """

    def __new__(cls, coeffs: Sequence[int]):
        coeffs = tuple(int(c) for c in coeffs)
        if not coeffs or coeffs[-1] != 1:
            raise ValueError("characteristic polynomial must be monic")
        return super().__new__(cls, coeffs)

    @property
    def degree(self) -> int:
        return len(self) - 1

    def __call__(self, x):
        acc = 0
        for c in reversed(self):
            acc = acc * x + c
        return acc

    def __repr__(self) -> str:
        return f"CharPoly({list(self)})"


def char_poly(m) -> CharPoly:
    """Characteristic polynomial det(x*I - m) by the Faddeev-LeVerrier recurrence.

    Works over the integers: the division by ``k`` at each step is exact.
    Results for int64 inputs are memoized, since pairing and decomposition
    ask for the same candidates many times.
    """
    m = as_int_matrix(m)
    if m.dtype == object:
        return _char_poly(m)
    return _char_poly_cached(m.shape[0], np.ascontiguousarray(m).tobytes())


@lru_cache(maxsize=1 << 16)
def _char_poly_cached(n: int, key: bytes) -> CharPoly:
    return _char_poly(np.frombuffer(key, dtype=np.int64).reshape(n, n))


def _char_poly(m) -> CharPoly:
    a = to_object(m)
    n = a.shape[0]
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    mk = np.zeros((n, n), dtype=object)
    eye = identity(n)
    for k in range(1, n + 1):
        mk = a.dot(mk) + coeffs[n - k + 1] * eye
        tr = int(np.trace(a.dot(mk)))
        q, rem = divmod(-tr, k)
        assert rem == 0
        coeffs[n - k] = q
    return CharPoly(coeffs)


def gram(r) -> np.ndarray:
    """Gram matrix R R^T of an m x n design."""
    r = as_sign_matrix(r, square=False)
    return r @ r.T


def dual_gram(r) -> np.ndarray:
    """Dual Gram matrix R^T R of an m x n design."""
    r = as_sign_matrix(r, square=False)
    return r.T @ r


def is_parity_normalized(r) -> bool:
    r = np.asarray(r)
    pos = r == 1
    return bool(np.all(pos.sum(axis=1) % 2 == 0) and np.all(pos.sum(axis=0) % 2 == 0))


def parity_normalize(r) -> np.ndarray:
    """Negate rows, then columns, so every line has an even number of +1's.

    For odd order this reaches the unique parity-normalized matrix in the
    orbit under row and column negations.  Negating the odd columns never
    spoils the rows: their number is even, because the total count of +1
    entries is already even after the row pass.
    """
    r = as_sign_matrix(r).copy()
    n = r.shape[0]
    if n % 2 == 0:
        raise ValueError("parity normalization requires odd order")
    odd_rows = (r == 1).sum(axis=1) % 2 == 1
    r[odd_rows] *= -1
    odd_cols = (r == 1).sum(axis=0) % 2 == 1
    r[:, odd_cols] *= -1
    return r


def matrix_power(m, j: int) -> np.ndarray:
    """Exact ``m**j`` as an object array (``m**0`` is the identity)."""
    if j < 0:
        raise ValueError("exponent must be nonnegative")
    a = to_object(as_int_matrix(m))
    result = identity(a.shape[0])
    base = a
    while j:
        if j & 1:
            result = result.dot(base)
        j >>= 1
        if j:
            base = base.dot(base)
    return result


def is_perfect_square(x: int) -> bool:
    if x < 0:
        return False
    from math import isqrt

    s = isqrt(x)
    return s * s == x
