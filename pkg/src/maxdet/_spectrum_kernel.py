"""numba kernels for the determinant-spectrum local search."""
import numba
import numpy as np


@numba.njit(cache=True)
def det_int(a):
    """Exact determinant of a small integer matrix (Bareiss, int64).

    Safe while every minor fits in int64, e.g. {+1,-1} matrices up to order 17.
    """
    n = a.shape[0]
    if n == 0:
        return 1
    m = a.astype(np.int64).copy()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k, k] == 0:
            p = -1
            for i in range(k + 1, n):
                if m[i, k] != 0:
                    p = i
                    break
            if p < 0:
                return 0
            for j in range(n):
                t = m[k, j]
                m[k, j] = m[p, j]
                m[p, j] = t
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i, j] = (m[i, j] * m[k, k] - m[i, k] * m[k, j]) // prev
        prev = m[k, k]
    return sign * m[n - 1, n - 1]


@numba.njit(cache=True)
def cofactors(r):
    """Matrix of cofactors C with det(r) = sum_j r[i, j] C[i, j]."""
    n = r.shape[0]
    c = np.zeros((n, n), np.int64)
    if n == 1:
        c[0, 0] = 1
        return c
    sub = np.empty((n - 1, n - 1), np.int64)
    for i in range(n):
        for j in range(n):
            a = 0
            for ii in range(n):
                if ii == i:
                    continue
                b = 0
                for jj in range(n):
                    if jj == j:
                        continue
                    sub[a, b] = r[ii, jj]
                    b += 1
                a += 1
            v = det_int(sub)
            c[i, j] = v if (i + j) % 2 == 0 else -v
    return c
