import numpy as np
import pytest

# the order-7 Gram matrix with blocks (2,2,2,1) used throughout the tests
G7 = np.array([
    [7, 3, -1, -1, -1, -1, -1],
    [3, 7, -1, -1, -1, -1, -1],
    [-1, -1, 7, 3, -1, -1, -1],
    [-1, -1, 3, 7, -1, -1, -1],
    [-1, -1, -1, -1, 7, 3, -1],
    [-1, -1, -1, -1, 3, 7, -1],
    [-1, -1, -1, -1, -1, -1, 7],
], dtype=np.int64)


@pytest.fixture
def g7():
    return G7.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_sign_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.choice(np.array([-1, 1], dtype=np.int64), size=(m, n))


def random_signed_perm(rng, n):
    p = np.zeros((n, n), dtype=np.int64)
    p[np.arange(n), rng.permutation(n)] = rng.choice([-1, 1], size=n)
    return p
