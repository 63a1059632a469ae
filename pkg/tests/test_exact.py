import numpy as np
import pytest
import sympy

from conftest import G7, random_sign_matrix
from maxdet.exact import (CharPoly, adjugate, as_int_matrix, as_sign_matrix, char_poly,
                          det_exact, dual_gram, gram, identity, is_parity_normalized,
                          is_perfect_square, matrix_power, parity_normalize)


def test_det_small_cases():
    assert det_exact(np.eye(5, dtype=int)) == 1
    assert det_exact([[7, 3], [3, 7]]) == 40
    assert det_exact(G7) == 331776 == 576 ** 2


def test_det_matches_sympy(rng):
    for n in (1, 2, 5, 9, 13):
        for _ in range(5):
            a = rng.integers(-9, 10, size=(n, n))
            assert det_exact(a) == int(sympy.Matrix(a.tolist()).det())


def test_det_handles_huge_entries():
    a = np.array([[10**30, 1], [1, 10**30]], dtype=object)
    assert det_exact(a) == 10**60 - 1


def test_det_zero_pivot_and_singular():
    assert det_exact([[0, 1], [1, 0]]) == -1
    assert det_exact([[1, 2], [2, 4]]) == 0


def test_adjugate_identity(rng):
    a = rng.integers(-5, 6, size=(6, 6))
    adj = adjugate(a)
    assert (a.astype(object).dot(adj) == det_exact(a) * identity(6)).all()


def test_char_poly_small():
    assert char_poly([[7]]) == CharPoly((-7, 1))
    assert char_poly(np.eye(2, dtype=int)) == CharPoly((1, -2, 1))


def test_char_poly_matches_sympy(rng):
    x = sympy.symbols("x")
    for n in (3, 7, 11):
        a = rng.integers(-7, 8, size=(n, n))
        ref = sympy.Matrix(a.tolist()).charpoly(x).all_coeffs()
        assert list(char_poly(a)) == [int(c) for c in reversed(ref)]


def test_char_poly_constant_term_is_signed_det(rng):
    a = rng.integers(-4, 5, size=(7, 7))
    assert char_poly(a)[0] == (-1) ** 7 * det_exact(a)


def test_gram_small():
    ones = np.ones((2, 2), dtype=int)
    assert (gram(ones) == [[2, 2], [2, 2]]).all()
    h = [[1, 1], [1, -1]]
    assert (gram(h) == 2 * np.eye(2)).all()
    assert (dual_gram(h) == 2 * np.eye(2)).all()


def test_gram_and_dual_share_char_poly(rng):
    r = random_sign_matrix(rng, 9)
    assert char_poly(gram(r)) == char_poly(dual_gram(r))


def test_parity_normalize_one_by_one():
    assert (parity_normalize([[1]]) == [[-1]]).all()


def test_parity_normalize_idempotent_and_valid(rng):
    for _ in range(100):
        r = random_sign_matrix(rng, 7)
        out = parity_normalize(r)
        assert is_parity_normalized(out)
        assert (parity_normalize(out) == out).all()
        # only row and column negations were applied
        assert (np.abs(out) == 1).all()
        assert abs(det_exact(out)) == abs(det_exact(r))


def test_parity_normalize_rejects_even_order():
    with pytest.raises(ValueError):
        parity_normalize(np.ones((2, 2), dtype=int))


def test_matrix_power():
    assert (matrix_power([[5, 1], [1, 5]], 0) == identity(2)).all()
    assert (matrix_power([[2, 0], [0, 3]], 3) == [[8, 0], [0, 27]]).all()


def test_perfect_square():
    assert is_perfect_square(331776)
    assert is_perfect_square(0)
    assert not is_perfect_square(331777)
    assert not is_perfect_square(-4)


def test_input_validation():
    with pytest.raises(ValueError):
        as_sign_matrix([[1, 0]])
    with pytest.raises(TypeError):
        as_int_matrix([[1.5]])
