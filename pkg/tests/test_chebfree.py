from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freestein.chebfree import (UPoly, UTensor, bochner_residual, gamma2_gap, grid_minimum, is_grid_nonnegative,
                                j_u_apply, ou_apply, ou_tensor_apply, u_expand, u_monomial, u_values)
from freestein.measure import semicircle


def U(*pairs):
    return UPoly(dict(pairs))


def T(*items):
    return UTensor(dict(items))


def test_u_expand_examples():
    assert u_expand([0, 1]) == U((1, 1))
    assert u_expand([0, 0, 1]) == U((2, 1), (0, 1))
    assert u_expand([0, 0, 0, 1]) == U((3, 1), (1, 2))


def test_standard_recursion():
    # U_2 = x^2 - 1 and U_3 = x^3 - 2x under U_{n+1} = x U_n - U_{n-1}
    assert u_monomial(2) == [-1, 0, 1]
    assert u_monomial(3) == [0, -2, 0, 1]


def test_ou_apply_examples():
    assert ou_apply(UPoly.basis(3)) == U((3, -3))
    assert ou_apply(UPoly.basis(0)).is_zero()
    assert ou_apply(u_expand([0, 0, 1])) == U((2, -2))


def test_j_u_apply_examples():
    assert j_u_apply(UPoly.basis(1)) == T(((0, 0), 1))
    assert j_u_apply(UPoly.basis(2)) == T(((1, 0), 1), ((0, 1), 1))
    assert j_u_apply(UPoly.basis(3)).eval_exact(1, 2) == 5


def test_tensor_product_examples():
    one = T(((0, 0), 1))
    assert one * one == one
    u1 = T(((1, 0), 1))
    assert u1 * u1 == T(((2, 0), 1), ((0, 0), 1))
    j2 = j_u_apply(UPoly.basis(2))
    assert j2 * j2 == T(((2, 0), 1), ((0, 2), 1), ((1, 1), 2), ((0, 0), 2))


def test_bochner_examples():
    assert j_u_apply(ou_apply(UPoly.basis(1))) == T(((0, 0), -1))
    for n in range(13):
        assert bochner_residual(UPoly.basis(n)).is_zero()


def test_gamma2_gap_examples():
    assert gamma2_gap(1).is_zero()
    assert gamma2_gap(2) == T(((0, 0), 4))
    for n in range(1, 11):
        assert is_grid_nonnegative(gamma2_gap(n))
    with pytest.raises(ValueError):
        gamma2_gap(13)


def test_orthonormality():
    x, w = semicircle().quadrature(64)
    V = np.array(u_values(12, x))
    G = (V * w) @ V.T
    assert np.max(np.abs(G - np.eye(13))) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 12), st.fractions(-3, 3, max_denominator=20), st.fractions(-3, 3, max_denominator=20))
def test_j_u_matches_divided_difference(n, x, y):
    if x == y:
        return
    p = u_monomial(n)
    val = lambda t: sum(c * t ** k for k, c in enumerate(p))
    assert j_u_apply(UPoly.basis(n)).eval_exact(x, y) == (val(x) - val(y)) / (x - y)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=9), min_size=1, max_size=9))
def test_ou_spectrum(coeffs):
    p = u_expand(coeffs)
    lp = ou_apply(p)
    assert set(lp.coeffs) <= set(p.coeffs)
    assert all(lp.coeffs.get(n, 0) == -n * c for n, c in p.coeffs.items())
    assert ou_apply(UPoly.basis(1)) == UPoly.basis(1).scale(-1)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.fractions(-3, 3, max_denominator=7), min_size=7, max_size=7))
def test_bakry_emery_random_combinations(a):
    # Gamma_2(f) - Gamma(f) = (L2 (Jf)^2 - 2 L2(Jf) Jf)/2 on the semicircular manifold
    p = UPoly(dict(enumerate(a)))
    j = j_u_apply(p)
    gap = ou_tensor_apply(j * j) - (ou_tensor_apply(j) * j).scale(2)
    assert grid_minimum(gap.scale(Fraction(1, 2)), 32) >= -1e-10


@settings(max_examples=15, deadline=None)
@given(st.lists(st.fractions(-3, 3, max_denominator=7), min_size=1, max_size=8))
def test_monomial_roundtrip(c):
    p = u_expand(c)
    back = p.to_monomial()
    trimmed = list(c)
    while len(trimmed) > 1 and trimmed[-1] == 0:
        trimmed.pop()
    assert back[:len(trimmed)] == trimmed or (p.is_zero() and all(v == 0 for v in c))
