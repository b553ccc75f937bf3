from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freestein import ncfree as nc
from freestein.errors import ArityMismatch, ConstantTermInSymmetrize, DegreeTooLarge, NotPositiveDefinite
from freestein.ncfree import NCPoly, NCTensor

CATALAN = [1, 1, 2, 5, 14, 42, 132]


def t(i, n=3):
    return NCPoly.var(i, n)


def simple(a, b, n=3):
    return NCTensor(n, {(tuple(a), tuple(b)): 1})


def polys(arity, max_degree=6, max_terms=5):
    words = st.integers(0, max_degree).flatmap(
        lambda d: st.lists(st.integers(1, arity), min_size=d, max_size=d).map(tuple))
    coeffs = st.fractions(-3, 3, max_denominator=4)
    return st.dictionaries(words, coeffs, max_size=max_terms).map(lambda d: NCPoly(arity, d))


arity_and_polys = st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), polys(n), polys(n)))


def test_partial_examples():
    p = t(1) * t(2) * t(1)
    assert nc.partial(p, 1) == simple((), (2, 1)) + simple((1, 2), ())
    assert nc.partial(t(2), 1).is_zero()


def test_leibniz_example():
    p, q = t(1) * t(2), t(1)
    lhs = nc.partial(p * q, 1)
    one = NCPoly.const(1, 3)
    rhs = nc.partial(p, 1) * NCTensor.simple(one, q) + NCTensor.simple(p, one) * nc.partial(q, 1)
    assert lhs == rhs == simple((), (2, 1)) + simple((1, 2), ())


def test_cyclic_examples():
    assert nc.cyclic(t(1) * t(2) * t(1), 1) == t(2) * t(1) + t(1) * t(2)
    K = nc.CovarianceMatrix([[2, Fraction(1, 3), 0], [Fraction(1, 3), 1, 0], [0, 0, 3]])
    assert nc.cyclic_gradient(nc.quadratic_potential(K)) == nc.linear_tuple(K)


def test_jacobian_examples():
    J = nc.jacobian((t(1), t(2), t(3)))
    one = NCTensor.one(3)
    assert all(J[i, j] == (one if i == j else NCTensor(3)) for i in range(3) for j in range(3))
    K = nc.CovarianceMatrix([[2, 1], [1, 3]])
    J = nc.jacobian(nc.cyclic_gradient(nc.quadratic_potential(K)))
    assert all(J[i, j] == NCTensor.one(2).scale(K[i, j]) for i in range(2) for j in range(2))


def test_number_and_symmetrize():
    assert nc.number_op(t(1) * t(2)) == (t(1) * t(2)).scale(2)
    w = t(1) * t(2) * t(3)
    assert nc.symmetrize(w) == (w + t(2) * t(3) * t(1) + t(3) * t(1) * t(2)).scale(Fraction(1, 3))
    with pytest.raises(ConstantTermInSymmetrize):
        nc.symmetrize(w + NCPoly.const(1, 3))


def test_sharp_and_substitute():
    assert nc.sharp(simple((1,), (2,)), t(3)) == t(1) * t(3) * t(2)
    q1, q2 = t(1, 2) + t(2, 2), t(1, 2) * t(1, 2)
    assert nc.substitute(t(1, 2) * t(2, 2), (q1, q2)) == q1 * q2


def test_semicircular_moments():
    I2 = nc.CovarianceMatrix.identity(2)
    assert nc.semicircular_moment(I2, (1, 1, 1, 1)) == 2
    assert nc.semicircular_moment(I2, (1, 2, 1, 2)) == 0
    assert nc.semicircular_moment(I2, (1, 2, 2, 1)) == 1
    for m in range(7):
        assert nc.semicircular_moment(I2, (1,) * (2 * m)) == CATALAN[m]
        assert nc.semicircular_moment(I2, (1,) * (2 * m + 1)) == 0


def test_sd_examples():
    x1 = NCPoly.var(1, 1)
    assert nc.sd_residual_nc((x1 ** 3,)) == 0
    assert nc.sd_residual_nc((NCPoly.var(2, 2), NCPoly(2))) == 0
    with pytest.raises(DegreeTooLarge):
        nc.sd_residual_nc((x1 ** 7,))
    with pytest.raises(ArityMismatch):
        nc.sd_residual_nc((x1, x1))


@pytest.mark.parametrize("K", [[[1, 0], [0, 1]], [[2, 0], [0, 1]], [[1, Fraction(1, 4)], [Fraction(1, 4), 1]]])
def test_quadratic_stein(K):
    r = nc.quadratic_stein_check(nc.CovarianceMatrix(K))
    assert r["pass"] and r["residual"] == 0 and r["monomials_checked"] == 31


def test_covariance_moment_oracle():
    K = nc.CovarianceMatrix([[2, 0], [0, 1]])
    assert nc.tau(NCPoly.var(1, 2) ** 2, K) == 2


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        nc.CovarianceMatrix([[1, 2], [2, 1]])


def test_norm_examples():
    assert nc.norm_R(t(1), 2) == 2
    assert nc.norm_R(t(1) * t(2) + t(1).scale(3), 2) == 10


@settings(max_examples=40, deadline=None)
@given(arity_and_polys)
def test_leibniz(data):
    n, p, q = data
    one = NCPoly.const(1, n)
    for j in range(1, n + 1):
        rhs = nc.partial(p, j) * NCTensor.simple(one, q) + NCTensor.simple(p, one) * nc.partial(q, j)
        assert nc.partial(p * q, j) == rhs


@settings(max_examples=40, deadline=None)
@given(arity_and_polys)
def test_coassociativity(data):
    n, p, _ = data
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            assert nc.partial_left(nc.partial(p, j), i) == nc.partial_right(nc.partial(p, i), j)


@settings(max_examples=40, deadline=None)
@given(arity_and_polys)
def test_cyclic_is_flipped_multiplication(data):
    n, p, _ = data
    for j in range(1, n + 1):
        assert nc.cyclic(p, j) == nc.partial(p, j).flip().multiply()


@settings(max_examples=40, deadline=None)
@given(arity_and_polys)
def test_number_operator(data):
    n, p, _ = data
    total = NCPoly(n)
    for j in range(1, n + 1):
        total = total + nc.sharp(nc.partial(p, j), NCPoly.var(j, n))
    assert total == nc.number_op(p)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.lists(polys(n, 3, 3), min_size=n, max_size=n),
                                                     st.lists(polys(n, 3, 3), min_size=n, max_size=n))))
def test_chain_rule(data):
    P_, Q_ = data
    assert nc.chain_rule_holds(P_, Q_)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(st.just(n), st.lists(polys(n, 6, 4), min_size=n, max_size=n))))
def test_sd_random_tuples(data):
    n, tup = data
    assert nc.sd_residual_nc(tup) == 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 2), max_size=4), st.lists(st.integers(1, 2), max_size=4))
def test_trace_property(v, w):
    C = nc.CovarianceMatrix([[2, 1], [1, 3]])
    assert nc.semicircular_moment(C, tuple(v + w)) == nc.semicircular_moment(C, tuple(w + v))


@settings(max_examples=40, deadline=None)
@given(polys(2, 3, 3), polys(2, 3, 3), st.fractions(Fraction(1, 2), 3, max_denominator=5))
def test_norm_submultiplicative(p, q, R):
    assert nc.norm_R(p * q, R) <= nc.norm_R(p, R) * nc.norm_R(q, R)
