from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from freestein.convolution import free_convolve
from freestein.cumulants import cumulants_to_moments, moments_to_cumulants
from freestein.measure import semicircle, uniform


def _noncrossing_partitions(n):
    # brute force over set partitions of {0..n-1}, keeping the non-crossing ones
    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for k in range(len(rest) + 1):
            for others in combinations(rest, k):
                block = (first,) + others
                remaining = [x for x in rest if x not in others]
                for p in partitions(remaining):
                    yield [block] + p

    def crossing(p):
        for A in p:
            for B in p:
                if A is B:
                    continue
                for a1 in A:
                    for a2 in A:
                        for b1 in B:
                            for b2 in B:
                                if a1 < b1 < a2 < b2:
                                    return True
        return False

    return [p for p in partitions(list(range(n))) if not crossing(p)]


def test_semicircle_catalan():
    assert cumulants_to_moments([0, 1, 0, 0, 0, 0, 0, 0]) == [0, 1, 0, 2, 0, 5, 0, 14]


def test_free_poisson():
    assert cumulants_to_moments([1] * 5) == [1, 2, 5, 14, 42]


def test_against_partition_enumeration():
    kappa = [Fraction(1, 2), Fraction(-1, 3), 2, Fraction(1, 5), -1, 3]
    m = cumulants_to_moments(kappa)
    for n in range(1, 7):
        total = Fraction(0)
        for p in _noncrossing_partitions(n):
            term = Fraction(1)
            for block in p:
                term *= kappa[len(block) - 1]
            total += term
        assert m[n - 1] == total


@settings(max_examples=50, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=20), min_size=8, max_size=8))
def test_roundtrip(m):
    assert cumulants_to_moments(moments_to_cumulants(m)) == m


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(-2, 2, max_denominator=10), min_size=6, max_size=6), st.integers(1, 16))
def test_clt_scaling(kappa, k):
    # n = k^2 summands of X/k keeps the scaling rational: kappa_m -> n^(1 - m/2) kappa_m
    m = cumulants_to_moments(kappa)
    # dilation by 1/k scales the m-th moment by k^-m
    dil = [mi / Fraction(k) ** (i + 1) for i, mi in enumerate(m)]
    summed = [k * k * c for c in moments_to_cumulants(dil)]
    assert summed == [Fraction(k) ** (2 - (i + 1)) * c for i, c in enumerate(kappa)]


@pytest.mark.parametrize("a,b", [(semicircle(), semicircle()), (uniform(-1, 1), semicircle()),
                                 (semicircle(0.5), semicircle(2.0))])
def test_additivity_under_convolution(a, b):
    out = free_convolve(a, b)

    def kap(mu):
        return [float(c) for c in moments_to_cumulants([Fraction(mu.moment(i)) for i in range(1, 7)])]

    for ko, ka, kb in zip(kap(out), kap(a), kap(b)):
        assert ko == pytest.approx(ka + kb, abs=1e-8)
