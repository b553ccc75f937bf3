from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from freestein.errors import DegreeTooLarge, ExprSyntaxError, IndexOutOfArity, NonConvexPotential
from freestein.ncfree import NCPoly
from freestein.parsing import format_ncpoly, format_potential, parse_ncexpr, parse_potential


def test_potential_examples():
    assert parse_potential("0.5*x^2").coeffs == (0, 0, Fraction(1, 2))
    assert parse_potential("0.5*x^2 + 0.25*x^4").coeffs == (0, 0, Fraction(1, 2), 0, Fraction(1, 4))
    assert parse_potential(" x^2/4 - 3 ").coeffs == (-3, 0, Fraction(1, 4))


def test_degenerate_rejected_later():
    e = parse_potential("x^2 - x^2")
    assert e.coeffs == (0,)
    with pytest.raises(NonConvexPotential):
        e.to_potential()


@pytest.mark.parametrize("src,pos", [("0.5*y^2", 4), ("x^", 2), ("", 0), ("x + ", 4)])
def test_syntax_errors_have_positions(src, pos):
    with pytest.raises(ExprSyntaxError) as info:
        parse_potential(src)
    assert info.value.position == pos


def test_degree_cap():
    parse_potential("x^32")
    with pytest.raises(DegreeTooLarge):
        parse_potential("x^33")


def test_nc_examples():
    assert parse_ncexpr("x1*x2*x1", 2).poly.terms == {(1, 2, 1): 1}
    comm = parse_ncexpr("x1*x2 - x2*x1", 2).poly
    assert comm.terms == {(1, 2): 1, (2, 1): -1}
    assert parse_ncexpr("2*x2^3", 2).poly.terms == {(2, 2, 2): 2}


def test_nc_errors():
    with pytest.raises(IndexOutOfArity):
        parse_ncexpr("x3", 2)
    with pytest.raises(ExprSyntaxError):
        parse_ncexpr("x1 +* x2", 2)
    with pytest.raises(ValueError):
        parse_ncexpr("x1", 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.fractions(-10, 10, max_denominator=12), min_size=1, max_size=9))
def test_potential_roundtrip(c):
    e = parse_potential(format_potential(c))
    again = parse_potential(format_potential(e.coeffs))
    assert again.coeffs == e.coeffs
    trimmed = list(c)
    while len(trimmed) > 1 and trimmed[-1] == 0:
        trimmed.pop()
    assert list(e.coeffs) == trimmed


words = st.lists(st.integers(1, 3), max_size=5).map(tuple)


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(words, st.fractions(-5, 5, max_denominator=6), max_size=5))
def test_nc_roundtrip(terms):
    P = NCPoly(3, terms)
    assert parse_ncexpr(format_ncpoly(P), 3).poly == P
