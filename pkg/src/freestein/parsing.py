"""Recursive-descent parsers for univariate potentials and non-commutative polynomials.

Potential grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := ['+' | '-'] factor (('*' | '/') factor)*
    factor := number | 'x' ['^' integer]

Non-commutative grammar: the same, with ``x<i>`` variables and products read
as concatenation of words. Numbers are decimals or integers and are kept as
exact Fractions.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import DegreeTooLarge, ExprSyntaxError, IndexOutOfArity
from .ncfree import NCPoly

MAX_DEGREE = 32
_NUMBER = re.compile(r"\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?")
_INT = re.compile(r"\d+")


class _Lexer:
    def __init__(self, src):
        self.src = src
        self.pos = 0

    def skip(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def take(self, ch):
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch):
        if not self.take(ch):
            self.fail(f"expected {ch!r}")

    def number(self):
        self.skip()
        m = _NUMBER.match(self.src, self.pos)
        if not m:
            self.fail("expected a number")
        self.pos = m.end()
        return Fraction(m.group(0))

    def integer(self):
        self.skip()
        m = _INT.match(self.src, self.pos)
        if not m:
            self.fail("expected an integer")
        self.pos = m.end()
        return int(m.group(0))

    def fail(self, msg):
        found = self.src[self.pos] if self.pos < len(self.src) else "end of input"
        raise ExprSyntaxError(f"{msg}, found {found!r}", self.pos)

    def done(self):
        return self.peek() == ""


# ---------------------------------------------------------------------------
# generic sum-of-products parser over an algebra given by callbacks


def _parse_sum(lex, factor, one, zero):
    if lex.done():
        lex.fail("empty expression")
    total = zero
    first = True
    while True:
        sign = 1
        if lex.take("+"):
            pass
        elif lex.take("-"):
            sign = -1
        elif not first:
            break
        total = total + _parse_product(lex, factor, one) * sign
        first = False
        if lex.peek() not in "+-" or lex.done():
            break
    if not lex.done():
        lex.fail("unexpected character")
    return total


def _parse_product(lex, factor, one):
    value = factor(lex)
    while True:
        if lex.take("*"):
            value = value * factor(lex)
        elif lex.take("/"):
            pos = lex.pos
            d = lex.number()
            if d == 0:
                raise ExprSyntaxError("division by zero", pos)
            value = value * (1 / d)
        else:
            return value


# ---------------------------------------------------------------------------
# univariate potentials


class _UPoly:
    """Dense exact polynomial used only while parsing."""

    def __init__(self, c):
        self.c = list(c)

    def __add__(self, o):
        n = max(len(self.c), len(o.c))
        a = self.c + [Fraction(0)] * (n - len(self.c))
        b = o.c + [Fraction(0)] * (n - len(o.c))
        return _UPoly([x + y for x, y in zip(a, b)])

    def __mul__(self, o):
        if not isinstance(o, _UPoly):
            return _UPoly([v * Fraction(o) for v in self.c])
        out = [Fraction(0)] * (len(self.c) + len(o.c) - 1)
        for i, a in enumerate(self.c):
            for j, b in enumerate(o.c):
                out[i + j] += a * b
        if len(out) - 1 > MAX_DEGREE and any(out[MAX_DEGREE + 1:]):
            raise DegreeTooLarge(f"degree exceeds {MAX_DEGREE}")
        return _UPoly(out)


def _potential_factor(lex):
    ch = lex.peek()
    if ch == "x":
        lex.pos += 1
        k = 1
        if lex.take("^"):
            k = lex.integer()
        if k > MAX_DEGREE:
            raise DegreeTooLarge(f"degree {k} exceeds {MAX_DEGREE}")
        return _UPoly([Fraction(0)] * k + [Fraction(1)])
    if ch == "(":
        lex.fail("parentheses are not supported")
    return _UPoly([lex.number()])


@dataclass(frozen=True)
class PotentialExpr:
    source: str
    coeffs: tuple  # exact monomial coefficients c_0, c_1, ...

    def to_potential(self, interval=None):
        from .potential import PolynomialPotential

        return PolynomialPotential(list(self.coeffs), interval=interval)

    def __str__(self):
        return format_potential(self.coeffs)


def parse_potential(src: str) -> PotentialExpr:
    """Parse ``"0.5*x^2 + 0.25*x^4"`` into exact monomial coefficients."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    lex = _Lexer(src)
    p = _parse_sum(lex, _potential_factor, _UPoly([Fraction(1)]), _UPoly([Fraction(0)]))
    c = list(p.c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return PotentialExpr(src, tuple(c))


def _fmt_coef(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_potential(coeffs) -> str:
    """Inverse of :func:`parse_potential` up to formatting."""
    parts = []
    for k, c in enumerate(coeffs):
        c = Fraction(c)
        if c == 0:
            continue
        mono = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
        if not mono:
            body = _fmt_coef(abs(c))
        elif abs(c) == 1:
            body = mono
        else:
            body = f"{_fmt_coef(abs(c))}*{mono}"
        parts.append(("- " if c < 0 else "+ ") + body)
    if not parts:
        return "0"
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


# ---------------------------------------------------------------------------
# non-commutative polynomials


@dataclass(frozen=True)
class NCExpr:
    source: str
    poly: NCPoly

    def __str__(self):
        return format_ncpoly(self.poly)


def parse_ncexpr(src: str, arity: int) -> NCExpr:
    """Parse ``"x1*x2 - 2*x2^3"`` into an :class:`NCPoly` of the given arity."""
    if arity < 1:
        raise ValueError("arity must be at least 1")
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    one = NCPoly.const(1, arity)

    def factor(lex):
        ch = lex.peek()
        if ch == "x":
            lex.pos += 1
            start = lex.pos
            i = lex.integer()
            if not 1 <= i <= arity:
                raise IndexOutOfArity(f"variable x{i} at position {start} outside arity {arity}")
            k = 1
            if lex.take("^"):
                k = lex.integer()
            return NCPoly(arity, {(i,) * k: 1})
        if ch == "(":
            lex.fail("parentheses are not supported")
        return NCPoly.const(lex.number(), arity)

    lex = _Lexer(src)
    return NCExpr(src, _parse_sum(lex, factor, one, NCPoly(arity)))


def format_ncpoly(P: NCPoly) -> str:
    """Print with ``x<i>`` variables; parses back to the same polynomial."""
    if P.is_zero():
        return "0"
    parts = []
    for w in sorted(P.terms, key=lambda w: (len(w), w)):
        c = P.terms[w]
        word = "*".join(f"x{i}" for i in w)
        if not word:
            body = _fmt_coef(abs(c))
        elif abs(c) == 1:
            body = word
        else:
            body = f"{_fmt_coef(abs(c))}*{word}"
        parts.append(("- " if c < 0 else "+ ") + body)
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


def format_nctensor(T) -> str:
    if T.is_zero():
        return "0"
    parts = []
    for (a, b), c in sorted(T.terms.items(), key=lambda kv: (len(kv[0][0]) + len(kv[0][1]), kv[0])):
        left = "*".join(f"x{i}" for i in a) or "1"
        right = "*".join(f"x{i}" for i in b) or "1"
        coef = "" if c == 1 else ("-" if c == -1 else f"{_fmt_coef(c)}*")
        parts.append(f"{coef}({left} (x) {right})")
    return " + ".join(parts).replace("+ -", "- ")
