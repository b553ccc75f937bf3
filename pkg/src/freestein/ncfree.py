"""Exact free calculus on non-commutative polynomials.

Monomials are words: tuples of variable indices in ``1..arity``. A polynomial
maps words to Fractions; a tensor maps pairs of words ``(a, b)`` (read
``a (x) b``) to Fractions. Tensors multiply leg-wise,
``(a (x) b)(c (x) d) = ac (x) bd``, which makes the free difference quotient a
derivation: ``d(PQ) = dP . (1 (x) Q) + (P (x) 1) . dQ``.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

from .cumulants import cumulants_to_moments, moments_to_cumulants  # noqa: F401  (re-exported)
from .errors import (ArityMismatch, ConstantTermInSymmetrize, DegreeTooLarge, IndexOutOfArity,
                     NotPositiveDefinite)

Word = tuple
MAX_WICK_LENGTH = 24


def _clean(d):
    return {k: v for k, v in d.items() if v != 0}


def _add_into(out, key, val):
    out[key] = out.get(key, 0) + val


def _word_str(w):
    return "*".join(f"x{i}" for i in w) if w else "1"


def _coef_str(c):
    return str(c) if c.denominator != 1 else str(c.numerator)


class NCPoly:
    """Element of the free algebra in ``arity`` variables with rational coefficients."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms=None):
        self.arity = int(arity)
        terms = terms or {}
        clean = {}
        for w, c in terms.items():
            w = tuple(int(i) for i in w)
            for i in w:
                if not 1 <= i <= self.arity:
                    raise IndexOutOfArity(f"variable t{i} outside arity {self.arity}")
            _add_into(clean, w, Fraction(c))
        self.terms = _clean(clean)

    @classmethod
    def var(cls, i, arity):
        return cls(arity, {(i,): 1})

    @classmethod
    def const(cls, c, arity):
        return cls(arity, {(): c})

    @property
    def degree(self):
        return max((len(w) for w in self.terms), default=-1)

    def _check(self, other):
        if other.arity != self.arity:
            raise ArityMismatch(f"arities {self.arity} and {other.arity} differ")

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = NCPoly.const(other, self.arity)
        return isinstance(other, NCPoly) and self.terms == other.terms

    def __hash__(self):
        return hash((self.arity, frozenset(self.terms.items())))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = NCPoly.const(other, self.arity)
        self._check(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            _add_into(out, w, c)
        return NCPoly(self.arity, out)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = NCPoly.const(other, self.arity)
        return self + (-other)

    def scale(self, c):
        c = Fraction(c)
        return NCPoly(self.arity, {w: c * v for w, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._check(other)
        out = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                _add_into(out, a + b, c * d)
        return NCPoly(self.arity, out)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        out = NCPoly.const(1, self.arity)
        for _ in range(int(k)):
            out = out * self
        return out

    def is_zero(self):
        return not self.terms

    def homogeneous_part(self, d):
        return NCPoly(self.arity, {w: c for w, c in self.terms.items() if len(w) == d})

    def __repr__(self):
        return f"NCPoly({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for w in sorted(self.terms, key=lambda w: (len(w), w)):
            c = self.terms[w]
            if not w:
                parts.append(_coef_str(c))
            elif c == 1:
                parts.append(_word_str(w))
            elif c == -1:
                parts.append("-" + _word_str(w))
            else:
                parts.append(f"{_coef_str(c)}*{_word_str(w)}")
        return " + ".join(parts).replace("+ -", "- ")


class NCTensor:
    """Element of ``P (x) P`` stored as ``{(a, b): c}``."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms=None):
        self.arity = int(arity)
        terms = terms or {}
        clean = {}
        for (a, b), c in terms.items():
            _add_into(clean, (tuple(a), tuple(b)), Fraction(c))
        self.terms = _clean(clean)

    @classmethod
    def one(cls, arity, c=1):
        return cls(arity, {((), ()): c})

    @classmethod
    def simple(cls, p: NCPoly, q: NCPoly):
        """``p (x) q``."""
        out = {}
        for a, c in p.terms.items():
            for b, d in q.terms.items():
                _add_into(out, (a, b), c * d)
        return cls(p.arity, out)

    def __eq__(self, other):
        return isinstance(other, NCTensor) and self.terms == other.terms

    def __hash__(self):
        return hash((self.arity, frozenset(self.terms.items())))

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            _add_into(out, k, c)
        return NCTensor(self.arity, out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = Fraction(c)
        return NCTensor(self.arity, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        """Leg-wise product ``(a (x) b)(c (x) d) = ac (x) bd``."""
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        out = {}
        for (a, b), c in self.terms.items():
            for (p, q), d in other.terms.items():
                _add_into(out, (a + p, b + q), c * d)
        return NCTensor(self.arity, out)

    def is_zero(self):
        return not self.terms

    def flip(self):
        """``sigma(a (x) b) = b (x) a``."""
        return NCTensor(self.arity, {(b, a): c for (a, b), c in self.terms.items()})

    def multiply(self):
        """``m(a (x) b) = ab``."""
        out = {}
        for (a, b), c in self.terms.items():
            _add_into(out, a + b, c)
        return NCPoly(self.arity, out)

    def legs(self):
        """Iterate ``(coefficient, left NCPoly, right NCPoly)`` per simple term."""
        for (a, b), c in self.terms.items():
            yield c, NCPoly(self.arity, {a: 1}), NCPoly(self.arity, {b: 1})

    def __repr__(self):
        if not self.terms:
            return "NCTensor(0)"
        parts = [f"{_coef_str(c)}*({_word_str(a)} (x) {_word_str(b)})"
                 for (a, b), c in sorted(self.terms.items(), key=lambda kv: (len(kv[0][0]) + len(kv[0][1]), kv[0]))]
        return "NCTensor(" + " + ".join(parts) + ")"


class NCMatrix:
    """Square matrix of tensors."""

    def __init__(self, rows):
        rows = [list(r) for r in rows]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ArityMismatch("matrix must be square")
        self.rows = rows
        self.n = n

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, NCMatrix) and self.n == other.n and all(
            self.rows[i][j] == other.rows[i][j] for i in range(self.n) for j in range(self.n))

    def sharp(self, other: "NCMatrix") -> "NCMatrix":
        """``(A # B)_{ij} = sum_k A_{ik} # B_{kj}``."""
        if other.n != self.n:
            raise ArityMismatch("matrix sizes differ")
        ar = self.rows[0][0].arity if self.n else 0
        out = []
        for i in range(self.n):
            row = []
            for j in range(self.n):
                acc = NCTensor(ar)
                for k in range(self.n):
                    acc = acc + tensor_sharp(self.rows[i][k], other.rows[k][j])
                row.append(acc)
            out.append(row)
        return NCMatrix(out)

    def substitute(self, Q) -> "NCMatrix":
        return NCMatrix([[tensor_substitute(t, Q) for t in row] for row in self.rows])

    def __repr__(self):
        return "NCMatrix(" + repr(self.rows) + ")"


class CovarianceMatrix:
    """Symmetric positive-definite matrix with exact rational entries."""

    def __init__(self, entries):
        m = [[Fraction(v) for v in row] for row in entries]
        n = len(m)
        if any(len(r) != n for r in m):
            raise ArityMismatch("covariance must be square")
        for i in range(n):
            for j in range(n):
                if m[i][j] != m[j][i]:
                    raise NotPositiveDefinite("covariance is not symmetric")
        self.entries = m
        self.n = n
        self._ldl()

    @classmethod
    def identity(cls, n):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def _ldl(self):
        # exact LDL^T without pivoting; a non-positive pivot disproves definiteness
        n = self.n
        a = [row[:] for row in self.entries]
        for k in range(n):
            if a[k][k] <= 0:
                raise NotPositiveDefinite(f"pivot {k} is {a[k][k]}")
            for i in range(k + 1, n):
                f = a[i][k] / a[k][k]
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def inverse(self) -> "CovarianceMatrix":
        n = self.n
        aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(self.entries)]
        for k in range(n):
            p = next(r for r in range(k, n) if aug[r][k] != 0)
            aug[k], aug[p] = aug[p], aug[k]
            piv = aug[k][k]
            aug[k] = [v / piv for v in aug[k]]
            for r in range(n):
                if r != k and aug[r][k] != 0:
                    f = aug[r][k]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[k])]
        return CovarianceMatrix([row[n:] for row in aug])

    def to_lists(self):
        return [[str(v) for v in row] for row in self.entries]


# ---------------------------------------------------------------------------
# derivations


def _check_index(P, j):
    if not 1 <= j <= P.arity:
        raise IndexOutOfArity(f"index {j} outside arity {P.arity}")


def partial(P: NCPoly, j: int) -> NCTensor:
    """Free difference quotient ``d_j m = sum_{m = a t_j b} a (x) b``."""
    _check_index(P, j)
    out = {}
    for w, c in P.terms.items():
        for k, letter in enumerate(w):
            if letter == j:
                _add_into(out, (w[:k], w[k + 1:]), c)
    return NCTensor(P.arity, out)


def cyclic(P: NCPoly, j: int) -> NCPoly:
    """Cyclic derivative ``D_j m = sum_{m = a t_j b} ba``."""
    _check_index(P, j)
    out = {}
    for w, c in P.terms.items():
        for k, letter in enumerate(w):
            if letter == j:
                _add_into(out, w[k + 1:] + w[:k], c)
    return NCPoly(P.arity, out)


def cyclic_gradient(P: NCPoly):
    return tuple(cyclic(P, j) for j in range(1, P.arity + 1))


def jacobian(P) -> NCMatrix:
    """``[J P]_{ij} = d_j P_i`` for a tuple with one entry per variable."""
    P = tuple(P)
    if not P:
        raise ArityMismatch("empty tuple")
    n = P[0].arity
    if len(P) != n or any(p.arity != n for p in P):
        raise ArityMismatch(f"tuple of length {len(P)} for arity {n}")
    return NCMatrix([[partial(P[i], j + 1) for j in range(n)] for i in range(n)])


def partial_left(T: NCTensor, i: int):
    """``(d_i (x) id)`` on a tensor; returns a triple tensor ``{(a, b, c): coef}``."""
    out = {}
    for (a, b), c in T.terms.items():
        for k, letter in enumerate(a):
            if letter == i:
                _add_into(out, (a[:k], a[k + 1:], b), c)
    return _clean(out)


def partial_right(T: NCTensor, j: int):
    """``(id (x) d_j)`` on a tensor; returns a triple tensor."""
    out = {}
    for (a, b), c in T.terms.items():
        for k, letter in enumerate(b):
            if letter == j:
                _add_into(out, (a, b[:k], b[k + 1:]), c)
    return _clean(out)


def number_op(P: NCPoly) -> NCPoly:
    """Multiply each monomial by its degree."""
    return NCPoly(P.arity, {w: len(w) * c for w, c in P.terms.items()})


def symmetrize(P: NCPoly) -> NCPoly:
    """Average of cyclic rotations of each monomial; needs zero constant term."""
    if () in P.terms:
        raise ConstantTermInSymmetrize("symmetrisation is defined on polynomials without constant term")
    out = {}
    for w, c in P.terms.items():
        p = len(w)
        for k in range(p):
            _add_into(out, w[k:] + w[:k], c / p)
    return NCPoly(P.arity, out)


def sharp(T: NCTensor, Q: NCPoly) -> NCPoly:
    """``(a (x) b) # c = acb``."""
    if T.arity != Q.arity:
        raise ArityMismatch("arities differ")
    out = {}
    for (a, b), c in T.terms.items():
        for w, d in Q.terms.items():
            _add_into(out, a + w + b, c * d)
    return NCPoly(T.arity, out)


def tensor_sharp(S: NCTensor, T: NCTensor) -> NCTensor:
    """``(a (x) b) # (c (x) d) = ac (x) db``, composition in ``P (x) P^op``."""
    if S.arity != T.arity:
        raise ArityMismatch("arities differ")
    out = {}
    for (a, b), c in S.terms.items():
        for (p, q), d in T.terms.items():
            _add_into(out, (a + p, q + b), c * d)
    return NCTensor(S.arity, out)


def substitute(P: NCPoly, Q) -> NCPoly:
    """Replace ``t_i`` by ``Q_i`` (an algebra homomorphism)."""
    Q = tuple(Q)
    if len(Q) != P.arity:
        raise ArityMismatch(f"{len(Q)} substitutes for arity {P.arity}")
    ar = Q[0].arity if Q else P.arity
    if any(q.arity != ar for q in Q):
        raise ArityMismatch("substitutes have different arities")
    cache = {(): NCPoly.const(1, ar)}

    def word(w):
        if w not in cache:
            cache[w] = word(w[:-1]) * Q[w[-1] - 1]
        return cache[w]

    out = NCPoly(ar)
    for w, c in P.terms.items():
        out = out + word(w).scale(c)
    return out


compose = substitute


def tensor_substitute(T: NCTensor, Q) -> NCTensor:
    Q = tuple(Q)
    ar = Q[0].arity if Q else T.arity
    out = NCTensor(ar)
    for c, a, b in T.legs():
        out = out + NCTensor.simple(substitute(a, Q), substitute(b, Q)).scale(c)
    return out


def tuple_substitute(P, Q):
    return tuple(substitute(p, Q) for p in P)


def chain_rule_holds(P, Q) -> bool:
    """True when ``J(P o Q) == [J P](Q) # J Q`` exactly."""
    lhs = jacobian(tuple_substitute(P, Q))
    rhs = jacobian(P).substitute(Q).sharp(jacobian(Q))
    return lhs == rhs


def norm_R(P: NCPoly, R) -> Fraction:
    """``sum_q |lambda_q| R^deg(q)``."""
    R = Fraction(R)
    if R <= 0:
        raise ValueError("R must be positive")
    return sum((abs(c) * R ** len(w) for w, c in P.terms.items()), Fraction(0))


# ---------------------------------------------------------------------------
# semicircular families


def _as_cov(C, n=None):
    if C is None:
        return CovarianceMatrix.identity(n)
    return C if isinstance(C, CovarianceMatrix) else CovarianceMatrix(C)


def _entries_key(C):
    return tuple(tuple(r) for r in C.entries)


@lru_cache(maxsize=None)
def _wick(entries, w):
    if not w:
        return Fraction(1)
    if len(w) % 2:
        return Fraction(0)
    first = w[0] - 1
    total = Fraction(0)
    for k in range(1, len(w), 2):
        c = entries[first][w[k] - 1]
        if c == 0:
            continue
        inner = _wick(entries, w[1:k])
        if inner == 0:
            continue
        total += c * inner * _wick(entries, w[k + 1:])
    return total


def semicircular_moment(C, w) -> Fraction:
    """``tau(s_{w_1} ... s_{w_k})`` for a semicircular family with covariance ``C``.

    Sum over non-crossing pairings of products of covariances, enumerated by
    pairing the first letter with each admissible partner.
    """
    w = tuple(int(i) for i in w)
    C = _as_cov(C, max(w, default=1))
    if any(not 1 <= i <= C.n for i in w):
        raise IndexOutOfArity("word uses a variable outside the covariance size")
    if len(w) > MAX_WICK_LENGTH:
        raise DegreeTooLarge(f"word length {len(w)} exceeds {MAX_WICK_LENGTH}")
    return _wick(_entries_key(C), w)


def tau(P: NCPoly, C=None) -> Fraction:
    C = _as_cov(C, P.arity)
    return sum((c * semicircular_moment(C, w) for w, c in P.terms.items()), Fraction(0))


def tau_tensor(T: NCTensor, C=None) -> Fraction:
    """``(tau (x) tau)`` with each leg traced separately."""
    C = _as_cov(C, T.arity)
    return sum((c * semicircular_moment(C, a) * semicircular_moment(C, b) for (a, b), c in T.terms.items()),
               Fraction(0))


def sd_residual_nc(P, max_checked_degree: int = 6, C=None) -> Fraction:
    """``max_i |tau(S_i P_i) - (tau (x) tau)(d_i P_i)|`` for the semicircular family.

    With the default identity covariance this is the free Schwinger-Dyson
    equation of the standard family; a covariance ``C`` replaces the right
    side by ``sum_j C_ij (tau (x) tau)(d_j P_i)``.
    """
    P = tuple(P)
    n = P[0].arity
    if len(P) != n:
        raise ArityMismatch(f"{len(P)} polynomials for arity {n}")
    if any(p.degree > max_checked_degree for p in P):
        raise DegreeTooLarge(f"polynomial degree exceeds {max_checked_degree}")
    C = _as_cov(C, n)
    worst = Fraction(0)
    for i in range(1, n + 1):
        lhs = tau(NCPoly.var(i, n) * P[i - 1], C)
        rhs = sum((C[i - 1, j - 1] * tau_tensor(partial(P[i - 1], j), C) for j in range(1, n + 1)),
                  Fraction(0))
        worst = max(worst, abs(lhs - rhs))
    return worst


def monomials(arity: int, max_degree: int):
    for d in range(max_degree + 1):
        for w in itertools.product(range(1, arity + 1), repeat=d):
            yield w


def quadratic_potential(K: CovarianceMatrix) -> NCPoly:
    """``U = 1/2 <t, K t>``."""
    n = K.n
    terms = {}
    for i in range(n):
        for j in range(n):
            _add_into(terms, (i + 1, j + 1), K[i, j] / 2)
    return NCPoly(n, terms)


def linear_tuple(K: CovarianceMatrix):
    """``K t`` as a tuple of polynomials."""
    n = K.n
    return tuple(NCPoly(n, {(j + 1,): K[i, j] for j in range(n)}) for i in range(n))


def quadratic_stein_check(K, max_degree: int = 4) -> dict:
    """Stein kernel of the quadratic potential ``U = 1/2 <t, K t>``.

    Checks exactly that ``D U = K t``, that ``A = [J D U](D G) = K (1 (x) 1)``
    with ``D G = K^{-1} t``, that the semicircular family with covariance
    ``K^{-1}`` satisfies the Schwinger-Dyson equation of ``U``, that
    ``X = K Y`` has covariance ``K``, and the Stein identity
    ``tau(X_i P(X)) = sum_j (tau (x) tau)(A_ij # d_j P)`` for every monomial
    ``P`` of degree ``<= max_degree``.
    """
    K = _as_cov(K) if not isinstance(K, CovarianceMatrix) else K
    n = K.n
    Kinv = K.inverse()
    U = quadratic_potential(K)
    DU = cyclic_gradient(U)
    cyclic_ok = DU == linear_tuple(K)
    DG = linear_tuple(Kinv)
    A = jacobian(DU).substitute(DG)
    one = NCTensor.one(n)
    kernel_ok = all(A[i, j] == one.scale(K[i, j]) for i in range(n) for j in range(n))

    sd_gibbs = Fraction(0)
    stein = Fraction(0)
    cov_gap = Fraction(0)
    count = 0
    X = linear_tuple(K)
    for w in monomials(n, max_degree):
        P = NCPoly(n, {w: 1})
        count += 1
        for i in range(1, n + 1):
            # Gibbs law of U: semicircular with covariance K^{-1}
            lhs = tau(DU[i - 1] * P, Kinv)
            rhs = tau_tensor(partial(P, i), Kinv)
            sd_gibbs = max(sd_gibbs, abs(lhs - rhs))
            # Stein identity for X with covariance K
            lhs = tau(NCPoly.var(i, n) * P, K)
            rhs = sum((tau_tensor(tensor_sharp(A[i - 1, j - 1], partial(P, j)), K) for j in range(1, n + 1)),
                      Fraction(0))
            stein = max(stein, abs(lhs - rhs))
        # moments of X = K Y under covariance K^{-1} equal those of covariance K
        cov_gap = max(cov_gap, abs(tau(substitute(P, X), Kinv) - tau(P, K)))
    ok = cyclic_ok and kernel_ok and sd_gibbs == 0 and stein == 0 and cov_gap == 0
    return {"residual": stein, "gibbs_sd_residual": sd_gibbs, "covariance_residual": cov_gap,
            "cyclic_gradient_ok": cyclic_ok, "kernel_constant_ok": kernel_ok,
            "monomials_checked": count, "pass": bool(ok)}
