"""Exact spectral calculus of the free Ornstein-Uhlenbeck operator.

Polynomials are expanded in the Chebyshev-U basis rescaled to [-2, 2]
(``U_0 = 1``, ``U_1 = x``, ``U_{n+1} = x U_n - U_{n-1}``), which is
orthonormal for the semicircle and diagonalises the operator:
``L U_n = -n U_n``. All coefficients are Fractions.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np


def _clean(d):
    return {k: v for k, v in d.items() if v != 0}


class UPoly:
    """``sum_n c_n U_n`` with exact rational ``c_n``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        if coeffs is None:
            coeffs = {}
        elif not isinstance(coeffs, dict):
            coeffs = dict(enumerate(coeffs))
        self.coeffs = _clean({int(k): Fraction(v) for k, v in coeffs.items()})

    @classmethod
    def basis(cls, n):
        return cls({n: 1})

    @property
    def degree(self):
        return max(self.coeffs, default=-1)

    def __eq__(self, other):
        return isinstance(other, UPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return UPoly(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return UPoly({k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, UPoly):
            return self.scale(other)
        out = {}
        for m, a in self.coeffs.items():
            for n, b in other.coeffs.items():
                for k in range(min(m, n) + 1):
                    j = m + n - 2 * k
                    out[j] = out.get(j, 0) + a * b
        return UPoly(out)

    __rmul__ = scale

    def is_zero(self):
        return not self.coeffs

    def __call__(self, x):
        """Evaluate at real points (floating point)."""
        x = np.asarray(x, dtype=float)
        vals = u_values(self.degree, x)
        out = np.zeros(x.shape)
        for n, c in self.coeffs.items():
            out = out + float(c) * vals[n]
        return out

    def to_monomial(self):
        """Exact monomial coefficients ``[a_0, a_1, ...]``."""
        deg = self.degree
        if deg < 0:
            return [Fraction(0)]
        out = [Fraction(0)] * (deg + 1)
        for n, c in self.coeffs.items():
            for k, a in enumerate(u_monomial(n)):
                out[k] += c * a
        return out

    def __repr__(self):
        terms = " + ".join(f"{v}*U{k}" for k, v in sorted(self.coeffs.items()))
        return f"UPoly({terms or '0'})"


def u_monomial(n):
    """Exact monomial coefficients of ``U_n``."""
    prev, cur = [Fraction(1)], [Fraction(0), Fraction(1)]
    if n == 0:
        return prev
    for _ in range(n - 1):
        nxt = [Fraction(0)] + cur
        for k, a in enumerate(prev):
            nxt[k] -= a
        prev, cur = cur, nxt
    return cur


def u_values(n, x):
    """Array ``[U_0(x), ..., U_n(x)]`` by the three-term recursion."""
    x = np.asarray(x, dtype=float)
    out = [np.ones(x.shape)]
    if n >= 1:
        out.append(x.copy())
    for _ in range(2, n + 1):
        out.append(x * out[-1] - out[-2])
    return out


def u_expand(p) -> UPoly:
    """Change of basis from monomial coefficients ``[a_0, a_1, ...]`` to ``U_n``.

    Uses ``x U_n = U_{n+1} + U_{n-1}`` to build ``x^k`` from ``x^{k-1}``.
    """
    coeffs = [Fraction(c) for c in p]
    out = UPoly()
    power = UPoly({0: 1})  # x^k in the U basis
    for k, a in enumerate(coeffs):
        if k > 0:
            nxt = {}
            for n, c in power.coeffs.items():
                nxt[n + 1] = nxt.get(n + 1, 0) + c
                if n >= 1:
                    nxt[n - 1] = nxt.get(n - 1, 0) + c
            power = UPoly(nxt)
        if a:
            out = out + power.scale(a)
    return out


def ou_apply(p: UPoly) -> UPoly:
    """Free Ornstein-Uhlenbeck operator: ``U_n -> -n U_n``."""
    return UPoly({n: -n * c for n, c in p.coeffs.items()})


class UTensor:
    """``sum c_{mn} U_m (x) U_n`` with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        coeffs = coeffs or {}
        self.coeffs = _clean({(int(m), int(n)): Fraction(v) for (m, n), v in coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, UTensor) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(frozenset(self.coeffs.items()))

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return UTensor(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return UTensor({k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, UTensor):
            return u_tensor_product(self, other)
        return self.scale(other)

    def is_zero(self):
        return not self.coeffs

    @property
    def degree(self):
        return max((max(k) for k in self.coeffs), default=-1)

    def __call__(self, x, y):
        """Evaluate on broadcast real arrays (floating point)."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        d = max(self.degree, 0)
        ux, uy = u_values(d, x), u_values(d, y)
        out = np.zeros(x.shape)
        for (m, n), c in self.coeffs.items():
            out = out + float(c) * ux[m] * uy[n]
        return out

    def eval_exact(self, x, y):
        """Exact value at rational points."""
        x, y = Fraction(x), Fraction(y)

        def vals(t, d):
            out = [Fraction(1), t]
            while len(out) <= d:
                out.append(t * out[-1] - out[-2])
            return out

        d = max(self.degree, 1)
        ux, uy = vals(x, d), vals(y, d)
        return sum((c * ux[m] * uy[n] for (m, n), c in self.coeffs.items()), Fraction(0))

    def __repr__(self):
        terms = " + ".join(f"{v}*U{m}(x)U{n}" for (m, n), v in sorted(self.coeffs.items()))
        return f"UTensor({terms or '0'})"


def j_u_apply(p: UPoly) -> UTensor:
    """Divided difference: ``J U_n = sum_{k=1}^n U_{k-1} (x) U_{n-k}``."""
    out = {}
    for n, c in p.coeffs.items():
        for k in range(1, n + 1):
            key = (k - 1, n - k)
            out[key] = out.get(key, 0) + c
    return UTensor(out)


def _lin(m, n):
    return [m + n - 2 * k for k in range(min(m, n) + 1)]


def u_tensor_product(s: UTensor, t: UTensor) -> UTensor:
    """Pointwise product, linearised slot by slot with ``U_m U_n = sum_k U_{m+n-2k}``."""
    out = {}
    for (a, b), c in s.coeffs.items():
        for (p, q), d in t.coeffs.items():
            cd = c * d
            for i in _lin(a, p):
                for j in _lin(b, q):
                    out[(i, j)] = out.get((i, j), 0) + cd
    return UTensor(out)


def ou_tensor_apply(t: UTensor) -> UTensor:
    """``L (x) 1 + 1 (x) L``: ``U_m (x) U_n -> -(m + n) U_m (x) U_n``."""
    return UTensor({(m, n): -(m + n) * c for (m, n), c in t.coeffs.items()})


def bochner_residual(p: UPoly) -> UTensor:
    """``J(L p) - (L2 - Id)(J p)``; zero for every polynomial."""
    jp = j_u_apply(p)
    return j_u_apply(ou_apply(p)) - (ou_tensor_apply(jp) - jp)


def gamma2_gap(n: int) -> UTensor:
    """``E_n = L2((J U_n)^2) - 2 L2(J U_n) . J U_n``."""
    if not 1 <= n <= 12:
        raise ValueError("n must lie in 1..12")
    j = j_u_apply(UPoly.basis(n))
    return ou_tensor_apply(j * j) - (ou_tensor_apply(j) * j).scale(2)


def grid_minimum(t: UTensor, n: int = 64) -> float:
    """Minimum of ``t`` on an ``n x n`` Chebyshev grid of [-2, 2]^2."""
    x = 2.0 * np.cos((np.arange(n) + 0.5) * np.pi / n)
    return float(np.min(t(x[:, None], x[None, :])))


def is_grid_nonnegative(t: UTensor, n: int = 64, tol: float = 1e-12) -> bool:
    return grid_minimum(t, n) >= -tol
