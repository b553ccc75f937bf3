"""Convex univariate potentials ``u`` given through polynomials or Chebyshev
interpolants of ``u'``.

Every potential exposes ``du`` (u'), ``d2u`` (u''), ``u`` (anchored so that
``u(0) = 0``), a working interval and a lower bound ``kappa`` of ``u''`` on it.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import chebyshev as C
from scipy.optimize import brentq

from .errors import NonConvexPotential, WorkingIntervalTooSmall

GRID = 512


def _bracket_root(f, x0=0.0, step=1.0, limit=60):
    lo, hi = x0 - step, x0 + step
    for _ in range(limit):
        if f(lo) < 0 < f(hi):
            return lo, hi
        lo, hi = x0 - 2 * (x0 - lo), x0 + 2 * (hi - x0)
    raise NonConvexPotential("u' has no sign change; potential is not confining")


def _sym_c1(pot, x0, L, degree=64):
    """First Chebyshev coefficient of ((b-a)/4) u'(M(s)) on [x0-L, x0+L]."""
    s = np.cos((np.arange(degree + 1) + 0.5) * np.pi / (degree + 1))
    g = 0.5 * L * pot.du(x0 + L * s)
    return 2.0 / (degree + 1) * float(np.dot(g, s))


class ConvexPotential:
    """Base class. Subclasses implement ``du``, ``d2u`` and ``u``."""

    interval: tuple
    kappa: float

    def du(self, x):
        raise NotImplementedError

    def d2u(self, x):
        raise NotImplementedError

    def u(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.u(x)

    @property
    def x0(self) -> float:
        """Minimiser of ``u`` (root of ``u'``)."""
        if not hasattr(self, "_x0"):
            lo, hi = _bracket_root(lambda t: float(self.du(t)))
            self._x0 = brentq(lambda t: float(self.du(t)), lo, hi, xtol=1e-15, rtol=1e-15)
        return self._x0

    def _check_convex(self, grid):
        d2 = np.asarray(self.d2u(grid), dtype=float)
        if np.min(d2) < -1e-10:
            raise NonConvexPotential(f"u'' reaches {np.min(d2):.3e} on the working interval")
        d1 = np.asarray(self.du(grid), dtype=float)
        if np.any(np.diff(d1) <= 0):
            raise NonConvexPotential("u' is not strictly increasing on the working interval")


class PolynomialPotential(ConvexPotential):
    """``u(x) = sum_k c_k x^k``.

    Parameters
    ----------
    coeffs : sequence
        Monomial coefficients ``c_0, c_1, ...``; Fractions are kept for display.
    interval : (float, float), optional
        Working interval. By default twice the half-width of the symmetric
        endpoint guess around the minimiser, which always contains the support.
    """

    def __init__(self, coeffs, interval=None):
        exact = [c if isinstance(c, Fraction) else Fraction(c) if isinstance(c, int) else c for c in coeffs]
        self.exact = tuple(exact)
        c = np.array([float(v) for v in coeffs], dtype=float)
        c = np.trim_zeros(c, "b")
        if c.size < 3 or not np.any(c[2:]):
            raise NonConvexPotential("potential has no convex part (degree < 2)")
        c = c.copy()
        c[0] = 0.0  # anchor u(0) = 0
        self.coeffs = c
        self._p = Polynomial(c)
        self._dp = self._p.deriv()
        self._d2p = self._dp.deriv()
        if interval is None:
            x0 = self.x0
            L = self._support_guess(x0)
            interval = (x0 - 2 * L, x0 + 2 * L)
        self.interval = (float(interval[0]), float(interval[1]))
        self.kappa = self._min_d2(*self.interval)
        self._check_convex(np.linspace(*self.interval, GRID))

    def _support_guess(self, x0):
        d2 = float(self._d2p(x0))
        L = 2.0 / math.sqrt(d2) if d2 > 0 else 1.0
        f = lambda t: _sym_c1(self, x0, t) - 2.0
        lo, hi = L, L
        while f(lo) > 0:
            lo *= 0.5
        while f(hi) < 0:
            hi *= 2.0
        return brentq(f, lo, hi, xtol=1e-12) if lo < hi else L

    def _min_d2(self, a, b):
        cand = [a, b]
        d3 = self._d2p.deriv()
        if d3.degree() >= 1 or np.any(d3.coef):
            for r in d3.roots():
                if abs(r.imag) < 1e-12 and a <= r.real <= b:
                    cand.append(r.real)
        return max(float(min(self._d2p(np.array(cand)))), 0.0)

    @property
    def degree(self):
        return self.coeffs.size - 1

    def du(self, x):
        return self._dp(x)

    def d2u(self, x):
        return self._d2p(x)

    def u(self, x):
        return self._p(x)

    def shifted(self, m):
        """Potential ``x -> u(x + m) - u(m)``."""
        q = self._p(Polynomial([m, 1.0]))
        return PolynomialPotential(q.coef)

    def dilated(self, c):
        """Potential ``x -> u(x / c)``; its equilibrium measure is the ``c``-dilation."""
        k = np.arange(self.coeffs.size)
        return PolynomialPotential(self.coeffs / float(c) ** k)

    def __repr__(self):
        return f"PolynomialPotential({list(self.coeffs)})"


class ChebPotential(ConvexPotential):
    """``u'`` as a Chebyshev series on ``[a, b]``.

    Outside ``[a, b]`` the derivative is continued linearly with endpoint
    slopes clamped below by ``kappa_min`` when ``extend`` is true; otherwise
    evaluation outside the interval raises ``WorkingIntervalTooSmall``.
    """

    def __init__(self, series: Chebyshev, extend=True, kappa_min=1e-6, check=True):
        self.series = series
        a, b = (float(v) for v in series.domain)
        self.interval = (a, b)
        self.extend = extend
        self.kappa_min = kappa_min
        self._d1 = series
        self._d2 = series.deriv()
        self._d3 = self._d2.deriv()
        self._int = series.integ(lbnd=a)
        self._ya, self._yb = float(series(a)), float(series(b))
        self._sa = max(float(self._d2(a)), kappa_min)
        self._sb = max(float(self._d2(b)), kappa_min)
        grid = np.linspace(a, b, GRID)
        self.kappa = max(min(float(np.min(self._d2(grid))), self._sa, self._sb), 0.0)
        if check:
            self._check_convex(grid)
        self._phi0 = float(self._phi(np.array(0.0)))

    @classmethod
    def from_derivative(cls, func, interval, degree=128, extend=False, **kw):
        """Interpolate ``u' = func`` at ``degree + 1`` Chebyshev points of ``interval``."""
        return cls(Chebyshev.interpolate(func, degree, domain=list(interval)), extend=extend, **kw)

    @classmethod
    def from_values(cls, values, interval, **kw):
        """Series through ``values`` at first-kind Chebyshev points of ``interval``."""
        n = len(values)
        from scipy.fft import dct

        c = dct(np.asarray(values, dtype=float), type=2) / n
        c[0] *= 0.5
        return cls(Chebyshev(c, domain=list(interval)), **kw)

    def _guard(self, x):
        if self.extend:
            return
        a, b = self.interval
        tol = 1e-12 * (b - a)
        if np.any(x < a - tol) or np.any(x > b + tol):
            raise WorkingIntervalTooSmall(f"evaluation outside the working interval [{a:.6g}, {b:.6g}]")

    def du(self, x):
        x = np.asarray(x, dtype=float)
        self._guard(x)
        a, b = self.interval
        xc = np.clip(x, a, b)
        out = self._d1(xc)
        out = np.where(x < a, self._ya + self._sa * (x - a), out)
        out = np.where(x > b, self._yb + self._sb * (x - b), out)
        return out if out.ndim else float(out)

    def d2u(self, x):
        x = np.asarray(x, dtype=float)
        self._guard(x)
        a, b = self.interval
        out = self._d2(np.clip(x, a, b))
        out = np.where(x < a, self._sa, np.where(x > b, self._sb, out))
        return out if out.ndim else float(out)

    def d3u(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.interval
        out = self._d3(np.clip(x, a, b))
        out = np.where((x < a) | (x > b), 0.0, out)
        return out if out.ndim else float(out)

    def _phi(self, x):
        a, b = self.interval
        xc = np.clip(x, a, b)
        out = self._int(xc)
        da, db = x - a, x - b
        out = np.where(x < a, self._ya * da + 0.5 * self._sa * da * da, out)
        out = np.where(x > b, self._int(b) + self._yb * db + 0.5 * self._sb * db * db, out)
        return out

    def u(self, x):
        x = np.asarray(x, dtype=float)
        self._guard(x)
        out = self._phi(x) - self._phi0
        return out if out.ndim else float(out)

    def shifted(self, m):
        """Potential whose derivative is ``x -> u'(x + m)``."""
        a, b = self.interval
        s = Chebyshev(self.series.coef, domain=[a - m, b - m])
        return ChebPotential(s, extend=self.extend, kappa_min=self.kappa_min, check=False)

    def __repr__(self):
        a, b = self.interval
        return f"ChebPotential(degree={self.series.degree()}, interval=[{a:.6g}, {b:.6g}])"


def quadratic(c=1.0) -> PolynomialPotential:
    """``u(x) = c x^2 / 2``."""
    return PolynomialPotential([0.0, 0.0, 0.5 * c])
