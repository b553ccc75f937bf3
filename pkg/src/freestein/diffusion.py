"""The Laplacian of a one-dimensional Hessian manifold and its quadratic forms.

For a moment map ``phi`` with source ``nu_phi`` and a Gibbs target ``nu_u``
the Laplacian is

    L f(x) = 2 int f[x, x, y] / Jphi'(x, y) dnu_phi(y) - f'(x) u'(phi'(x)),

where ``f[x, x, y]`` is the second divided difference and ``Jphi'`` the
divided difference of ``phi'`` (the metric weight). ``L2`` acts on bivariate
functions as ``L`` in each slot, summed.

Test functions are polynomials (exact divided differences), numpy Chebyshev
series, or callables, which are interpolated on the support.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import chebyshev as C
from numpy.polynomial import legendre as L

from .equilibrium import solve_equilibrium
from .measure import ChebMeasure, semicircle
from .momentmap import cheb_points, jd_eval, solve_moment_map
from .polys import as_poly, divided_difference, second_divided_difference
from .potential import ConvexPotential, PolynomialPotential, quadratic

NODES = 128
TENSOR_DEGREE = 48
SERIES_DEGREE = 96
VARIANCE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HessianManifold:
    """Metric weight ``Jphi'``, reference measure ``nu_phi`` and drift ``u'(phi')``.

    ``phi`` is a :class:`MomentMap` or, on the semicircular manifold, the
    polynomial potential ``x^2/2`` itself.
    """

    phi: object
    source: ChebMeasure
    u_target: ConvexPotential

    @classmethod
    def from_gibbs(cls, u: ConvexPotential, **solver):
        """Manifold of the moment map of the (centred) Gibbs measure ``nu_u``."""
        eq = solve_equilibrium(u)
        m = eq.measure.mean
        if abs(m) > 1e-12 and isinstance(u, PolynomialPotential):
            u = u.shifted(m)
            eq = solve_equilibrium(u)
        solver.setdefault("tol", 1e-12)
        phi = solve_moment_map(eq.measure, **solver)
        return cls(phi, phi.source.measure, u)

    @classmethod
    def semicircular(cls):
        """Fixed-point manifold ``phi = u = x^2/2`` over the semicircle."""
        return cls(quadratic(), semicircle(), quadratic())

    @property
    def support(self):
        return self.source.support

    def metric(self, x, y):
        """``Jphi'(x, y)``."""
        if isinstance(self.phi, PolynomialPotential):
            return divided_difference(self.phi._dp.coef, x, y)
        return jd_eval(self.phi, x, y)

    def phi_prime(self):
        """``phi'`` as a polynomial or a Chebyshev series on the support."""
        if isinstance(self.phi, PolynomialPotential):
            return Polynomial(self.phi._dp.coef)
        s = self.support
        return Chebyshev.interpolate(self.phi.du, 128, domain=[s.a, s.b])

    def drift(self, x):
        return self.u_target.du(self.phi.du(x))


def _as_function(M, f):
    """Polynomial or Chebyshev series (on the support) representing ``f``."""
    if isinstance(f, Chebyshev):
        return f
    if isinstance(f, Polynomial) or np.isscalar(f) or isinstance(f, (list, tuple, np.ndarray)):
        return as_poly(f)
    if callable(f):
        s = M.support
        return Chebyshev.interpolate(f, SERIES_DEGREE, domain=[s.a, s.b])
    raise TypeError(f"unsupported test function {type(f).__name__}")


def _dd1(f, x, y):
    """First divided difference of a polynomial or series."""
    if isinstance(f, Polynomial):
        return divided_difference(f, x, y)
    t, w = L.leggauss(max(8, f.degree() // 2 + 2))
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    df = f.deriv()
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    pts = x[..., None] + t * (y - x)[..., None]
    return df(pts) @ w


def _dd2(f, x, y):
    """``f[x, x, y] = int_0^1 (1 - t) f''(x + t (y - x)) dt``."""
    if isinstance(f, Polynomial):
        return second_divided_difference(f, x, y)
    t, w = L.leggauss(max(8, f.degree() // 2 + 2))
    t = 0.5 * (t + 1.0)
    w = 0.5 * w * (1.0 - t)
    d2f = f.deriv(2)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    pts = x[..., None] + t * (y - x)[..., None]
    return d2f(pts) @ w


def laplacian_apply(M: HessianManifold, f, x, nodes: int = NODES):
    """``L f`` at the points ``x`` (interior of the support)."""
    f = _as_function(M, f)
    x = np.asarray(x, dtype=float)
    xs = np.atleast_1d(x)
    y, w = M.source.quadrature(nodes)
    X, Y = xs[:, None], y[None, :]
    integral = (_dd2(f, X, Y) / M.metric(X, Y)) @ w
    out = 2.0 * integral - f.deriv()(xs) * M.drift(xs)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def _interior_grid(M, n=64):
    return cheb_points((M.support.a, M.support.b), n)


def eigen_residual(M: HessianManifold, n: int = 64, nodes: int = NODES) -> float:
    """``sup |L phi' + phi'|`` on an interior Chebyshev grid."""
    x = _interior_grid(M, n)
    g = M.phi_prime()
    return float(np.max(np.abs(laplacian_apply(M, g, x, nodes) + g(x))))


def gamma(M: HessianManifold, f, g, x, y):
    """Carre du champ ``Jf Jg / Jphi'`` at ``(x, y)``."""
    f, g = _as_function(M, f), _as_function(M, g)
    return _dd1(f, x, y) * _dd1(g, x, y) / M.metric(x, y)


# ---------------------------------------------------------------------------
# slot-wise Laplacian of bivariate functions


def _basis_laplacian(M, x, degree, nodes):
    """Matrix ``B[i, k] = (L T_k)(x_i)`` for Chebyshev polynomials of the support."""
    s = M.support
    y, w = M.source.quadrature(nodes)
    t, tw = L.leggauss(degree // 2 + 2)
    t = 0.5 * (t + 1.0)
    tw = 0.5 * tw * (1.0 - t)
    X, Y = x[:, None], y[None, :]
    pts = X[..., None] + t * (Y - X)[..., None]  # (nx, ny, nt)
    eye = np.eye(degree + 1)
    d2 = C.chebder(eye, 2, scl=1.0 / s.half)  # (degree-1, degree+1)
    d1 = C.chebder(eye, 1, scl=1.0 / s.half)
    V2 = C.chebvander(s.to_s(pts), degree - 2) @ d2  # (nx, ny, nt, degree+1)
    dd2 = np.einsum("abtk,t->abk", V2, tw)
    weight = w / M.metric(X, Y)  # (nx, ny)
    integral = np.einsum("abk,ab->ak", dd2, weight)
    V1 = C.chebvander(s.to_s(x), degree - 1) @ d1
    return 2.0 * integral - V1 * M.drift(x)[:, None]


def tensor_laplacian(M: HessianManifold, G, x, y, degree: int = TENSOR_DEGREE, nodes: int = NODES):
    """``(L (x) 1 + 1 (x) L) G`` on the grid ``x`` by ``y`` for a bivariate callable ``G``.

    ``G`` is interpolated by a tensor Chebyshev series on the support square
    and the one-dimensional Laplacian of each basis polynomial is applied in
    each slot.
    """
    s = M.support
    pts = cheb_points((s.a, s.b), degree + 1)
    vals = G(pts[:, None], pts[None, :])
    from scipy.fft import dctn

    coef = dctn(vals, type=2) / (degree + 1) ** 2
    coef[0, :] *= 0.5
    coef[:, 0] *= 0.5
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    Bx = _basis_laplacian(M, x, degree, nodes)
    By = _basis_laplacian(M, y, degree, nodes)
    Tx = C.chebvander(s.to_s(x), degree)
    Ty = C.chebvander(s.to_s(y), degree)
    return Bx @ coef @ Ty.T + Tx @ coef @ By.T


def gamma2(M: HessianManifold, f, x, y, degree: int = TENSOR_DEGREE, nodes: int = NODES):
    """Second carre du champ on the grid ``x`` by ``y``.

    Uses the expansion
    ``1/2 (L2(Jf^2 / Jphi') - 2 L2(Jf) Jf / Jphi' + 2 Jf^2)``.
    """
    f = _as_function(M, f)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    X, Y = x[:, None], y[None, :]
    jf = _dd1(f, X, Y)
    W = M.metric(X, Y)
    first = tensor_laplacian(M, lambda a, b: _dd1(f, a, b) ** 2 / M.metric(a, b), x, y, degree, nodes)
    second = tensor_laplacian(M, lambda a, b: _dd1(f, a, b), x, y, degree, nodes)
    return 0.5 * (first - 2.0 * second * jf / W + 2.0 * jf * jf)


def gamma2_direct(M: HessianManifold, f, x, y, degree: int = TENSOR_DEGREE, nodes: int = NODES):
    """``1/2 (L2(Gamma(f)) - 2 Gamma(L f, f))`` without the commutation step of :func:`gamma2`.

    ``L f`` is interpolated on the support. The two forms agree when
    ``J L = (L2 - Jphi') J`` holds, as on the semicircular manifold.
    """
    f = _as_function(M, f)
    s = M.support
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    X, Y = x[:, None], y[None, :]
    Lf = Chebyshev.interpolate(lambda t: laplacian_apply(M, f, t, nodes), SERIES_DEGREE, domain=[s.a, s.b])
    first = tensor_laplacian(M, lambda a, b: _dd1(f, a, b) ** 2 / M.metric(a, b), x, y, degree, nodes)
    cross = _dd1(Lf, X, Y) * _dd1(f, X, Y) / M.metric(X, Y)
    return 0.5 * (first - 2.0 * cross)


def dirichlet_residual(M: HessianManifold, f, g, nodes: int = NODES, return_parts: bool = False):
    """``|int int Jf Jg / Jphi' dnu dnu + int f L g dnu|``; the larger of the two orderings.

    With ``return_parts`` also returns the form and both pairings.
    """
    f, g = _as_function(M, f), _as_function(M, g)
    x, w = M.source.quadrature(nodes)
    X, Y = x[:, None], x[None, :]
    form = float(w @ (_dd1(f, X, Y) * _dd1(g, X, Y) / M.metric(X, Y)) @ w)
    fLg = float(np.dot(w, f(x) * laplacian_apply(M, g, x, nodes)))
    gLf = float(np.dot(w, g(x) * laplacian_apply(M, f, x, nodes)))
    res = max(abs(form + fLg), abs(form + gLf))
    if return_parts:
        return res, {"form": form, "f_Lg": fLg, "g_Lf": gLf, "swap_gap": abs(fLg - gLf)}
    return res


def stationarity(M: HessianManifold, f, nodes: int = NODES) -> float:
    """``|int L f dnu_phi|``."""
    x, w = M.source.quadrature(nodes)
    return abs(float(np.dot(w, laplacian_apply(M, f, x, nodes))))


def langevin_apply(V: ConvexPotential, nu: ChebMeasure, f, x):
    """Free Langevin generator ``-2 d/dx int Jf(x, y) dnu(y) + V'(x) f'(x)``.

    For polynomial ``f`` the smoothed field is a polynomial in ``x`` whose
    coefficients are moments of ``nu``.
    """
    p = as_poly(f)
    c = p.coef
    m = [nu.moment(j) for j in range(max(c.size - 1, 1))]
    field = np.zeros(max(c.size - 1, 1))
    for k in range(1, c.size):
        for i in range(k):
            field[i] += c[k] * m[k - 1 - i]
    x = np.asarray(x, dtype=float)
    return -2.0 * Polynomial(field).deriv()(x) + V.du(x) * p.deriv()(x)


def h1_seminorm(nu: ChebMeasure, f, nodes: int = NODES) -> float:
    """``int int (Jf)^2 dnu dnu``."""
    p = as_poly(f)
    x, w = nu.quadrature(nodes)
    J = divided_difference(p, x[:, None], x[None, :])
    return float(w @ (J * J) @ w)


def langevin_form(V: ConvexPotential, nu: ChebMeasure, f, nodes: int = NODES) -> float:
    """``<M_V f, f>`` in ``L^2(nu)``."""
    p = as_poly(f)
    x, w = nu.quadrature(nodes)
    return float(np.dot(w, langevin_apply(V, nu, p, x) * p(x)))


def _variance(mu, p, nodes):
    x, w = mu.quadrature(nodes)
    v = p(x)
    m = float(np.dot(w, v))
    return float(np.dot(w, (v - m) ** 2))


def variance_check(kind: str, inputs, f, nodes: int = NODES) -> dict:
    """Free variance inequalities for a polynomial ``f``.

    ``free_poincare``: ``inputs = (mu, C)`` (``C`` defaults to ``2 rho(mu)^2``
    if ``None``), right side ``C int int (Jf)^2``.
    ``brascamp_lieb``: ``inputs = (nu_V, V)``, right side ``int int (JV')^-1 (Jf)^2``.
    ``weighted_poincare``: ``inputs = (mu, A)`` with a Stein kernel ``A``,
    right side ``int int A (Jf)^2``.
    """
    p = as_poly(f)
    if kind == "free_poincare":
        mu, const = inputs
        if const is None:
            const = 2.0 * max(abs(mu.support.a), abs(mu.support.b)) ** 2
        weight = lambda X, Y: np.full(np.broadcast(X, Y).shape, float(const))
    elif kind == "brascamp_lieb":
        mu, V = inputs
        from .stein import potential_jd

        weight = lambda X, Y: 1.0 / potential_jd(V, X, Y)
    elif kind == "weighted_poincare":
        mu, A = inputs
        weight = A
    else:
        raise ValueError(f"unknown variance inequality {kind!r}")
    x, w = mu.quadrature(nodes)
    X, Y = x[:, None], x[None, :]
    J = divided_difference(p, X, Y)
    rhs = float(w @ (weight(X, Y) * J * J) @ w)
    lhs = _variance(mu, p, nodes)
    return {"kind": kind, "lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "pass": bool(lhs <= rhs + VARIANCE_TOL)}


def bakry_emery_probe(M: HessianManifold, f_family, grid: int = 32, degree: int = TENSOR_DEGREE) -> dict:
    """Exploratory: ``min Gamma_2(f) - Gamma(f)/2`` over a grid and a family of test functions.

    Reports the expanded form (:func:`gamma2`) and the direct form
    (:func:`gamma2_direct`) side by side. Evidence only, never a gate.
    """
    x = _interior_grid(M, grid)
    X, Y = x[:, None], x[None, :]
    expanded, direct = [], []
    for f in f_family:
        ff = _as_function(M, f)
        g1 = 0.5 * _dd1(ff, X, Y) ** 2 / M.metric(X, Y)
        expanded.append(float(np.min(gamma2(M, ff, x, x, degree) - g1)))
        direct.append(float(np.min(gamma2_direct(M, ff, x, x, degree) - g1)))
    return {"exploratory": True, "curvature_constant": 0.5, "grid": grid,
            "min_gap": min(expanded) if expanded else 0.0, "per_function": expanded,
            "min_gap_direct": min(direct) if direct else 0.0, "per_function_direct": direct}


def ou_bakry_emery_gap(M: HessianManifold, f, grid: int = 32, degree: int = TENSOR_DEGREE) -> float:
    """``min (Gamma_2(f) - Gamma(f))`` on the interior grid."""
    ff = _as_function(M, f)
    x = _interior_grid(M, grid)
    X, Y = x[:, None], x[None, :]
    g2 = gamma2(M, ff, x, x, degree)
    g1 = _dd1(ff, X, Y) ** 2 / M.metric(X, Y)
    return float(np.min(g2 - g1))
