"""Free moment maps: convex ``u`` with ``mu = (u')_# nu_u``.

The solver alternates between the equilibrium measure of the current ``u`` and
the monotone rearrangement of that measure onto the target, averaging the new
derivative with the old one. The translation freedom is removed by keeping
``nu_u`` centred.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev

from .equilibrium import EquilibriumMeasure, solve_equilibrium
from .errors import DegenerateTarget, LogOfNonpositive, NoConvergence, NotCentered, OutOfRange
from .measure import ChebMeasure, log_energy, max_correlation
from .potential import ChebPotential, ConvexPotential, PolynomialPotential

JD_DELTA = 1e-6


def cheb_points(interval, n):
    """First-kind Chebyshev points of ``interval`` in DCT order (descending)."""
    a, b = interval
    th = (np.arange(n) + 0.5) * np.pi / n
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(th)


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Monotone rearrangement ``T = q_mu o F_nu`` of ``nu`` onto ``mu``."""

    source: ChebMeasure
    target: ChebMeasure
    series: Chebyshev

    def __call__(self, x):
        return self.target.quantile(self.source.cdf(x))

    def derivative(self, x):
        """``T'(x) = rho_nu(x) / rho_mu(T(x))`` for interior ``x``."""
        x = np.asarray(x, dtype=float)
        return self.source.density(x) / self.target.density(self(x))


def monotone_transport(nu: ChebMeasure, mu: ChebMeasure, degree=128) -> TransportMap:
    """Brenier map between two measures on the line (quantile rearrangement)."""
    x = cheb_points((nu.support.a, nu.support.b), degree + 1)
    vals = mu.quantile(nu.cdf(x))
    from scipy.fft import dct

    c = dct(vals, type=2) / (degree + 1)
    c[0] *= 0.5
    return TransportMap(nu, mu, Chebyshev(c, domain=[nu.support.a, nu.support.b]))


@dataclass(frozen=True, eq=False)
class MomentMap:
    """Convex ``u`` through its derivative, with source ``nu_u`` and target ``mu``.

    Attributes
    ----------
    uprime : ConvexPotential
        Potential whose ``du`` is ``u'``; ``u`` is anchored at ``u(0) = 0``.
    source : EquilibriumMeasure
        ``nu_u``, centred.
    target : ChebMeasure
    kappa_min : float
    diagnostics : dict
        iterations, residual history, clamp count, pushforward residual.
    """

    uprime: ConvexPotential
    source: EquilibriumMeasure
    target: ChebMeasure
    kappa_min: float = 1e-6
    diagnostics: dict = field(default_factory=dict)

    @property
    def working_interval(self):
        s = self.source.measure.support
        return (s.a, s.b)

    def du(self, x):
        return self.uprime.du(x)

    def d2u(self, x):
        return self.uprime.d2u(x)

    def u(self, x):
        return self.uprime.u(x)

    def conjugate_derivative(self, y, tol=1e-12):
        return conjugate_derivative(self, y, tol)

    def jd(self, x, y):
        return jd_eval(self, x, y)

    def pushforward_residual(self, n=257):
        return pushforward_residual(self, n)

    @classmethod
    def from_potential(cls, u: ConvexPotential, target: ChebMeasure | None = None, **kw):
        """Moment map for a known ``u``; the target defaults to ``(u')_# nu_u``."""
        eq = solve_equilibrium(u)
        if target is None:
            from .measure import pushforward

            target = pushforward(eq.measure, u.du, lambda y: _invert(u.du, y, eq.measure.support), u.d2u)
        return cls(u, eq, target, **kw)


def _invert(f, y, support, tol=1e-13, max_iter=200):
    """Solve ``f(x) = y`` for increasing ``f`` by bisection-safeguarded secant steps."""
    y = np.asarray(y, dtype=float)
    a, b = support.a, support.b
    pad = 0.5 * (b - a)
    lo = np.full(y.shape, a - pad)
    hi = np.full(y.shape, b + pad)
    x = np.clip(np.interp(y, f(np.linspace(a, b, 65)), np.linspace(a, b, 65)), lo, hi)
    for _ in range(max_iter):
        g = f(x) - y
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        # secant on the bracket, falling back to bisection
        flo, fhi = f(lo) - y, f(hi) - y
        den = np.where(fhi != flo, fhi - flo, 1.0)
        xn = lo - flo * (hi - lo) / den
        bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        xn = np.where(g == 0, x, xn)
        if np.max(np.abs(xn - x)) < tol * max(1.0, b - a) and np.max(hi - lo) >= 0:
            return xn
        x = xn
        if np.max(hi - lo) < tol:
            return x
    return x


def conjugate_derivative(map: MomentMap, y, tol=1e-12):
    """``(u*)'(y)``: the unique ``x`` with ``u'(x) = y``."""
    y = np.asarray(y, dtype=float)
    a, b = map.working_interval
    ya, yb = map.du(a), map.du(b)
    slack = 1e-9 * max(1.0, yb - ya)
    if np.any(y < ya - slack) or np.any(y > yb + slack):
        raise OutOfRange(f"value outside u'(W) = [{ya:.6g}, {yb:.6g}]")
    # Newton with bisection safeguard on [a, b] (slightly widened for the linear tails)
    lo = np.full(y.shape, a - 1e-6 * (b - a))
    hi = np.full(y.shape, b + 1e-6 * (b - a))
    x = np.interp(y, [ya, yb], [a, b])
    for _ in range(200):
        g = map.du(x) - y
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - g / map.d2u(x)
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        xn = np.where(g == 0, x, xn)
        step = np.max(np.abs(xn - x)) if xn.size else 0.0
        x = xn
        if step < tol * 1e-2 or (xn.size and np.max(hi - lo) < tol):
            break
    return x if x.ndim else float(x)


def jd_eval(map, x, y):
    """Divided difference ``(u'(x) - u'(y))/(x - y)`` with ``u''`` near the diagonal.

    ``map`` may be a :class:`MomentMap` or any :class:`ConvexPotential`.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if isinstance(map, MomentMap):
        a, b = map.working_interval
    else:
        a, b = map.interval
    delta = JD_DELTA * (b - a)
    close = np.abs(x - y) <= delta
    dx = np.where(close, 1.0, x - y)
    out = np.where(close, map.d2u(0.5 * (x + y)), (map.du(x) - map.du(y)) / dx)
    return out if out.ndim else float(out)


def pushforward_residual(map: MomentMap, n=257) -> float:
    """``sup_p |F_mu(u'(q_nu(p))) - p|`` on a uniform interior grid of ``p``."""
    p = (np.arange(1, n + 1)) / (n + 1)
    nu = map.source.measure
    return float(np.max(np.abs(map.target.cdf(map.du(nu.quantile(p))) - p)))


def solve_moment_map(mu: ChebMeasure, tol=1e-10, damping=0.5, max_iter=200, degree=128,
                     kappa_min=1e-6, initial: ConvexPotential | None = None) -> MomentMap:
    """Damped fixed-point iteration for the free moment map of ``mu``.

    Parameters
    ----------
    mu : ChebMeasure
        Centred target with a density; ``|mean| <= 1e-6`` is recentred with a warning.
    tol : float
        Stop once ``sup |u'_{k+1} - u'_k| < tol`` on the current support.
    damping : float
        Step ``lambda`` in ``u'_{k+1} = (1 - lambda) u'_k + lambda T_k``.
    degree : int
        Chebyshev degree of the iterates ``u'_k``.
    initial : ConvexPotential, optional
        Starting potential; the identity map ``u = x^2/2`` by default.

    Raises
    ------
    NotCentered, DegenerateTarget, NoConvergence
    """
    m = mu.mean
    scale = math.sqrt(max(mu.variance, 0.0))
    if mu.variance < 1e-10:
        raise DegenerateTarget("target variance below 1e-10")
    if abs(m) > 1e-12 * max(scale, 1.0):
        if abs(m) > 1e-6:
            raise NotCentered(f"target mean {m:.3e}")
        warnings.warn(f"recentring target with mean {m:.3e}")
        mu = mu.translate(-m)
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    pot = initial if initial is not None else PolynomialPotential([0.0, 0.0, 0.5])
    history = []
    clamps = 0
    support = None
    eq_degree = max(128, degree)
    converged = False
    for it in range(1, max_iter + 1):
        eq = solve_equilibrium(pot, degree=eq_degree, initial=support)
        nu = eq.measure
        shift = nu.mean
        if abs(shift) > 1e-15 * nu.support.width:
            pot = pot.shifted(shift)
            nu = nu.translate(-shift)
        support = (nu.support.a, nu.support.b)
        x = cheb_points(support, degree + 1)
        cur = pot.du(x)
        T = mu.quantile(nu.cdf(x))
        new = cur + damping * (T - cur)
        diff = float(np.max(np.abs(new - cur)))
        history.append(diff)
        pot = ChebPotential.from_values(new, support, extend=True, kappa_min=kappa_min, check=False)
        grid = np.linspace(*support, 512)
        if np.min(pot.d2u(grid)) < kappa_min:
            clamps += 1
        if diff < tol:
            converged = True
            break
    if not converged:
        raise NoConvergence(f"moment map: residual {history[-1]:.3e} after {max_iter} iterations", history[-1])
    eq = solve_equilibrium(pot, degree=eq_degree, initial=support)
    shift = eq.measure.mean
    if abs(shift) > 1e-15 * eq.measure.support.width:
        pot = pot.shifted(shift)
        eq = solve_equilibrium(pot, degree=eq_degree, initial=(eq.support.a - shift, eq.support.b - shift))
    grid = np.linspace(eq.support.a, eq.support.b, 512)
    final_clamped = bool(np.min(pot.d2u(grid)) < kappa_min)
    diag = {"iterations": it, "history": history, "clamp_iterations": clamps,
            "clamp_active_at_convergence": final_clamped, "damping": damping, "tol": tol}
    mm = MomentMap(pot, eq, mu, kappa_min, diag)
    diag["pushforward_residual"] = pushforward_residual(mm)
    diag["source_mean"] = eq.measure.mean
    return mm


def kahler_einstein_residual(map: MomentMap, u_target: ConvexPotential, n=64, nodes=128,
                             margin=0.05, return_constant=False):
    """Sup of the de-meaned residual ``2 int log(jd_phi(x, y)) dnu_phi(y) - [u(phi'(x)) - phi(x)]``.

    The additive constant is fitted by least squares (the mean over the grid);
    with ``return_constant=True`` returns ``(residual, constant)``.
    """
    nu = map.source.measure
    s = np.cos((np.arange(n) + 0.5) * np.pi / n) * (1.0 - 2 * margin)
    x = nu.support.to_x(s)
    y, w = nu.quadrature(nodes)
    J = jd_eval(map, x[:, None], y[None, :])
    if np.any(J <= 0):
        raise LogOfNonpositive("divided difference of phi' is not positive")
    lhs = 2.0 * (np.log(J) @ w)
    rhs = u_target.u(map.du(x)) - map.u(x)
    r = lhs - rhs
    const = float(np.mean(r))
    res = float(np.max(np.abs(r - const)))
    return (res, const) if return_constant else res


def variational_objective(rho: ChebMeasure, mu: ChebMeasure) -> float:
    """``-int int log|t - s| drho drho + T(rho, mu)``; minimised by ``nu_u``."""
    return -log_energy(rho) + max_correlation(rho, mu)
