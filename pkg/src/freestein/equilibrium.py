"""Equilibrium (free Gibbs) measures of convex potentials.

For a support guess [a, b] put ``g(s) = ((b - a)/4) u'(M(s))`` with ``M`` the
affine map of [-1, 1] onto [a, b], and let ``c_k`` be its Chebyshev-T
coefficients. The finite Hilbert transform sends ``sqrt(1-s^2) U_{k-1}(s)`` to
``pi T_k(s)``, so the singular integral equation ``2 PV int dnu/(x-y) = u'(x)``
is solved by ``d_k = c_k / pi`` once the endpoints satisfy ``c_0 = 0`` (bounded
density at both edges) and ``c_1 = 2`` (unit mass).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import NewtonDiverged, WorkingIntervalTooSmall
from .measure import ChebMeasure, SupportInterval, build_measure, log_energy
from .potential import ChebPotential, ConvexPotential

DEFAULT_DEGREE = 128


@dataclass(frozen=True, eq=False)
class EquilibriumMeasure:
    measure: ChebMeasure
    potential: ConvexPotential
    sd_residual: float
    el_residual: float
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def support(self) -> SupportInterval:
        return self.measure.support


def _g_coeffs(pot, a, b, degree):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return C.chebinterpolate(lambda s: 0.5 * half * pot.du(mid + half * s), degree)


def _residual(pot, a, b, degree):
    c = _g_coeffs(pot, a, b, degree)
    return np.array([c[0], c[1] - 2.0])


def _check_interval(pot, a, b):
    if isinstance(pot, ChebPotential) and not pot.extend:
        lo, hi = pot.interval
        tol = 1e-12 * (hi - lo)
        if a < lo - tol or b > hi + tol:
            raise WorkingIntervalTooSmall(
                f"support [{a:.6g}, {b:.6g}] leaves the working interval [{lo:.6g}, {hi:.6g}]")


def _initial_guess(pot, degree):
    x0 = pot.x0
    if pot.kappa > 0:
        L = 2.0 / math.sqrt(pot.kappa)
    else:
        L = 1.0
    # one-dimensional solve for the symmetric half-width with c_1 = 2
    def f(t):
        return _g_coeffs(pot, x0 - t, x0 + t, min(degree, 64))[1] - 2.0

    lo = hi = L
    for _ in range(80):
        if f(lo) <= 0:
            break
        lo *= 0.5
    for _ in range(80):
        if f(hi) >= 0:
            break
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    L = 0.5 * (lo + hi)
    return x0 - L, x0 + L


def solve_equilibrium(u: ConvexPotential, degree: int = DEFAULT_DEGREE, tol: float = 1e-13,
                      max_iter: int = 100, initial=None, sd_degree: int = 8) -> EquilibriumMeasure:
    """Equilibrium measure of ``u`` by Newton's method on the endpoint conditions.

    Parameters
    ----------
    u : ConvexPotential
    degree : int
        Chebyshev degree used to expand ``g``.
    tol : float
        Stopping tolerance on ``max(|c_0|, |c_1 - 2|)``.
    initial : (float, float), optional
        Starting support; by default the symmetric guess around the minimiser.

    Returns
    -------
    EquilibriumMeasure
    """
    a, b = initial if initial is not None else _initial_guess(u, degree)
    F = _residual(u, a, b, degree)
    it = 0
    while np.max(np.abs(F)) > tol:
        if it >= max_iter:
            raise NewtonDiverged(f"endpoint residual {np.max(np.abs(F)):.3e} after {max_iter} iterations")
        it += 1
        h = 1e-7 * (b - a)
        J = np.empty((2, 2))
        J[:, 0] = (_residual(u, a + h, b, degree) - _residual(u, a - h, b, degree)) / (2 * h)
        J[:, 1] = (_residual(u, a, b + h, degree) - _residual(u, a, b - h, degree)) / (2 * h)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged("singular endpoint Jacobian") from exc
        if not np.all(np.isfinite(step)):
            raise NewtonDiverged("non-finite Newton step")
        lam = 1.0
        norm0 = np.max(np.abs(F))
        while True:
            na, nb = a + lam * step[0], b + lam * step[1]
            if nb > na:
                Fn = _residual(u, na, nb, degree)
                if np.max(np.abs(Fn)) < norm0 or lam < 1e-3:
                    break
            lam *= 0.5
            if lam < 1e-6:
                raise NewtonDiverged("line search failed in the endpoint solve")
        if abs(na - a) + abs(nb - b) < 1e-15 * (b - a) and np.max(np.abs(Fn)) >= norm0:
            break  # stagnated at rounding level
        a, b, F = na, nb, Fn
    _check_interval(u, a, b)
    c = _g_coeffs(u, a, b, degree)
    measure = build_measure(SupportInterval(a, b), coeffs=c[1:] / np.pi)
    sd = schwinger_dyson_residual(measure, u, sd_degree)
    el = euler_lagrange_residual(measure, u)
    return EquilibriumMeasure(measure, u, sd, el, it, {"endpoint_residual": float(np.max(np.abs(F)))})


def schwinger_dyson_residual(nu: ChebMeasure, u: ConvexPotential, test_degree: int = 8) -> float:
    """``max_k |int u' x^k dnu - sum_j m_j m_{k-1-j}|`` for ``k = 0..test_degree``."""
    if test_degree < 1:
        raise ValueError("test_degree must be at least 1")
    x, w = nu.quadrature(max(256, nu.coeffs.size + test_degree + 64))
    du = u.du(x)
    m = np.array([np.dot(w, x ** j) for j in range(test_degree + 1)])
    worst = 0.0
    for k in range(test_degree + 1):
        lhs = float(np.dot(w, du * x ** k))
        rhs = float(sum(m[j] * m[k - 1 - j] for j in range(k)))
        worst = max(worst, abs(lhs - rhs))
    return worst


def hilbert_field(nu: ChebMeasure, x):
    """``2 PV int dnu(y)/(x - y)`` on the support.

    For ``cheb`` measures this is ``(2 pi / h) sum_k d_k T_k(s)`` exactly.
    """
    x = np.asarray(x, dtype=float)
    if nu.kind == "cheb":
        s = nu.support.to_s(x)
        c = np.concatenate(([0.0], nu.coeffs))
        return 2.0 * np.pi / nu.support.half * C.chebval(s, c)
    return 2.0 * np.real(nu.cauchy(x + 0j))


def euler_lagrange_residual(nu: ChebMeasure, u: ConvexPotential, margin=0.05, n=201) -> float:
    s = np.linspace(-1.0 + 2 * margin, 1.0 - 2 * margin, n)
    x = nu.support.to_x(s)
    return float(np.max(np.abs(hilbert_field(nu, x) - u.du(x))))


def gibbs_energy(rho: ChebMeasure, u: ConvexPotential) -> float:
    """``-int int log|t - s| drho drho + int u drho``."""
    return -log_energy(rho) + rho.expect(u.u, n=max(256, rho.coeffs.size + 64))
