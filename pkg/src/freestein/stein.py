"""Free Stein kernels on the line, Stein discrepancies and the contraction tests.

A kernel ``A(x, y)`` is a free Stein kernel for ``mu`` with respect to ``V`` if

    int V'(x) f(x) dmu(x) = int int A(x, y) Jf(x, y) dmu(x) dmu(y)

for polynomial ``f``, where ``Jf`` is the divided difference of ``f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .convolution import free_convolve
from .cumulants import cumulants_to_moments, moments_to_cumulants
from .equilibrium import solve_equilibrium
from .errors import BarycenterNotZero, HypothesisNotMet, NonConvexPotential
from .measure import ChebMeasure, SupportInterval, _smoothstep_rule, pushforward, semicircle, w2_distance
from .momentmap import (MomentMap, _invert, cheb_points, conjugate_derivative, jd_eval,
                        monotone_transport, solve_moment_map)
from .polys import as_poly, divided_difference
from .potential import ConvexPotential, PolynomialPotential

TENSOR_NODES = 128
KERNEL_KINDS = ("moment", "constant", "transported")


def potential_jd(V, x, y):
    """Divided difference of ``V'``; exact for polynomial potentials."""
    if isinstance(V, PolynomialPotential):
        return divided_difference(V._dp.coef, x, y)
    return jd_eval(V, x, y)


@dataclass(frozen=True, eq=False)
class SteinKernel1D:
    """Symmetric kernel ``A(x, y)`` on ``domain x domain``.

    ``kind`` is one of ``moment`` (built from a moment map), ``constant`` or
    ``transported`` (an inner kernel pulled back through ``V'``).
    """

    kind: str
    domain: SupportInterval
    map: MomentMap | None = None
    c: float = 1.0
    inner: "SteinKernel1D | None" = None
    V: ConvexPotential | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if self.kind == "constant":
            out = np.full(x.shape, float(self.c))
        elif self.kind == "moment":
            # evaluate the conjugate once per distinct abscissa so A(x,y) = A(y,x) bit for bit
            pts, inv = np.unique(np.concatenate((x.ravel(), y.ravel())), return_inverse=True)
            X = np.asarray(conjugate_derivative(self.map, pts))[inv]
            X, Y = X[: x.size].reshape(x.shape), X[x.size:].reshape(x.shape)
            out = _sym(jd_eval, self.map, X, Y)
        else:
            V = self.V
            out = self.inner(V.du(x), V.du(y)) / _sym(potential_jd, V, x, y)
        return out if out.ndim else float(out)

    def grid(self, n=64):
        """Values on an ``n x n`` interior Chebyshev grid of the domain."""
        t = cheb_points((self.domain.a, self.domain.b), n)
        return t, self(t[:, None], t[None, :])


def _sym(fn, obj, x, y):
    # order the arguments so the result is symmetric by construction
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    return fn(obj, hi, lo)


def constant_kernel(c: float, domain) -> SteinKernel1D:
    if not isinstance(domain, SupportInterval):
        domain = SupportInterval(*domain)
    return SteinKernel1D("constant", domain, c=float(c))


def moment_stein_kernel(map: MomentMap) -> SteinKernel1D:
    """``A(x, y) = (x - y)/((u*)'(x) - (u*)'(y))``, the divided difference of ``u'`` at conjugate points."""
    return SteinKernel1D("moment", map.target.support, map=map)


def stein_discrepancy(A: SteinKernel1D, mu: ChebMeasure, n: int = TENSOR_NODES) -> float:
    """``int int (A - 1)^2 dmu dmu`` by tensor Gauss quadrature.

    For hard-edge measures the rule is taken in the quantile variable under a
    smoothstep substitution, since the moment kernel is not smooth up to a
    hard edge and plain Gauss-Jacobi converges only algebraically there.
    """
    if mu.kind == "poly":
        p, w = _smoothstep_rule(n)
        x = mu.quantile(p)
    else:
        x, w = mu.quadrature(n)
    K = A(x[:, None], x[None, :]) - 1.0
    return float(w @ (K * K) @ w)


def stein_residual(A: SteinKernel1D, mu: ChebMeasure, V: ConvexPotential, f, n: int = TENSOR_NODES) -> float:
    """``|int V' f dmu - int int A Jf dmu dmu|`` for a polynomial ``f``."""
    p = as_poly(f)
    x, w = mu.quadrature(n)
    lhs = float(np.dot(w, V.du(x) * p(x)))
    K = A(x[:, None], x[None, :]) * divided_difference(p, x[:, None], x[None, :])
    return abs(lhs - float(w @ K @ w))


def gradient_image(mu: ChebMeasure, V: ConvexPotential, n=256) -> ChebMeasure:
    """``mu_V = (V')_# mu`` by quantile transfer through the increasing map ``V'``."""
    return pushforward(mu, V.du, lambda y: _invert(V.du, y, mu.support), V.d2u, n=n)


def _check_transport_hypotheses(mu, V):
    if V.kappa <= 0:
        raise NonConvexPotential("V must be strictly convex on the working interval")
    bary = mu.expect(V.du, n=max(128, mu.coeffs.size + 64))
    if abs(bary) > 1e-8:
        raise BarycenterNotZero(f"int V' dmu = {bary:.3e}")


def transported_kernel(A_V: SteinKernel1D, mu: ChebMeasure, V: ConvexPotential) -> SteinKernel1D:
    """Kernel ``A_V(V'(x), V'(y)) (x - y)/(V'(x) - V'(y))`` for ``mu`` with respect to ``V``.

    ``A_V`` must be a kernel for ``(V')_# mu`` with respect to ``x^2/2``.
    """
    _check_transport_hypotheses(mu, V)
    if isinstance(V, PolynomialPotential) and list(V.coeffs) == [0.0, 0.0, 0.5]:
        return A_V
    return SteinKernel1D("transported", mu.support, inner=A_V, V=V)


def transported_moment_kernel(mu: ChebMeasure, V: ConvexPotential, **solver) -> SteinKernel1D:
    """Moment kernel of ``(V')_# mu`` transported back to ``mu``."""
    _check_transport_hypotheses(mu, V)
    mu_V = gradient_image(mu, V)
    solver.setdefault("tol", 1e-10)
    A_V = moment_stein_kernel(solve_moment_map(mu_V, **solver))
    return transported_kernel(A_V, mu, V)


def kernel_sup(A: SteinKernel1D, n=64) -> float:
    return float(np.max(A.grid(n)[1]))


def contraction_check(u: ConvexPotential, mode: str = "moment_map", eps: float | None = None, n=257) -> dict:
    """Lipschitz bounds for uniformly convex ``u`` (``eps`` defaults to ``u.kappa``).

    ``moment_map``: the moment map ``phi`` of ``nu_u`` has ``sup phi'' <= 1/eps``,
    and so does its moment Stein kernel. ``caffarelli``: the monotone map from
    the semicircle onto ``nu_u`` has ``sup T' <= eps^(-1/2)``.
    """
    eps = float(u.kappa if eps is None else eps)
    if eps <= 0:
        raise NonConvexPotential("contraction bounds need eps > 0")
    eq = solve_equilibrium(u)
    if mode == "moment_map":
        target = eq.measure.translate(-eq.measure.mean)
        phi = solve_moment_map(target, tol=1e-10)
        sup = phi.source.measure.support
        observed = float(np.max(phi.d2u(cheb_points((sup.a, sup.b), n))))
        ksup = kernel_sup(moment_stein_kernel(phi))
        claimed = 1.0 / eps
        ok = observed <= claimed + 1e-6 and ksup <= claimed + 1e-6
        return {"mode": mode, "eps": eps, "bound_claimed": claimed, "bound_observed": observed,
                "kernel_sup": ksup, "pass": bool(ok)}
    if mode == "caffarelli":
        T = monotone_transport(semicircle(), eq.measure)
        x = cheb_points((-2.0, 2.0), n)
        observed = float(np.max(T.derivative(x)))
        claimed = eps ** -0.5
        return {"mode": mode, "eps": eps, "bound_claimed": claimed, "bound_observed": observed,
                "pass": bool(observed <= claimed + 1e-6)}
    raise ValueError(f"unknown contraction mode {mode!r}")


def stability_probe(u: ConvexPotential, strict: bool = True, n=257) -> dict:
    """Distance of ``nu_u`` from the semicircle under the stability hypotheses.

    Hypotheses: ``u`` 1-uniformly convex, ``nu_u`` centred with unit variance
    and support within 1e-3 of [-2, 2]. With ``strict`` a violation raises
    ``HypothesisNotMet``; otherwise the report lists the failures.
    """
    nu = solve_equilibrium(u).measure
    failed = []
    if u.kappa < 1.0 - 1e-12:
        failed.append(f"u is not 1-uniformly convex (kappa = {u.kappa:.6g})")
    if abs(nu.mean) > 1e-8:
        failed.append(f"nu_u not centred (mean = {nu.mean:.3e})")
    if abs(nu.variance - 1.0) > 1e-6:
        failed.append(f"variance {nu.variance:.9g} differs from 1")
    if max(abs(nu.support.a + 2.0), abs(nu.support.b - 2.0)) > 1e-3:
        failed.append(f"support [{nu.support.a:.6g}, {nu.support.b:.6g}] not within 1e-3 of [-2, 2]")
    if failed and strict:
        raise HypothesisNotMet(failed)
    eta = semicircle()
    T = monotone_transport(eta, nu)
    x = cheb_points((-2.0, 2.0), n)
    return {"w2": w2_distance(nu, eta), "sup_T_minus_id": float(np.max(np.abs(T(x) - x))),
            "failed_hypotheses": failed, "hypotheses_met": not failed}


def clt_kappa4(moments, n: int) -> Fraction:
    """Exact ``kappa_4`` of ``D_{1/sqrt n}(mu^{[+]n})`` from the moments ``(m_1, .., m_4)`` of centred ``mu``.

    Cumulants add under free convolution and the dilation multiplies ``m_k``
    by ``n^(-k/2)``. ``m_3`` is irrelevant to ``kappa_4`` once ``m_1 = 0``, so
    it is dropped and the whole computation stays rational.
    """
    m = [Fraction(v) for v in moments]
    if m[0] != 0:
        raise ValueError("measure must be centred exactly (m_1 = 0)")
    kappa = moments_to_cumulants(m)
    summed = cumulants_to_moments([n * k for k in kappa])
    dilated = [Fraction(0), summed[1] / n, Fraction(0), summed[3] / n ** 2]
    return moments_to_cumulants(dilated)[3]


def _fit_slope(n_list, values):
    ln = np.log(np.asarray(n_list, dtype=float))
    lv = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(ln, lv, 1)[0])


def clt_experiment(u: ConvexPotential, n_list=(2, 4, 8, 16, 32), **conv) -> dict:
    """Free CLT rate for ``nu_u`` normalised to mean 0 and variance 1.

    ``mu_n`` is the ``n``-fold free convolution of ``nu_u`` dilated by
    ``1/sqrt(n)``, built by binary splitting
    ``mu_{a+b} = D_{1/sqrt(a+b)}(D_{sqrt a} mu_a [+] D_{sqrt b} mu_b)``.

    Returns ``W2(mu_n, eta)^2`` per ``n``, the fitted slopes of ``log W2^2``
    and ``log W2`` against ``log n``, and the fourth-moment bookkeeping
    ``m4(mu_n) - 2`` against the exact value ``kappa_4/n`` computed in rational
    arithmetic from the moments of the normalised measure.
    """
    nu = solve_equilibrium(u).measure
    nu = nu.translate(-nu.mean)
    nu = nu.dilate(1.0 / math.sqrt(nu.variance))
    eta = semicircle()
    cache = {1: nu}

    def mu_n(n):
        if n not in cache:
            a = n // 2
            b = n - a
            left = mu_n(a).dilate(math.sqrt(a))
            right = mu_n(b).dilate(math.sqrt(b))
            cache[n] = free_convolve(left, right, **conv).dilate(1.0 / math.sqrt(n))
        return cache[n]

    # exact bookkeeping: kappa_1 = 0 and kappa_2 = 1 by normalisation
    base = [Fraction(0), Fraction(1), Fraction(nu.moment(3)), Fraction(nu.moment(4))]
    k4 = moments_to_cumulants(base)[3]
    rows = []
    for n in n_list:
        if int(n) < 1:
            raise ValueError("n must be a positive integer")
        m = mu_n(int(n))
        w2 = w2_distance(m, eta)
        exact = clt_kappa4(base, int(n))
        rows.append({"n": int(n), "w2": w2, "w2_squared": w2 * w2, "m4_minus_2": m.moment(4) - 2.0,
                     "kappa4_over_n": str(exact), "m4_error": abs(m.moment(4) - 2.0 - float(exact))})
    w2s = [r["w2_squared"] for r in rows]
    positive = all(v > 0 for v in w2s) and len(rows) >= 2
    return {"kappa4": str(k4), "rows": rows,
            "slope_w2_squared": _fit_slope(n_list, w2s) if positive else None,
            "slope_w2": _fit_slope(n_list, [r["w2"] for r in rows]) if positive else None}
