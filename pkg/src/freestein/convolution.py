"""Free additive convolution through subordination functions.

For ``z`` in the upper half plane the subordination function ``w1`` of
``mu [+] nu`` is the attracting fixed point of

    w -> z + h_nu(z + h_mu(w)),   h(w) = 1/G(w) - w,

and ``G_{mu [+] nu}(z) = G_mu(w1(z))``. The density is read off by Stieltjes
inversion and re-expanded as a square-root-edge Chebyshev measure.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import SubordinationNonConvergent
from .measure import ChebMeasure, SupportInterval, build_measure, sampling_nodes

EPS = 1e-4
GRID = 1024
MAX_ITER = 500


def _h(m, w, derivative=False):
    if not derivative:
        return 1.0 / m.cauchy(w) - w
    G, dG = m.cauchy(w, derivative=True)
    return 1.0 / G - w, -dG / G ** 2 - 1.0


def _picard(mu, nu, z, w0, tol=1e-13, max_iter=MAX_ITER):
    w = w0.copy()
    active = np.ones(z.shape, dtype=bool)
    for _ in range(max_iter):
        wa = w[active]
        za = z[active]
        wn = za + _h(nu, za + _h(mu, wa))
        # keep iterates in the upper half plane
        wn = np.where(wn.imag > 0, wn, wn.real + 1e-300j)
        err = np.abs(wn - wa)
        w[active] = wn
        idx = np.nonzero(active)[0]
        active[idx[err <= tol * np.maximum(1.0, np.abs(wn))]] = False
        if not np.any(active):
            return w
    raise SubordinationNonConvergent(
        f"{int(active.sum())} grid nodes unresolved after {max_iter} Picard iterations")


def _newton(mu, nu, z, w, tol=1e-13, max_iter=MAX_ITER, strict=True):
    """Newton on ``w - z - h_nu(z + h_mu(w)) = 0`` with iterates kept in the upper half plane."""
    def phi(w):
        hm, dhm = _h(mu, w, True)
        hn, dhn = _h(nu, z + hm, True)
        return w - z - hn, 1.0 - dhn * dhm

    w = w.copy()
    f, df = phi(w)
    for _ in range(max_iter):
        res = np.abs(f)
        if np.all(res <= tol * np.maximum(1.0, np.abs(w))):
            return w
        lam = np.ones(w.shape)
        step = f / df
        for _ in range(30):
            nxt = w - lam * step
            ok = nxt.imag >= 0
            fn, dfn = phi(np.where(ok, nxt, w))
            better = ok & np.isfinite(fn) & (np.abs(fn) < res)
            if np.all(better | (res <= tol * np.maximum(1.0, np.abs(w)))):
                break
            lam = np.where(better, lam, 0.5 * lam)
        take = better
        w = np.where(take, nxt, w)
        f = np.where(take, fn, f)
        df = np.where(take, dfn, df)
        if not np.any(take):
            break
    unresolved = np.abs(f) > tol * np.maximum(1.0, np.abs(w))
    if strict and np.any(np.abs(f[unresolved]) > 1e-9 * np.maximum(1.0, np.abs(w[unresolved]))):
        raise SubordinationNonConvergent(
            f"{int(unresolved.sum())} grid nodes unresolved after Newton refinement")
    return w


def _F_real(m, w):
    with np.errstate(all="ignore"):
        g = float(np.real(m.cauchy(complex(w, 0.0))))
    # hard edges have a logarithmically divergent transform, so F vanishes there
    return 1.0 / g if np.isfinite(g) else 0.0


def _right_edge(mu, nu):
    """Right endpoint of supp(mu [+] nu) from the real branch of the subordination."""
    bm, bn = mu.support.b, nu.support.b
    Fn_edge = _F_real(nu, bn)
    scale = mu.support.width + nu.support.width

    def w2_of(w):
        target = _F_real(mu, w)
        if target <= Fn_edge:
            return None
        hi = bn + scale
        while _F_real(nu, hi) < target:
            hi = bn + 2 * (hi - bn)
        return brentq(lambda t: _F_real(nu, t) - target, bn, hi, xtol=1e-15, rtol=1e-15)

    # smallest admissible w
    wmin = bm
    if _F_real(mu, bm) <= Fn_edge:
        hi = bm + scale
        while _F_real(mu, hi) <= Fn_edge:
            hi = bm + 2 * (hi - bm)
        wmin = brentq(lambda t: _F_real(mu, t) - Fn_edge, bm, hi, xtol=1e-15, rtol=1e-15)

    def z_of(w):
        w2 = w2_of(w)
        if w2 is None:
            w2 = bn
        return w + w2 - _F_real(mu, w)

    ws = wmin + scale * np.geomspace(1e-8, 4.0, 200)
    ws = np.concatenate(([wmin], ws))
    zs = np.array([z_of(w) for w in ws])
    k = int(np.argmin(zs))
    if k == 0:
        return zs[0]
    lo, hi = ws[max(k - 1, 0)], ws[min(k + 1, ws.size - 1)]
    res = minimize_scalar(z_of, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14 * scale})
    return min(float(res.fun), float(zs[k]))


def free_convolve(mu: ChebMeasure, nu: ChebMeasure, eps=EPS, grid=GRID) -> ChebMeasure:
    """Free additive convolution ``mu [+] nu`` as a square-root-edge measure.

    Parameters
    ----------
    eps : float
        Height of the Picard stage ``z = x + i eps``.
    grid : int
        Number of sampling nodes on the result support.

    Notes
    -----
    Picard iteration contracts slowly close to the real axis, so it is run at
    height 1 only; Newton continuation then carries each node through the
    heights 1e-1 .. eps and finally onto the real axis, which removes the
    O(sqrt(eps)) smoothing near the edges.
    """
    b = _right_edge(mu, nu)
    a = -_right_edge(mu.reflect(), nu.reflect())
    sup = SupportInterval(a, b)
    x = sampling_nodes(sup, grid, "cheb")
    w = np.empty(x.shape, dtype=complex)
    # Picard well above the axis, then Newton continuation down to the axis
    z0 = x + 1j
    w = _picard(mu, nu, z0, z0 + 0j)
    for height in (1e-1, 1e-2, 1e-3, eps):
        w = _newton(mu, nu, x + 1j * height, w)
    w = _newton(mu, nu, x + 0j, w)
    dens = -np.imag(mu.cauchy(w)) / np.pi
    dens = np.clip(dens, 0.0, None)
    return build_measure(sup, samples=dens, kind="cheb")
