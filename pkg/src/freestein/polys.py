"""Univariate polynomial helpers: coercion and exact divided differences."""
from __future__ import annotations

import numpy as np
from numpy.polynomial import Polynomial


def as_poly(f) -> Polynomial:
    """Coerce ``f`` (Polynomial, coefficient sequence or scalar) to a monomial Polynomial."""
    if isinstance(f, Polynomial):
        return Polynomial(f.convert(kind=Polynomial).coef)
    if np.isscalar(f):
        return Polynomial([float(f)])
    return Polynomial(np.asarray([float(c) for c in f], dtype=float))


def divided_difference(f, x, y):
    """``(f(x) - f(y))/(x - y)`` for a polynomial, with ``f'(x)`` on the diagonal.

    Expanded as ``sum_k c_k h_{k-1}(x, y)`` with complete homogeneous sums, so
    there is no cancellation near ``x = y``.
    """
    c = as_poly(f).coef
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x.shape)
    h = np.ones(x.shape)  # h_{k-1}
    ypow = np.ones(x.shape)
    for k in range(1, c.size):
        if k > 1:
            ypow = ypow * y
            h = x * h + ypow
        out = out + c[k] * h
    return out


def second_divided_difference(f, x, y):
    """``f[x, x, y] = (f'(x)(x - y) - (f(x) - f(y)))/(x - y)^2``; ``f''(x)/2`` on the diagonal."""
    c = as_poly(f).coef
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    # f[x, x, y] = sum_k c_k sum_{i+j=k-2} (i+1) x^i y^j, built by Horner in y
    out = np.zeros(x.shape)
    for k in range(2, c.size):
        if c[k] == 0:
            continue
        acc = np.zeros(x.shape)
        for i in range(k - 1):
            acc = acc * y + (i + 1) * x ** i
        out = out + c[k] * acc
    return out
