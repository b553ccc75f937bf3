"""Univariate free cumulants in exact arithmetic.

Moments and free cumulants are linked by sums over non-crossing partitions,
which collapse to the recursion

    m_n = sum_{s=1}^{n} kappa_s sum_{i_1 + ... + i_s = n - s} m_{i_1} ... m_{i_s}.

Public sequences start at order 1: ``(m_1, ..., m_N)`` with ``m_0 = 1``
implied, and ``(kappa_1, ..., kappa_N)``.
"""
from __future__ import annotations

from fractions import Fraction


def _compositions_sum(m, s, total, memo):
    # sum over (i_1..i_s) >= 0 with sum total of prod m_{i_j}
    key = (s, total)
    if key in memo:
        return memo[key]
    if s == 0:
        val = Fraction(1) if total == 0 else Fraction(0)
    else:
        val = sum((m[i] * _compositions_sum(m, s - 1, total - i, memo) for i in range(total + 1)), Fraction(0))
    memo[key] = val
    return val


def _as_fractions(seq):
    return [x if isinstance(x, Fraction) else Fraction(x) for x in seq]


def cumulants_to_moments(kappa):
    """Moments ``(m_1, ..., m_N)`` from free cumulants ``(kappa_1, ..., kappa_N)``."""
    k = [Fraction(0)] + _as_fractions(kappa)
    m = [Fraction(1)]
    for n in range(1, len(k)):
        memo = {}
        m.append(sum((k[s] * _compositions_sum(m, s, n - s, memo) for s in range(1, n + 1)), Fraction(0)))
    return m[1:]


def moments_to_cumulants(moments):
    """Free cumulants ``(kappa_1, ..., kappa_N)`` from moments ``(m_1, ..., m_N)``."""
    m = [Fraction(1)] + _as_fractions(moments)
    k = [Fraction(0)] * len(m)
    for n in range(1, len(m)):
        memo = {}
        # the s = n term is kappa_n itself (all other indices zero)
        rest = sum((k[s] * _compositions_sum(m, s, n - s, memo) for s in range(1, n)), Fraction(0))
        k[n] = m[n] - rest
    return k[1:]
