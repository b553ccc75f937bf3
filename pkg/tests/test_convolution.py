import math

import numpy as np
import pytest

from freestein.convolution import free_convolve
from freestein.equilibrium import solve_equilibrium
from freestein.measure import semicircle, uniform, w2_distance
from freestein.potential import PolynomialPotential


def test_semicircle_is_stable():
    out = free_convolve(semicircle(), semicircle())
    r = 2 * math.sqrt(2)
    assert (out.support.a, out.support.b) == pytest.approx((-r, r), abs=1e-4)
    x = np.linspace(-r, r, 401)
    exact = np.sqrt(np.clip(8 - x * x, 0, None)) / (4 * np.pi)
    assert np.max(np.abs(out.density(x) - exact)) < 1e-4


def test_variance_additive():
    q = solve_equilibrium(PolynomialPotential([0, 0, 0, 0, 0.25])).measure
    out = free_convolve(q, semicircle(0.5))
    assert out.moment(2) == pytest.approx(q.moment(2) + 0.5, abs=1e-6)


def test_uniform_plus_semicircle_moments():
    # uniform on [-1, 1]: m_2 = 1/3, m_4 = 1/5, so kappa_4 = 1/5 - 2/9 = -1/45;
    # cumulants add and m_4 = 2 kappa_2^2 + kappa_4 for a centred law
    out = free_convolve(uniform(-1, 1), semicircle())
    assert out.moment(2) == pytest.approx(4 / 3, abs=1e-6)
    assert out.moment(4) == pytest.approx(2 * (4 / 3) ** 2 - 1 / 45, abs=1e-5)


def test_near_identity_element():
    q = solve_equilibrium(PolynomialPotential([0, 0, 0.5, 0, 0.25])).measure
    eps = 1e-3
    out = free_convolve(q, semicircle(eps ** 2))
    assert w2_distance(out, q) <= 2 * eps
