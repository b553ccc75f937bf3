import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freestein.equilibrium import (euler_lagrange_residual, gibbs_energy, hilbert_field, schwinger_dyson_residual,
                                   solve_equilibrium)
from freestein.errors import NonConvexPotential
from freestein.measure import build_measure, semicircle
from freestein.potential import PolynomialPotential, quadratic


def test_semicircle_fixed_point():
    eq = solve_equilibrium(quadratic())
    assert (eq.support.a, eq.support.b) == pytest.approx((-2.0, 2.0), abs=1e-12)
    x = np.linspace(-2, 2, 201)
    assert np.max(np.abs(eq.measure.density(x) - semicircle().density(x))) <= 1e-10


@pytest.mark.parametrize("c", [0.25, 0.5, 2.0, 4.0])
def test_dilation_covariance(c):
    eq = solve_equilibrium(quadratic(c))
    ref = semicircle(1.0 / c)
    r = 2 / math.sqrt(c)
    assert (eq.support.a, eq.support.b) == pytest.approx((-r, r), abs=1e-9)
    # interior points: at the square-root edges a 1e-16 endpoint shift is amplified to 1e-8
    x = np.linspace(-r, r, 201)[1:-1]
    assert np.max(np.abs(eq.measure.density(x) - ref.density(x))) <= 1e-9
    assert eq.sd_residual <= 1e-10


def test_quartic_endpoint_oracle():
    # c_1 = (3/8) b^4 = 2 fixes b; c_3 = b^4 / 8 then gives d_3 = c_3 / pi
    b = (16 / 3) ** 0.25
    eq = solve_equilibrium(PolynomialPotential([0, 0, 0, 0, 0.25]))
    assert (eq.support.a, eq.support.b) == pytest.approx((-b, b), abs=1e-10)
    d = eq.measure.coeffs
    assert d[0] == pytest.approx(2 / math.pi, abs=1e-12)
    assert d[2] == pytest.approx(2 / (3 * math.pi), abs=1e-12)
    assert schwinger_dyson_residual(eq.measure, eq.potential, 6) <= 1e-8


def test_schwinger_dyson_semicircle():
    # f = x^3: int x^4 deta = 2 = int int (x^2 + xy + y^2)
    assert schwinger_dyson_residual(semicircle(), quadratic(), 3) <= 1e-12


def test_euler_lagrange_examples():
    x = np.linspace(-1.9, 1.9, 41)
    assert np.max(np.abs(hilbert_field(semicircle(), x) - x)) <= 1e-9
    assert euler_lagrange_residual(semicircle(), quadratic()) <= 1e-9
    assert euler_lagrange_residual(semicircle(2.0), quadratic(0.5)) <= 1e-9
    assert euler_lagrange_residual(semicircle(), PolynomialPotential([0, 0, 0, 0, 0.25])) > 0.1


def test_gibbs_energy_semicircle():
    assert gibbs_energy(semicircle(), quadratic()) == pytest.approx(0.75, abs=1e-6)


def test_gibbs_energy_minimal_under_perturbation():
    base = gibbs_energy(semicircle(), quadratic())
    rng = np.random.default_rng(7)
    for _ in range(10):
        # even perturbations through U_2 and U_4 keep mass and the mean
        d = [2 / math.pi, 0.0, *rng.uniform(-1e-2, 1e-2, 1), 0.0, *rng.uniform(-1e-2, 1e-2, 1)]
        rho = build_measure((-2, 2), d)
        assert gibbs_energy(rho, quadratic()) >= base - 1e-12


def test_gibbs_energy_translation():
    u = quadratic()
    rho = semicircle(0.7)
    c = 0.3
    lhs = gibbs_energy(rho.translate(c), u) - gibbs_energy(rho, u)
    x, w = rho.quadrature(128)
    assert lhs == pytest.approx(float(np.dot(w, u.u(x + c) - u.u(x))), abs=1e-9)


def test_endpoints_shrink_with_kappa():
    widths = [solve_equilibrium(quadratic(c)).support.width for c in (0.5, 1.0, 2.0, 4.0)]
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_degenerate_potential_rejected():
    with pytest.raises(NonConvexPotential):
        PolynomialPotential([0, 0, 0])


_potentials = st.tuples(st.floats(0.1, 2.0), st.floats(-0.5, 0.5), st.floats(0.0, 0.5)).map(
    lambda t: PolynomialPotential([0.0, 0.0, 0.5 * t[0], t[1] * t[2] / 3.0, 0.25 * t[2]]))


@settings(max_examples=15, deadline=None)
@given(_potentials)
def test_solved_pairs_residuals(u):
    # u'' = a + 2 b c x + 3 c x^2 stays positive since b^2 c^2 < 3 a c
    eq = solve_equilibrium(u)
    assert eq.sd_residual <= 1e-8
    assert eq.el_residual <= 1e-7
    assert eq.measure.mass == pytest.approx(1.0, abs=1e-12)
