import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from freestein.equilibrium import solve_equilibrium
from freestein.errors import NotCentered
from freestein.measure import build_measure, log_energy, max_correlation, semicircle, uniform
from freestein.momentmap import (MomentMap, cheb_points, conjugate_derivative, jd_eval, kahler_einstein_residual,
                                 monotone_transport, pushforward_residual, solve_moment_map, variational_objective)
from freestein.potential import PolynomialPotential, quadratic

QUARTIC = PolynomialPotential([0, 0, 0, 0, 0.25])
MIXED = PolynomialPotential([0, 0, 0.5, 0, 0.25])


@pytest.fixture(scope="module")
def maps():
    return {
        "eta": solve_moment_map(semicircle(), tol=1e-10),
        "half": solve_moment_map(semicircle(0.5), tol=1e-10),
        "two": solve_moment_map(semicircle(2.0), tol=1e-10),
        "uniform": solve_moment_map(uniform(-1, 1), tol=1e-10),
        "quartic": solve_moment_map(solve_equilibrium(QUARTIC).measure, tol=1e-10),
    }


def _sup_on_support(mm, f):
    x = cheb_points(mm.working_interval, 257)
    return float(np.max(np.abs(f(x))))


def test_semicircle_identity(maps):
    mm = maps["eta"]
    assert _sup_on_support(mm, lambda x: mm.du(x) - x) <= 1e-6
    assert mm.working_interval == pytest.approx((-2.0, 2.0), abs=1e-6)


@pytest.mark.parametrize("key,var", [("half", 0.5), ("two", 2.0)])
def test_scaled_semicircle(maps, key, var):
    mm = maps[key]
    assert _sup_on_support(mm, lambda x: mm.du(x) - var * x) <= 1e-6
    r = 2 / math.sqrt(var)
    assert mm.working_interval == pytest.approx((-r, r), abs=1e-6)


def test_uniform_pushforward(maps):
    assert pushforward_residual(maps["uniform"]) <= 1e-6
    assert not maps["uniform"].diagnostics["clamp_active_at_convergence"]


def test_uncentred_target_rejected():
    with pytest.raises(NotCentered):
        solve_moment_map(uniform(0.0, 2.0))


def test_restart_from_other_initial():
    mm = solve_moment_map(semicircle(), tol=1e-10, initial=quadratic(2.0))
    assert _sup_on_support(mm, lambda x: mm.du(x) - x) <= 1e-6


def test_monotone_transport_examples():
    x = np.linspace(-1.9, 1.9, 39)
    assert np.max(np.abs(monotone_transport(semicircle(), semicircle())(x) - x)) <= 1e-8
    for var in (0.5, 2.0):
        T = monotone_transport(semicircle(), semicircle(var))
        assert np.max(np.abs(T(x) - math.sqrt(var) * x)) <= 1e-8
    T = monotone_transport(semicircle(0.25), semicircle())
    y = np.linspace(-0.95, 0.95, 39)
    assert np.max(np.abs(T(y) - 2 * y)) <= 1e-8


def test_conjugate_derivative_examples(maps):
    assert conjugate_derivative(maps["eta"], 0.7) == pytest.approx(0.7, abs=1e-9)
    assert conjugate_derivative(maps["two"], 0.7) == pytest.approx(0.35, abs=1e-9)
    mm = MomentMap.from_potential(MIXED)  # u'(x) = x^3 + x
    assert conjugate_derivative(mm, 2.0) == pytest.approx(1.0, abs=1e-10)


def test_jd_examples():
    assert jd_eval(quadratic(), 0.3, -1.2) == pytest.approx(1.0, abs=1e-14)
    assert jd_eval(QUARTIC, 1.0, 2.0) == pytest.approx(7.0, abs=1e-12)
    assert jd_eval(QUARTIC, 1.0, 1.0) == pytest.approx(3.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_jd_symmetric_and_positive(x, y):
    mm = MomentMap.from_potential(MIXED)
    assert jd_eval(mm, x, y) == jd_eval(mm, y, x)
    assert jd_eval(mm, x, y) >= mm.kappa_min


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.0, 1.0))
def test_conjugate_involution(t):
    mm = MomentMap.from_potential(MIXED)
    x = t * mm.working_interval[1]
    assert conjugate_derivative(mm, mm.du(x)) == pytest.approx(x, abs=1e-9)


def test_kahler_einstein_fixed_point(maps):
    res, const = kahler_einstein_residual(maps["eta"], quadratic(), return_constant=True)
    assert res <= 1e-8 and abs(const) <= 1e-8


@pytest.mark.parametrize("key,var", [("half", 0.5), ("two", 2.0)])
def test_kahler_einstein_scaled(maps, key, var):
    res, const = kahler_einstein_residual(maps[key], quadratic(1 / var), return_constant=True)
    assert res <= 1e-6
    assert const == pytest.approx(2 * math.log(var), abs=1e-6)


def test_kahler_einstein_quartic(maps):
    assert kahler_einstein_residual(maps["quartic"], QUARTIC) <= 1e-5


def test_variational_minimality_scaled_target(maps):
    mu = semicircle(2.0)
    nu = maps["two"].source.measure
    base = variational_objective(nu, mu)
    rng = np.random.default_rng(3)
    d = np.zeros(5)
    d[0] = nu.coeffs[0]
    for _ in range(10):
        pert = d.copy()
        pert[2], pert[4] = rng.uniform(-1e-2, 1e-2, 2) * d[0]
        rho = build_measure(nu.support, pert)
        assert variational_objective(rho, mu) >= base - 1e-10


def test_variational_semicircle_minimizer():
    eta = semicircle()
    base = variational_objective(eta, eta)
    for var in (0.8, 1.25):
        assert variational_objective(semicircle(var), eta) >= base


def test_variational_reflection():
    # log-energy is reflection invariant, so only the correlation term changes
    rho = build_measure((-1.5, 1.5), [0.6, 0.05, 0.1])
    mu = uniform(-1, 1).translate(0.0)
    gap = variational_objective(rho, mu) - variational_objective(rho.reflect(), mu)
    assert log_energy(rho) == pytest.approx(log_energy(rho.reflect()), abs=1e-12)
    assert gap == pytest.approx(max_correlation(rho, mu) - max_correlation(rho.reflect(), mu), abs=1e-12)
