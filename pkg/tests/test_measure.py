import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from freestein.errors import NegativeDensity
from freestein.measure import (build_measure, evaluate, free_entropy, log_energy, max_correlation, moment,
                               recenter, semicircle, uniform, w2_distance)

CATALAN = [1, 1, 2, 5, 14, 42, 132]


def semicircle_cdf(x):
    # closed form, independent of the series machinery
    x = np.clip(x, -2.0, 2.0)
    return 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi


def semicircle_quantile(p):
    return np.array([optimize.brentq(lambda x: semicircle_cdf(x) - q, -2.0, 2.0, xtol=1e-15) for q in p])


def test_semicircle_coefficients():
    eta = build_measure((-2, 2), density=lambda x: np.sqrt(np.clip(4 - x * x, 0, None)) / (2 * np.pi))
    assert eta.coeffs[0] == pytest.approx(2 / np.pi, abs=1e-12)
    assert np.max(np.abs(eta.coeffs[1:]), initial=0.0) < 1e-12


def test_constant_density_is_uniform():
    mu = build_measure((-1, 1), density=lambda x: np.ones_like(x), kind="poly")
    assert mu.mass == pytest.approx(1.0, abs=1e-12)
    assert mu.density(0.3) == pytest.approx(0.5, abs=1e-12)


def test_quartic_density_from_samples():
    b = (16 / 3) ** 0.25

    def rho(x):
        s = x / b
        return (2 + 4 * s * s) * (2 / (3 * np.pi)) * np.sqrt(np.clip(1 - s * s, 0, None)) / b

    mu = build_measure((-b, b), density=rho)
    assert mu.coeffs[0] == pytest.approx(2 / np.pi, abs=1e-12)
    assert mu.coeffs[2] == pytest.approx(2 / (3 * np.pi), abs=1e-12)


def test_negative_density_rejected():
    with pytest.raises(NegativeDensity):
        build_measure((-1, 1), density=lambda x: x, kind="poly")


def test_eval_examples():
    eta = semicircle()
    assert evaluate(eta, 0.0, "cdf") == pytest.approx(0.5, abs=1e-14)
    assert evaluate(eta, 2.0, "cdf") == pytest.approx(1.0, abs=1e-14)
    assert evaluate(eta, 0.0, "density") == pytest.approx(1 / np.pi, abs=1e-14)


def test_cdf_matches_closed_form():
    x = np.linspace(-2, 2, 101)
    assert np.max(np.abs(semicircle().cdf(x) - semicircle_cdf(x))) < 1e-13


@pytest.mark.parametrize("m", range(7))
def test_catalan_moments(m):
    assert moment(semicircle(), 2 * m) == pytest.approx(CATALAN[m], abs=1e-10)
    assert abs(moment(semicircle(), 2 * m + 1)) < 1e-10


def test_moments_against_adaptive_quadrature():
    mu = uniform(0.0, 2.0)
    for k in range(6):
        ref = integrate.quad(lambda x: x ** k * 0.5, 0, 2)[0]
        assert mu.moment(k) == pytest.approx(ref, rel=1e-12)


def test_recenter():
    eta = recenter(semicircle())
    assert (eta.support.a, eta.support.b) == (-2.0, 2.0)
    mu = recenter(uniform(0.0, 2.0))
    assert (mu.support.a, mu.support.b) == pytest.approx((-1.0, 1.0), abs=1e-14)


@pytest.mark.parametrize("var", [0.5, 2.0])
def test_w2_scaled_semicircle(var):
    assert w2_distance(semicircle(var), semicircle()) == pytest.approx(abs(math.sqrt(var) - 1), abs=1e-8)


def test_w2_uniform_dense_oracle():
    # midpoint Riemann sum over 10^6 quantile levels, with the semicircle quantile
    # from a closed-form cdf table inverted by interpolation
    xs = np.linspace(-2, 2, 2_000_001)
    Fs = semicircle_cdf(xs)
    p = (np.arange(1_000_000) + 0.5) / 1_000_000
    q_eta = np.interp(p, Fs, xs)
    ref = math.sqrt(np.mean((2 * p - 1 - q_eta) ** 2))
    assert w2_distance(uniform(-1, 1), semicircle()) == pytest.approx(ref, abs=1e-6)


def test_quantile_closed_form():
    p = np.linspace(0.01, 0.99, 21)
    assert np.max(np.abs(semicircle().quantile(p) - semicircle_quantile(p))) < 1e-10


def test_log_energy_semicircle():
    assert log_energy(semicircle()) == pytest.approx(-0.25, abs=1e-6)
    assert free_entropy(semicircle()) == pytest.approx(0.5 + 0.5 * math.log(2 * math.pi), abs=1e-6)


def test_log_energy_uniform_closed_form():
    # int int log|x - y| on [-1, 1] with density 1/2 equals log 2 - 3/2
    assert log_energy(uniform(-1, 1)) == pytest.approx(math.log(2) - 1.5, abs=1e-6)


def test_log_energy_concentration():
    e1, e2 = log_energy(uniform(-0.1, 0.1)), log_energy(uniform(-0.01, 0.01))
    assert e2 < e1 < log_energy(uniform(-1, 1))


def test_max_correlation_examples():
    eta = semicircle()
    assert max_correlation(eta, eta) == pytest.approx(1.0, abs=1e-10)
    assert max_correlation(eta, semicircle(2.0)) == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert max_correlation(eta, eta.reflect()) == pytest.approx(1.0, abs=1e-10)


_measures = st.sampled_from([
    semicircle(), semicircle(0.5), semicircle(2.0, 0.3), uniform(-1, 1), uniform(0, 3),
    build_measure((-1.5, 1.5), [0.6, 0.0, 0.1]),
])


@settings(max_examples=25, deadline=None)
@given(_measures)
def test_mass_and_monotone_cdf(mu):
    assert mu.mass == pytest.approx(1.0, abs=1e-12)
    F = mu.cdf(mu.support.grid(512))
    assert np.all(np.diff(F) >= -1e-14)


@settings(max_examples=25, deadline=None)
@given(_measures, st.floats(0.02, 0.98))
def test_quantile_inverts_cdf(mu, t):
    x = mu.support.a + t * mu.support.width
    assert mu.quantile(mu.cdf(x)) == pytest.approx(x, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(_measures, _measures, _measures)
def test_w2_metric(a, b, c):
    assert abs(w2_distance(a, b) - w2_distance(b, a)) < 1e-15
    assert w2_distance(a, c) <= w2_distance(a, b) + w2_distance(b, c) + 1e-9


@settings(max_examples=20, deadline=None)
@given(_measures, st.floats(-3, 3))
def test_log_energy_translation_invariant(mu, c):
    assert log_energy(mu.translate(c)) == pytest.approx(log_energy(mu), abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(_measures, _measures)
def test_comonotone_beats_independent(a, b):
    assert max_correlation(a, b) >= a.mean * b.mean - 1e-12


def test_grid_csv(tmp_path):
    path = tmp_path / "eta.csv"
    semicircle().write_grid_csv(path, n=16)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,density,cdf" and len(lines) == 17


def test_json_roundtrip():
    mu = build_measure((-1.5, 1.5), [0.6, 0.0, 0.1])
    nu = type(mu).from_dict(mu.to_dict())
    assert np.allclose(nu.coeffs, mu.coeffs) and nu.kind == mu.kind
