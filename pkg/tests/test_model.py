"""Closed-form layer: drift, potentials, density, regime probabilities."""

import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

import tanhdrift as td
from tanhdrift.model import _finite_prob_quadrature, _truncation_hull

from oracles import (
    logistic_switch_prob,
    mixture_density,
    mixture_prob_above,
    mixture_prob_below,
)

H2D = td.Direction.HEALTHY_TO_DISTRESSED
D2H = td.Direction.DISTRESSED_TO_HEALTHY


def _random_params(rng):
    nu = rng.uniform(0.0, 3.0)
    sigma = rng.uniform(0.05, 1.0)
    x_star = rng.uniform(-1.0, 1.0)
    return td.ModelParams(nu=nu, sigma=sigma, x_star=x_star)


# ---------------------------------------------------------------------------
# parameters


def test_derived_quantities_recomputed():
    p = td.ModelParams(nu=1.5, sigma=0.4, x_star=math.log(80.0))
    assert p.mu_tilde == 1.5 * 0.4 * 0.4
    assert p.s_star == math.exp(math.log(80.0))
    p2 = td.ModelParams.from_threshold_price(1.5, 0.4, 80.0)
    assert p2.x_star == math.log(80.0)


def test_invalid_params_rejected():
    with pytest.raises(td.ValidationError):
        td.ModelParams(nu=-0.1, sigma=0.2, x_star=0.0)
    with pytest.raises(td.ValidationError):
        td.ModelParams(nu=1.0, sigma=-0.2, x_star=0.0)
    with pytest.raises(td.ValidationError):
        td.ModelParams(nu=float("nan"), sigma=0.2, x_star=0.0)
    with pytest.raises(td.ValidationError):
        td.ModelParams.from_threshold_price(1.0, 0.2, -5.0)


# ---------------------------------------------------------------------------
# drift


def test_drift_vanishes_at_threshold():
    p = td.ModelParams(nu=1.0, sigma=0.2, x_star=0.0)
    assert td.drift(p, 0.0) == 0.0


def test_drift_saturates_at_mu_tilde():
    p = td.ModelParams(nu=1.0, sigma=0.2, x_star=0.0)
    assert td.drift(p, 1e3) == pytest.approx(0.04, abs=1e-15)
    assert td.drift(p, -1e3) == pytest.approx(-0.04, abs=1e-15)


def test_drift_point_value_high_precision():
    # 2 * 0.25 * tanh(1) via mpmath (50 digits), frozen through float()
    p = td.ModelParams(nu=2.0, sigma=0.5, x_star=1.0)
    expected = float(2.0 * 0.25 * mpmath.mp.tanh(1.0))
    assert expected == pytest.approx(0.3807970779778824, abs=1e-15)
    assert td.drift(p, 1.5) == pytest.approx(expected, abs=1e-14)


def test_drift_odd_symmetric_and_bounded():
    p = td.ModelParams(nu=2.3, sigma=0.7, x_star=0.4)
    xs = np.linspace(-30, 30, 401)
    vals = td.drift(p, p.x_star + xs)
    mirror = td.drift(p, p.x_star - xs)
    np.testing.assert_allclose(vals, -mirror, atol=1e-15)
    assert np.all(np.abs(vals) <= p.mu_tilde + 1e-15)


# ---------------------------------------------------------------------------
# potentials


def test_potential_zero_at_threshold_and_for_nu_zero():
    assert td.potential(td.ModelParams(1.0, 1.0, 0.0), 0.0) == 0.0
    p0 = td.ModelParams(0.0, 1.0, 0.0)
    assert np.all(np.asarray(td.potential(p0, np.linspace(-7, 7, 31))) == 0.0)


def test_potential_wedge_asymptote():
    p = td.ModelParams(1.0, 1.0, 0.0)
    expected = -50.0 + math.log(2.0)
    assert td.potential(p, 50.0) == pytest.approx(expected, abs=1e-12)
    assert td.potential(p, -50.0) == pytest.approx(expected, abs=1e-12)
    # no overflow far out
    assert np.isfinite(td.potential(p, 1e6))


def test_force_equals_negative_potential_gradient():
    rng = np.random.default_rng(7)
    for _ in range(5):
        p = _random_params(rng)
        xs = rng.uniform(p.x_star - 4, p.x_star + 4, 50)
        h = 1e-6
        grad = (td.potential(p, xs + h) - td.potential(p, xs - h)) / (2 * h)
        np.testing.assert_allclose(td.drift(p, xs), -grad, atol=1e-6)


def test_schrodinger_identity_examples():
    assert td.schrodinger_potential(td.ModelParams(1.5, 0.3, 0.7), -3.1) == pytest.approx(
        2.25, abs=1e-13
    )
    assert td.schrodinger_potential(td.ModelParams(0.0, 1.0, 0.0), 5.0) == 0.0
    p = td.ModelParams(2.0, 0.1, 0.0)
    xs = np.linspace(-40, 40, 10_000)
    np.testing.assert_allclose(td.schrodinger_potential(p, xs), 4.0, atol=1e-12)


def test_schrodinger_identity_with_finite_difference_h():
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = _random_params(rng)
        xs = rng.uniform(p.x_star - 5, p.x_star + 5, 200)
        h = lambda x: td.drift(p, x) / (p.sigma * p.sigma)
        delta = 1e-6
        h_prime = (h(xs + delta) - h(xs - delta)) / (2 * delta)
        np.testing.assert_allclose(h(xs) ** 2 + h_prime, p.nu**2, atol=1e-6)


# ---------------------------------------------------------------------------
# transition density


def test_density_gaussian_center_nu_zero():
    q = td.DensityQuery(x=0.0, x0=0.0, t=1.0)
    p = td.ModelParams(0.0, 1.0, 0.0)
    assert td.transition_density(p, q) == pytest.approx(1.0 / math.sqrt(2 * math.pi), rel=1e-14)


def test_density_center_nu_one():
    q = td.DensityQuery(x=0.0, x0=0.0, t=1.0)
    p = td.ModelParams(1.0, 1.0, 0.0)
    expected = math.exp(-0.5) / math.sqrt(2 * math.pi)
    assert td.transition_density(p, q) == pytest.approx(expected, rel=1e-14)


def test_density_rejects_bad_t():
    with pytest.raises(td.ValidationError):
        td.DensityQuery(x=0.0, x0=0.0, t=0.0)
    with pytest.raises(td.ValidationError):
        td.density_profile(td.ModelParams(1.0, 1.0, 0.0), 0.0, 0.0, -1.0)
    with pytest.raises(td.ValidationError):
        td.density_profile(td.ModelParams(1.0, 0.0, 0.0), 0.0, 0.0, 1.0)


def test_density_matches_mixture_oracle():
    rng = np.random.default_rng(23)
    for _ in range(20):
        p = _random_params(rng)
        x0 = p.x_star + rng.uniform(-5, 5)
        t = rng.uniform(0.01, 10.0)
        xs = x0 + p.sigma * math.sqrt(t) * np.linspace(-6, 6, 41)
        got = td.density_profile(p, xs, x0, t)
        want = mixture_density(p.nu, p.sigma, p.x_star, xs, x0, t)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-300)


def test_density_no_overflow_under_stress():
    # nu |x - x_star| in the hundreds must stay finite
    p = td.ModelParams(3.0, 0.05, 0.0)
    vals = td.density_profile(p, np.linspace(-200, 200, 101), 150.0, 0.5)
    assert np.all(np.isfinite(vals))
    assert np.all(vals >= 0.0)


def test_density_symmetric_about_threshold_start():
    p = td.ModelParams(1.7, 0.3, 0.25)
    for t in (0.1, 1.0, 7.0):
        for delta in (0.01, 0.5, 3.0, 20.0):
            lo = td.transition_density(p, td.DensityQuery(p.x_star - delta, p.x_star, t))
            hi = td.transition_density(p, td.DensityQuery(p.x_star + delta, p.x_star, t))
            assert lo == hi


def test_normalization_randomized():
    rng = np.random.default_rng(42)
    for _ in range(50):
        p = _random_params(rng)
        if p.sigma == 0:
            continue
        x0 = p.x_star + rng.uniform(-5, 5)
        t = rng.uniform(0.01, 10.0)
        assert abs(td.density_normalization(p, x0, t) - 1.0) < 1e-8


def test_chapman_kolmogorov():
    rng = np.random.default_rng(5)
    for _ in range(5):
        p = _random_params(rng)
        if p.nu == 0:
            continue
        x0 = p.x_star + rng.uniform(-2, 2)
        t1, t2 = rng.uniform(0.05, 2.0, 2)
        x = x0 + rng.uniform(-2, 2)
        lo1, hi1 = _truncation_hull(p, x0, t1)
        lo2, hi2 = _truncation_hull(p, x, t2)
        lo, hi = min(lo1, lo2), max(hi1, hi2)
        composed, _ = quad(
            lambda y: float(td.density_profile(p, x, y, t2))
            * float(td.density_profile(p, y, x0, t1)),
            lo,
            hi,
            limit=300,
            epsabs=1e-10,
        )
        direct = float(td.density_profile(p, x, x0, t1 + t2))
        assert composed == pytest.approx(direct, abs=1e-6, rel=1e-6)


# ---------------------------------------------------------------------------
# asymptotic density


def test_asymptotic_density_mode_value():
    p = td.ModelParams(1.0, 0.2, 0.0)
    q = td.DensityQuery(x=p.mu_tilde * 1.0, x0=0.0, t=1.0)
    expected = 1.0 / (math.sqrt(2 * math.pi) * 0.2)
    assert td.asymptotic_density(p, q, +1) == pytest.approx(expected, rel=1e-14)


def test_asymptotic_ratio_approaches_one_deep_in_regime():
    # exact/asymptotic -> 1 requires both x and x0 deep on the same side;
    # keep them within a few sd of each other so neither density underflows
    for nu, sigma in [(1.0, 0.2), (2.0, 0.5), (0.7, 1.0)]:
        p = td.ModelParams(nu, sigma, 0.3)
        x = p.x_star + 20.0 / nu
        for t in (0.5, 2.0):
            x0 = x - 2.0 * sigma * math.sqrt(t)
            assert nu * (x0 - p.x_star) >= 8.0
            exact = td.transition_density(p, td.DensityQuery(x, x0, t))
            asym = td.asymptotic_density(p, td.DensityQuery(x, x0, t), +1)
            assert exact / asym == pytest.approx(1.0, abs=1e-6)


def test_asymptotic_equals_exact_for_nu_zero():
    p = td.ModelParams(0.0, 1.0, 0.0)
    for x in np.linspace(-3, 3, 13):
        q = td.DensityQuery(float(x), 0.5, 2.0)
        exact = td.transition_density(p, q)
        assert td.asymptotic_density(p, q, +1) == pytest.approx(exact, rel=1e-14)
        assert td.asymptotic_density(p, q, -1) == pytest.approx(exact, rel=1e-14)


def test_asymptotic_density_validation():
    p = td.ModelParams(1.0, 0.2, 0.0)
    with pytest.raises(td.ValidationError):
        td.asymptotic_density(p, td.DensityQuery(0.0, 0.0, 1.0), 2)


# ---------------------------------------------------------------------------
# finite-horizon regime probabilities


def test_finite_prob_boundary_is_half():
    for nu, sigma, t in [(0.5, 0.3, 0.2), (2.0, 0.8, 5.0), (0.0, 1.0, 1.0)]:
        p = td.ModelParams(nu, sigma, 0.7)
        for direction in (H2D, D2H):
            r = td.regime_transition_prob_finite(p, p.x_star, t, direction)
            assert r.value == 0.5
        if nu > 0:
            # the raw quadrature path agrees with the symmetry shortcut
            raw = _finite_prob_quadrature(p, p.x_star, t, H2D)
            assert abs(raw - 0.5) < 1e-10


def test_finite_prob_gaussian_case():
    p = td.ModelParams(0.0, 1.0, 0.0)
    r = td.regime_transition_prob_finite(p, 1.0, 1.0, H2D)
    assert r.value == pytest.approx(norm.cdf(-1.0), abs=1e-10)


def test_finite_prob_long_horizon_approaches_asymptote():
    p = td.ModelParams.from_threshold_price(1.0, 0.2, 100.0)
    r = td.regime_transition_prob_finite(p, math.log(150.0), 400.0, H2D)
    assert r.value == pytest.approx(1.0 / 3.25, abs=0.005)


def test_finite_prob_matches_mixture_cdf():
    rng = np.random.default_rng(31)
    for _ in range(15):
        p = _random_params(rng)
        if p.sigma == 0:
            continue
        t = rng.uniform(0.05, 5.0)
        off = rng.uniform(0.01, 4.0)
        up = td.regime_transition_prob_finite(p, p.x_star + off, t, H2D).value
        want_up = mixture_prob_below(p.nu, p.sigma, p.x_star, p.x_star + off, t, p.x_star)
        assert up == pytest.approx(want_up, abs=1e-9)
        dn = td.regime_transition_prob_finite(p, p.x_star - off, t, D2H).value
        want_dn = mixture_prob_above(p.nu, p.sigma, p.x_star, p.x_star - off, t, p.x_star)
        assert dn == pytest.approx(want_dn, abs=1e-9)


def test_finite_prob_validation():
    p = td.ModelParams(1.0, 0.2, 0.0)
    with pytest.raises(td.ValidationError):
        td.regime_transition_prob_finite(p, -0.5, 1.0, H2D)
    with pytest.raises(td.ValidationError):
        td.regime_transition_prob_finite(p, 0.5, 1.0, D2H)
    with pytest.raises(td.ValidationError):
        td.regime_transition_prob_finite(p, 0.5, 0.0, H2D)


def test_monotone_approach_to_asymptote():
    # sigma * nu * sqrt(T) >= 5 ladder: discrepancy shrinks as T doubles
    p = td.ModelParams(1.0, 1.0, 0.0)
    x0 = 0.4
    limit = td.default_prob_asymptotic(p, math.exp(x0), H2D).value
    gaps = []
    for horizon in (25.0, 50.0, 100.0, 200.0):
        assert p.sigma * p.nu * math.sqrt(horizon) >= 5.0
        v = td.regime_transition_prob_finite(p, x0, horizon, H2D).value
        gaps.append(abs(v - limit))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


# ---------------------------------------------------------------------------
# asymptotic default probability


def test_default_prob_examples():
    p = td.ModelParams.from_threshold_price(1.0, 0.2, 100.0)
    r = td.default_prob_asymptotic(p, 150.0, H2D)
    assert r.value == pytest.approx(1.0 / (1.0 + 1.5**2), rel=1e-12)
    assert r.is_asymptotic
    # boundary limit from above
    eps = td.default_prob_asymptotic(p, 100.0 * (1 + 1e-12), H2D)
    assert eps.value == pytest.approx(0.5, abs=1e-10)


def test_default_prob_mirror_image():
    p = td.ModelParams.from_threshold_price(1.0, 0.2, 100.0)
    up = td.default_prob_asymptotic(p, 150.0, H2D).value
    dn = td.default_prob_asymptotic(p, 100.0**2 / 150.0, D2H).value
    assert up == pytest.approx(dn, rel=1e-12)
    assert up == pytest.approx(logistic_switch_prob(1.0, math.log(150.0), math.log(100.0)), rel=1e-12)


def test_default_prob_extreme_ratio_no_overflow():
    p = td.ModelParams.from_threshold_price(3.0, 0.2, 1.0)
    r = td.default_prob_asymptotic(p, 1e100, H2D)
    assert 0.0 <= r.value < 1e-300 or r.value == 0.0


def test_default_prob_validation():
    p = td.ModelParams.from_threshold_price(1.0, 0.2, 100.0)
    with pytest.raises(td.ValidationError):
        td.default_prob_asymptotic(p, -3.0, H2D)
    with pytest.raises(td.ValidationError):
        td.default_prob_asymptotic(p, 50.0, H2D)
    with pytest.raises(td.ValidationError):
        td.default_prob_asymptotic(p, 150.0, D2H)


def test_finite_prob_consistent_with_asymptotic():
    p = td.ModelParams.from_threshold_price(1.0, 0.2, 100.0)
    asym = td.default_prob_asymptotic(p, 150.0, H2D).value
    fin = td.regime_transition_prob_finite(p, math.log(150.0), 400.0, H2D).value
    assert fin == pytest.approx(asym, abs=0.005)


# ---------------------------------------------------------------------------
# nu = 0 degeneration


def test_nu_zero_reduces_to_driftless_gaussian():
    p = td.ModelParams(0.0, 0.7, 1.3)
    x0, t = 0.2, 2.5
    xs = np.linspace(-4, 4, 21)
    got = td.density_profile(p, xs, x0, t)
    want = norm.pdf(xs, loc=x0, scale=0.7 * math.sqrt(t))
    np.testing.assert_allclose(got, want, rtol=1e-13)
    assert np.all(np.asarray(td.drift(p, xs)) == 0.0)
    assert td.default_prob_asymptotic(p, 2.0, D2H).value == 0.5
    got_p = td.regime_transition_prob_finite(p, 2.0, 4.0, H2D).value
    assert got_p == pytest.approx(norm.cdf((1.3 - 2.0) / (0.7 * 2.0)), abs=1e-10)
