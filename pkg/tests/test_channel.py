from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from airfer.channel import (
    EULER_GAMMA,
    ChannelConfigError,
    ChannelRealization,
    FadingModel,
    PowerConstraint,
    exp_integral_e1,
    gamma_array,
    mu_inv_h,
    mu_inv_h_e1,
    sample_gain,
    sample_gains,
    scaling_factor,
    snr_to_noise_std,
    transmit_mac,
)

mp.mp.dps = 40


def e1_series(x):
    """-gamma - ln x - sum (-x)^m / (m m!) in 40-digit arithmetic."""
    x = mp.mpf(x)
    total, term, m = mp.mpf(0), mp.mpf(1), 1
    while True:
        term *= -x / m
        add = term / m
        total += add
        if abs(add) < mp.mpf(10) ** -45 * max(1, abs(total)):
            return -mp.euler - mp.log(x) - total
        m += 1


def test_e1_examples():
    assert exp_integral_e1(1.0) == pytest.approx(0.2193839, abs=1e-6)
    assert exp_integral_e1(0.5) == pytest.approx(0.5597736, abs=1e-6)
    assert exp_integral_e1(1.0) == pytest.approx(float(e1_series(1)), rel=1e-12)
    assert exp_integral_e1(0.5) == pytest.approx(float(e1_series(0.5)), rel=1e-12)


def test_e1_small_x_limit():
    x = 1e-8
    assert exp_integral_e1(x) == pytest.approx(-EULER_GAMMA - math.log(x), rel=1e-4)


@pytest.mark.parametrize("x", [1e-12, 1e-4, 0.1, 0.7, 0.999, 1.0, 1.001, 1.5, 3.0, 10.0, 40.0])
def test_e1_vs_series_oracle(x):
    assert exp_integral_e1(x) == pytest.approx(float(e1_series(x)), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(1e-10, 600))
def test_e1_vs_scipy(x):
    assert exp_integral_e1(x) == pytest.approx(special.exp1(x), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_e1_domain(bad):
    with pytest.raises(ValueError):
        exp_integral_e1(bad)


def test_mu_e1_example():
    assert mu_inv_h_e1(FadingModel(1.0, 2.0)) == pytest.approx(0.087523, abs=1e-5)
    assert mu_inv_h_e1(FadingModel(1.0, 2.0)) == pytest.approx(float(e1_series(1) / mp.sqrt(2 * mp.pi)), rel=1e-12)


@pytest.mark.parametrize("sigma_h", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("h_min", [0.05, 0.2, 0.5, 2.0])
def test_mu_matches_quadrature(sigma_h, h_min):
    a = math.sqrt(h_min)
    num = 2 * integrate.quad(lambda h: stats.norm.pdf(h, scale=sigma_h) / h**2, a, np.inf)[0]
    acc = 2 * stats.norm.sf(a, scale=sigma_h)
    assert mu_inv_h(FadingModel(sigma_h, h_min)) == pytest.approx(num / acc, rel=1e-8)


def test_mu_monte_carlo():
    m = FadingModel(1.0, 0.5)
    h = sample_gains(m, (10**6,), np.random.default_rng(2))
    assert np.mean(1 / h**2) == pytest.approx(mu_inv_h(m), rel=0.02)


def test_mu_decreasing_in_threshold():
    for fn in (mu_inv_h, mu_inv_h_e1):
        vals = [fn(FadingModel(1.0, t)) for t in (0.1, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_mu_diverges_at_zero_threshold():
    for fn in (mu_inv_h, mu_inv_h_e1):
        with pytest.raises(ChannelConfigError, match="positive"):
            fn(FadingModel(1.0, 0.0))


def test_snr():
    assert snr_to_noise_std(0, 1) == 1.0
    assert snr_to_noise_std(10, 1) == pytest.approx(0.316228, abs=1e-6)
    assert snr_to_noise_std(-10, 4) == pytest.approx(6.32456, abs=1e-5)
    assert snr_to_noise_std(math.inf, 1) == 0.0
    assert PowerConstraint(4.0, -10).noise_std == pytest.approx(2 * math.sqrt(10))


def test_scaling_factor_examples():
    sf = scaling_factor(1, 1.0, 1.0, 2, 2, 0.0)
    assert sf.gamma == pytest.approx(math.sqrt(2), abs=1e-9)
    g1 = scaling_factor(3, 1.0, 0.4, 10, 10, 0.3).gamma
    g2 = scaling_factor(6, 1.0, 0.4, 10, 10, 0.3).gamma
    assert g2 / g1 == pytest.approx(2.0, rel=1e-14)
    gs = [scaling_factor(5, 1.0, 0.4, 10, 10, s).gamma for s in (0.0, 0.1, 0.5, 1.0)]
    assert all(a > b for a, b in zip(gs, gs[1:]))


def test_scaling_factor_formula_and_vectorized():
    m, P, mu, k, d, s = 7, 2.0, 0.8, 10, 5, 0.4
    want = m * math.sqrt(P / (mu * (1 - 1 / k + d * s**2)))
    assert scaling_factor(m, P, mu, k, d, s).gamma == pytest.approx(want, rel=1e-15)
    got = gamma_array(np.array([m, 2 * m]), P, mu, k, d, np.array([s, s]))
    assert got == pytest.approx([want, 2 * want], rel=1e-15)
    assert scaling_factor(m, P, mu, k, d, s, noise_dims=3).gamma > want
    with pytest.raises(ValueError):
        scaling_factor(0, P, mu, k, d, s)
    with pytest.raises(ValueError):
        scaling_factor(1, P, mu, 1, d, s)


def test_gain_threshold_and_symmetry():
    m = FadingModel(1.0, 0.2)
    h = sample_gains(m, (10**5,), np.random.default_rng(0))
    assert np.all(np.abs(h) >= math.sqrt(0.2))
    assert np.mean(h < 0) == pytest.approx(0.5, abs=0.01)


def test_scalar_gain_sampler():
    m = FadingModel(1.5, 0.8)
    rng = np.random.default_rng(3)
    h = np.array([sample_gain(m, rng) for _ in range(20_000)])
    assert np.all(h**2 >= 0.8)
    assert np.mean(1 / h**2) == pytest.approx(mu_inv_h(m), rel=0.04)
    a = [sample_gain(m, np.random.default_rng(9)) for _ in range(3)]
    assert len(set(a)) == 1


def test_gain_sampling_deterministic():
    m = FadingModel()
    a = sample_gains(m, (50, 7), np.random.default_rng(4))
    b = sample_gains(m, (50, 7), np.random.default_rng(4))
    assert np.array_equal(a, b)


def test_acceptance():
    assert FadingModel(1.0, 0.2).acceptance == pytest.approx(2 * stats.norm.sf(math.sqrt(0.2)))
    with pytest.raises(ChannelConfigError, match="threshold"):
        sample_gain(FadingModel(1.0, 30.0), np.random.default_rng(0))


def test_transmit_mac():
    y = np.array([0.3, -1.0, 2.0])
    z = transmit_mac({0: y}, ChannelRealization({0: 1.0}, np.zeros(3)))
    assert np.array_equal(z, y)
    z = transmit_mac({0: y, 1: -y}, ChannelRealization({0: 0.7, 1: 0.7}, np.zeros(3)))
    assert np.array_equal(z, np.zeros(3))
    with pytest.raises(KeyError):
        transmit_mac({2: y}, ChannelRealization({0: 1.0}, np.zeros(3)))


def test_channel_inversion_recovers_payload():
    gamma, m = 3.0, 4
    x = np.array([0.1, -0.4, 0.3])
    for h in (-2.0, -0.5, 0.45, 1.3):
        y = gamma * x / (m * h)
        z = transmit_mac({5: y}, ChannelRealization({5: h}, np.zeros(3)))
        assert np.allclose(z, gamma * x / m, rtol=1e-15, atol=0)


def test_model_validation():
    with pytest.raises(ValueError):
        FadingModel(0.0, 0.2)
    with pytest.raises(ValueError):
        FadingModel(1.0, -0.1)
    with pytest.raises(ValueError):
        PowerConstraint(0.0)
