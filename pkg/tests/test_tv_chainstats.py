"""Autocorrelation estimators and the binned TV-decay diagnostic."""

import numpy as np
import pytest

from hmc_lab import (
    ConfigurationError,
    HmcParams,
    InsufficientDataError,
    LeapfrogConfig,
    make_rng,
    run_chain,
)
from hmc_lab.diagnostics import chain_diagnostics, integrated_autocorr_time, tv_decay

from conftest import family


# ------------------------------------------------------------ autocorrelation


def test_iact_iid_sequence_is_one():
    x = make_rng(5).standard_normal(4000)
    assert integrated_autocorr_time(x) == 1.0


def test_iact_alternating_sequence_floors_at_one():
    x = np.tile([1.0, -1.0], 500)
    assert integrated_autocorr_time(x) == 1.0


def test_iact_ar1_matches_theory():
    # AR(1) with phi = 0.6 has integrated time (1 + phi) / (1 - phi) = 4
    rng = make_rng(12)
    n, phi = 20000, 0.6
    x = np.empty(n)
    x[0] = rng.standard_normal()
    eps = rng.standard_normal(n)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + eps[i]
    tau = integrated_autocorr_time(x)
    assert np.isclose(tau, 4.0194993449840934, rtol=1e-9)
    assert 3.0 < tau < 5.5


def test_iact_frozen_chain_degenerates_to_n():
    x = np.full(250, 3.14)
    assert integrated_autocorr_time(x) == 250.0


def test_chain_diagnostics_summary(gauss1):
    kern = HmcParams(cfg=LeapfrogConfig(h=0.5, T=5), seed=4)
    run = run_chain(gauss1, np.array([0.0]), kern, 2000)
    stats = chain_diagnostics(run)
    assert stats.n == 2000
    assert 0.8 < stats.acceptance_rate <= 1.0
    assert len(stats.iact) == 1 and len(stats.ess) == 1
    assert stats.iact[0] >= 1.0
    assert stats.ess[0] == 2000 / stats.iact[0]
    assert stats.min_ess == min(stats.ess)
    assert abs(stats.mean[0]) < 0.2
    assert abs(stats.var[0] - 1.0) < 0.3


def test_chain_diagnostics_needs_ten_iterations(gauss1):
    kern = HmcParams(cfg=LeapfrogConfig(h=0.5, T=5), seed=4)
    run = run_chain(gauss1, np.array([0.0]), kern, 9)
    with pytest.raises(InsufficientDataError, match="need at least 10"):
        chain_diagnostics(run)


# ------------------------------------------------------------------- tv decay


def test_tv_decay_gaussian_from_far_start(gauss1):
    kern = HmcParams(cfg=LeapfrogConfig(h=0.5, T=5), seed=7)
    curve = tv_decay(gauss1, kern, np.array([10.0]), range(0, 31, 2),
                     n_chains=1000, bins=40, seed=30)
    assert np.isclose(curve.rho_hat, 0.835814558034837, rtol=1e-9)
    assert np.isclose(curve.r2, 0.9769822199792352, rtol=1e-9)
    assert np.isclose(curve.noise_floor, 0.03402369175702719, rtol=1e-9)
    assert curve.fit_points == 7
    assert np.isclose(min(curve.tv_hat), 0.029308633478158378, rtol=1e-9)
    assert curve.fit_note == (
        "geometric fit over checkpoints above 3x noise floor and below saturation"
    )
    assert curve.rho_hat < 1.0 and curve.r2 > 0.9
    assert curve.iterations == tuple(range(0, 31, 2))
    assert curve.replications == 1000 and curve.bins == 40


def test_tv_decay_power_family(power1):
    kern = HmcParams(cfg=LeapfrogConfig(h=0.9, T=10), seed=8)
    curve = tv_decay(power1, kern, np.array([50.0]), range(0, 41, 4),
                     n_chains=1000, bins=40, seed=33)
    assert np.isclose(curve.rho_hat, 0.9254693137131288, rtol=1e-9)
    assert np.isclose(curve.r2, 0.9735859120268585, rtol=1e-9)
    assert curve.fit_points == 8


def test_tv_decay_stationary_control_fits_no_rate(gauss1):
    # chains started from exact target draws sit at the noise floor from
    # iteration zero, so no usable window exists and no rate is reported
    kern = HmcParams(cfg=LeapfrogConfig(h=0.5, T=5), seed=7)
    q0s = make_rng(31).standard_normal((1000, 1))
    curve = tv_decay(gauss1, kern, q0s, [0, 3, 6, 9, 12],
                     n_chains=1000, bins=40, seed=32)
    assert curve.rho_hat is None and curve.r2 is None
    assert curve.fit_note == (
        "insufficient checkpoints between saturation and the noise floor; no rate fitted"
    )
    assert np.isclose(curve.noise_floor, 0.03515304877634393, rtol=1e-9)
    assert max(curve.tv_hat) < 3.0 * curve.noise_floor


def test_tv_decay_worker_count_invariance(gauss1):
    kern = HmcParams(cfg=LeapfrogConfig(h=0.5, T=5), seed=7)
    kw = dict(n_chains=1000, bins=40, seed=30)
    a = tv_decay(gauss1, kern, np.array([10.0]), [0, 4, 8], workers=1, **kw)
    b = tv_decay(gauss1, kern, np.array([10.0]), [0, 4, 8], workers=4, **kw)
    assert a.tv_hat == b.tv_hat


def test_tv_decay_too_few_checkpoints_reports_zero_fit(gauss1):
    kern = HmcParams(cfg=LeapfrogConfig(h=0.5, T=5), seed=7)
    curve = tv_decay(gauss1, kern, np.array([10.0]), [0, 2],
                     n_chains=1000, bins=40, seed=30)
    assert curve.rho_hat is None
    assert curve.fit_points == 0
    assert "no rate fitted" in curve.fit_note


def test_tv_decay_validation(gauss1):
    kern = HmcParams(cfg=LeapfrogConfig(h=0.5, T=5), seed=7)
    with pytest.raises(ConfigurationError, match="1-D and 2-D"):
        tv_decay(family("gaussian", 3), kern, np.zeros(3), [0, 2], n_chains=1000)
    with pytest.raises(ConfigurationError, match="n_chains"):
        tv_decay(gauss1, kern, np.array([10.0]), [0, 2], n_chains=500)
    with pytest.raises(ConfigurationError, match="bins"):
        tv_decay(gauss1, kern, np.array([10.0]), [0, 2], n_chains=1000, bins=2)
    with pytest.raises(ConfigurationError):
        tv_decay(gauss1, kern, np.zeros((7, 1)), [0, 2], n_chains=1000)
    with pytest.raises(ConfigurationError):
        tv_decay(gauss1, kern, np.array([10.0]), [-1, 2], n_chains=1000)
