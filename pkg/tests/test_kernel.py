"""Transition kernel: acceptance rule, determinism, schedules, chain runner."""

import math

import numpy as np
import pytest

from hmc_lab import (
    ConfigurationError,
    HmcParams,
    LeapfrogConfig,
    NumericError,
    RandomizedSchedule,
    accept_prob,
    chain_summary,
    hmc_step,
    make_rng,
    run_chain,
    write_chain_csv,
)
from hmc_lab.kernel import kernel_spec_dict
from hmc_lab.potentials import PotentialModel


def _fixed(h, T, seed):
    return HmcParams(cfg=LeapfrogConfig(h=h, T=T), seed=seed)


# ------------------------------------------------------------- acceptance rule


def test_accept_prob_cases():
    assert accept_prob(1.0, 0.5) == 1.0  # energy fell
    assert accept_prob(1.0, 1.0) == 1.0
    assert math.isclose(accept_prob(0.0, math.log(2.0)), 0.5, rel_tol=1e-15)
    assert accept_prob(0.0, math.inf) == 0.0  # divergent proposal is rejected
    with pytest.raises(NumericError, match="NaN"):
        accept_prob(0.0, math.nan)
    with pytest.raises(NumericError, match="must be finite"):
        accept_prob(math.inf, 0.0)
    with pytest.raises(NumericError):
        accept_prob(math.nan, 1.0)


# ------------------------------------------------------------------ validation


def test_hmc_params_seed_validation():
    _fixed(0.5, 5, 0)
    with pytest.raises(ConfigurationError, match="unsigned 64-bit"):
        _fixed(0.5, 5, -1)
    with pytest.raises(ConfigurationError, match="unsigned 64-bit"):
        _fixed(0.5, 5, 2**64)


def test_schedule_validation_messages():
    with pytest.raises(ConfigurationError, match="at least one entry"):
        RandomizedSchedule(entries=())
    with pytest.raises(ConfigurationError, match=r"sum to 1 \(got"):
        RandomizedSchedule(entries=((0.3, 0.5, 5), (0.3, 0.5, 6)))
    with pytest.raises(ConfigurationError, match="weight must be >= 0"):
        RandomizedSchedule(entries=((2.0, 0.5, 5), (-1.0, 0.5, 6)))
    with pytest.raises(ConfigurationError, match="h must be > 0"):
        RandomizedSchedule(entries=((1.0, -0.5, 5),))
    with pytest.raises(ConfigurationError, match="T must be an integer >= 1"):
        RandomizedSchedule(entries=((1.0, 0.5, 0),))


def test_ramp_schedule_entries():
    sched = RandomizedSchedule.ramp([0.2, 0.3, 0.5], [0.25, 0.25, 0.25])
    assert len(sched.entries) == 3
    # entry i (1-based) integrates exactly i steps
    assert [e.T for e in sched.entries] == [1, 2, 3]
    assert all(e.h == 0.25 for e in sched.entries)
    assert np.allclose(sched.weights, [0.2, 0.3, 0.5])
    with pytest.raises(ConfigurationError, match="equal length"):
        RandomizedSchedule.ramp([0.5, 0.5], [0.25])


def test_run_chain_input_validation(gauss1):
    with pytest.raises(ConfigurationError, match="length-1 vector"):
        run_chain(gauss1, np.array([1.0, 2.0]), _fixed(0.5, 5, 0), 10)
    with pytest.raises(ConfigurationError, match="finite"):
        run_chain(gauss1, np.array([math.nan]), _fixed(0.5, 5, 0), 10)
    with pytest.raises(ConfigurationError, match="n_iters"):
        run_chain(gauss1, np.array([1.0]), _fixed(0.5, 5, 0), 0)
    sched = RandomizedSchedule(entries=((1.0, 0.5, 5),))
    with pytest.raises(ConfigurationError, match="explicit seed"):
        run_chain(gauss1, np.array([1.0]), sched, 10)


# ----------------------------------------------------------------- determinism


def test_chain_replay_is_bitwise(gauss2):
    kern = _fixed(0.4, 6, 123)
    a = run_chain(gauss2, np.array([2.0, -1.0]), kern, 200)
    b = run_chain(gauss2, np.array([2.0, -1.0]), kern, 200)
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(a.accepted, b.accepted)
    assert np.array_equal(a.proposal_dh, b.proposal_dh)


def test_single_entry_schedule_equals_fixed_kernel(gauss2):
    q0 = np.array([2.0, -1.0])
    fixed = run_chain(gauss2, q0, _fixed(0.4, 6, 55), 150)
    sched = RandomizedSchedule(entries=((1.0, 0.4, 6),))
    randomized = run_chain(gauss2, q0, sched, 150, seed=55)
    assert np.array_equal(fixed.samples, randomized.samples)
    assert np.array_equal(fixed.accepted, randomized.accepted)
    assert randomized.chosen_index is not None
    assert np.all(randomized.chosen_index == 0)
    assert fixed.chosen_index is None


def test_schedule_mixture_frequencies(gauss1):
    sched = RandomizedSchedule(entries=((0.25, 0.5, 4), (0.5, 0.5, 5), (0.25, 0.5, 6)))
    run = run_chain(gauss1, np.array([0.0]), sched, 5000, seed=77)
    freqs = np.bincount(run.chosen_index, minlength=3) / 5000
    assert np.max(np.abs(freqs - [0.25, 0.5, 0.25])) < 0.02


# --------------------------------------------------------------- rejection path


def test_rejection_returns_same_position_object(gauss1):
    # h = 3 exceeds the stability threshold of the unit oscillator, so the
    # proposal energy overflows and the move must be refused bitwise
    q = np.array([0.5])
    qn, accepted, dh = hmc_step(gauss1, q, _fixed(3.0, 5, 9), make_rng(9))
    assert not accepted
    assert qn is q
    assert dh == math.inf or dh > 1e6


def test_certain_rejection_chain_sits_still(gauss1):
    # T = 200 unstable steps overflow the proposal energy to +inf, which is
    # recorded as a flagged rejection rather than an error
    run = run_chain(gauss1, np.array([0.5]), _fixed(3.0, 200, 9), 40)
    assert not run.accepted.any()
    assert np.all(run.samples == 0.5)
    assert run.overflow_iters == list(range(40))
    assert np.all(np.isposinf(run.proposal_dh))
    assert run.error is None


def test_halting_on_non_finite_energy():
    bad = PotentialModel(
        dim=1,
        u=lambda q: np.full(np.shape(q)[:-1], np.nan),
        grad=lambda q: np.zeros_like(q),
        family_tag="nan",
    )
    run = run_chain(bad, np.array([0.0]), _fixed(0.1, 2, 1), 20)
    assert run.error == "NumericError: energy at the current state is non-finite"
    assert run.n < 20
    assert run.samples.shape[0] == run.n
    assert run.n_requested == 20


# ------------------------------------------------------------------- reporting


def test_chain_summary_and_spec_dict(gauss1, tmp_path):
    kern = _fixed(0.5, 5, 3)
    run = run_chain(gauss1, np.array([1.0]), kern, 60)
    summ = chain_summary(run)
    assert summ["n"] == 60 and summ["n_requested"] == 60
    assert 0.0 <= summ["acceptance_rate"] <= 1.0
    assert summ["seed"] == 3
    assert summ["params"] == {"type": "hmc", "h": 0.5, "T": 5, "seed": 3}
    assert "error" not in summ

    sched = RandomizedSchedule(entries=((1.0, 0.5, 5),))
    sspec = kernel_spec_dict(sched)
    assert sspec == {"type": "schedule", "entries": [{"weight": 1.0, "h": 0.5, "T": 5}]}

    path = tmp_path / "chain.csv"
    write_chain_csv(run, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,accepted,dh,q_0"
    assert len(lines) == 61
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] in {"0", "1"}
    # 17 significant digits round-trip the stored samples exactly
    assert float(lines[1].split(",")[3]) == run.samples[0, 0]
