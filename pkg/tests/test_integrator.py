"""Leapfrog map: hand values, order, reversibility, volume, closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmc_lab import (
    ConfigurationError,
    LeapfrogConfig,
    NumericError,
    PhaseState,
    closed_form_momentum,
    closed_form_position,
    free_particle,
    hamiltonian,
    leapfrog_map,
    leapfrog_run,
    leapfrog_step,
    make_rng,
    reference_flow,
    reversibility_residual,
    volume_symplectic_residual,
)

from conftest import family


# ---------------------------------------------------------------- hand values


def test_single_step_unit_gaussian_by_hand(gauss1):
    # kick: p1 = 0 - 0.25 * 1 = -0.25; drift: q1 = 1 - 0.125 = 0.875
    # kick: p2 = -0.25 - 0.25 * 0.875 = -0.46875
    st0 = PhaseState(np.array([1.0]), np.array([0.0]))
    st1 = leapfrog_step(gauss1, st0, 0.5)
    assert float(st1.q[0]) == 0.875
    assert float(st1.p[0]) == -0.46875


def test_two_steps_unit_gaussian_by_hand(gauss1):
    st0 = PhaseState(np.array([1.0]), np.array([0.0]))
    traj = leapfrog_run(gauss1, st0, LeapfrogConfig(h=0.5, T=2))
    assert float(traj.qs[1, 0]) == 0.875
    assert float(traj.ps[1, 0]) == -0.46875
    assert float(traj.qs[2, 0]) == 0.53125
    assert float(traj.ps[2, 0]) == -0.8203125
    # energy error after one step, exact in binary arithmetic
    assert float(traj.dh[0]) == -0.00732421875
    assert traj.n_steps == 2
    assert len(traj.states) == 3
    assert traj.energies.shape == (3,)
    assert np.array_equal(traj.dh, np.diff(traj.energies))
    assert traj.initial.q[0] == 1.0 and traj.final.q[0] == 0.53125


def test_free_particle_drifts_in_straight_line():
    m = free_particle(2)
    st0 = PhaseState(np.array([0.0, 1.0]), np.array([2.0, -1.0]))
    traj = leapfrog_run(m, st0, LeapfrogConfig(h=0.1, T=7))
    assert np.allclose(traj.final.q, st0.q + 0.7 * st0.p, rtol=1e-15)
    assert np.array_equal(traj.final.p, st0.p)
    assert np.max(np.abs(traj.dh)) == 0.0


# ---------------------------------------------------------- reference dynamics


def test_reference_flow_matches_quarter_period_oscillator(gauss1):
    # exact flow of the unit oscillator rotates (1, 0) to (0, -1) at t = pi/2
    final = reference_flow(gauss1, PhaseState(np.array([1.0]), np.array([0.0])), math.pi / 2)
    assert abs(float(final.q[0])) < 1e-11
    assert abs(float(final.p[0]) + 1.0) < 1e-11


def test_step_error_shrinks_at_second_order(power2):
    st0 = PhaseState(np.array([1.3, -0.4]), np.array([0.5, 1.1]))
    t = 0.8

    def endpoint_error(h):
        T = round(t / h)
        traj = leapfrog_run(power2, st0, LeapfrogConfig(h=h, T=T))
        ref = reference_flow(power2, st0, t)
        return float(np.linalg.norm(traj.final.as_vector() - ref.as_vector()))

    e1, e2 = endpoint_error(0.05), endpoint_error(0.025)
    assert 3.5 < e1 / e2 < 4.5


# --------------------------------------------------------- structural residuals


@given(seed=st.integers(0, 2**31 - 1))
def test_reversibility_holds_to_roundoff(seed):
    m = family("power", 2)
    rng = make_rng(seed)
    st0 = PhaseState(rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2))
    res = reversibility_residual(m, st0, LeapfrogConfig(h=0.3, T=8))
    assert res < 1e-12 * max(1.0, float(np.linalg.norm(st0.as_vector())))


def test_volume_and_symplectic_residuals_are_small(gauss2):
    st0 = PhaseState(np.array([0.9, -1.4]), np.array([0.2, 0.7]))
    vol, symp = volume_symplectic_residual(gauss2, st0, LeapfrogConfig(h=0.4, T=6))
    assert vol < 1e-6
    assert symp < 1e-6


def test_closed_form_matches_recursion(power2):
    st0 = PhaseState(np.array([1.2, -0.3]), np.array([-0.5, 0.8]))
    traj = leapfrog_run(power2, st0, LeapfrogConfig(h=0.35, T=5))
    for k in range(1, 6):
        assert np.allclose(
            closed_form_position(power2, st0, 0.35, k), traj.qs[k], rtol=1e-13, atol=1e-15
        )
        assert np.allclose(
            closed_form_momentum(power2, st0, 0.35, k), traj.ps[k], rtol=1e-13, atol=1e-15
        )
    with pytest.raises(ConfigurationError):
        closed_form_momentum(power2, st0, 0.35, 0)


def test_batched_map_agrees_with_loop(power2):
    rng = make_rng(7)
    qs = rng.uniform(-2, 2, (9, 2))
    ps = rng.uniform(-2, 2, (9, 2))
    qb, pb = leapfrog_map(power2, qs, ps, 0.3, 4)
    for i in range(9):
        traj = leapfrog_run(power2, PhaseState(qs[i], ps[i]), LeapfrogConfig(h=0.3, T=4))
        assert np.allclose(qb[i], traj.final.q, rtol=1e-14)
        assert np.allclose(pb[i], traj.final.p, rtol=1e-14)


def test_batched_map_tolerates_blowup(dwell2):
    # row 0 diverges; row 1 starts at the ring of minima with zero momentum
    # and therefore never moves, staying finite in the same batch
    qs = np.array([[2.0, 2.0], [1.0, 0.0]])
    ps = np.array([[2.0, 2.0], [0.0, 0.0]])
    qb, pb = leapfrog_map(dwell2, qs, ps, 2.0, 30)
    assert not np.all(np.isfinite(qb[0]))
    assert np.array_equal(qb[1], [1.0, 0.0])
    assert np.array_equal(pb[1], [0.0, 0.0])


# -------------------------------------------------------------------- failures


def test_unstable_step_raises_numeric_error(dwell2):
    st0 = PhaseState(np.array([2.0, 2.0]), np.array([2.0, 2.0]))
    with pytest.raises(NumericError, match="non-finite at step"):
        leapfrog_run(dwell2, st0, LeapfrogConfig(h=2.0, T=30))


def test_phase_state_validation():
    with pytest.raises(ConfigurationError):
        PhaseState(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ConfigurationError):
        PhaseState(np.array([[1.0]]), np.array([[1.0]]))


def test_leapfrog_config_validation():
    with pytest.raises(ConfigurationError):
        LeapfrogConfig(h=0.0, T=1)
    with pytest.raises(ConfigurationError):
        LeapfrogConfig(h=0.5, T=0)
    with pytest.raises(ConfigurationError):
        LeapfrogConfig(h=math.inf, T=1)


def test_phase_state_round_trip_and_flip():
    st0 = PhaseState(np.array([1.0, -2.0]), np.array([3.0, 4.0]))
    v = st0.as_vector()
    assert np.array_equal(v, [1.0, -2.0, 3.0, 4.0])
    back = PhaseState.from_vector(v)
    assert np.array_equal(back.q, st0.q) and np.array_equal(back.p, st0.p)
    flipped = st0.flip()
    assert np.array_equal(flipped.q, st0.q)
    assert np.array_equal(flipped.p, -st0.p)


def test_hamiltonian_is_potential_plus_kinetic(gauss2):
    st0 = PhaseState(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    assert float(hamiltonian(gauss2, st0)) == 0.5 * (1 + 4) + 0.5 * (9 + 16)
