"""Energy-error decomposition and the negative-energy horizon."""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmc_lab import CapabilityError, ConfigurationError, LeapfrogConfig, PhaseState, leapfrog_run
from hmc_lab.diagnostics import (
    TERM_NAMES,
    energy_decomposition,
    energy_error_trace,
    negative_energy_horizon,
)
from hmc_lab.potentials import PotentialModel

from conftest import family


# ------------------------------------------------------------------ hand values


def test_unit_gaussian_terms_by_hand(gauss1):
    # one step from (1, 0) at h = 1/2: the six integral terms reduce to
    # closed forms for a quadratic potential and can be checked by hand
    dec = energy_decomposition(gauss1, PhaseState(np.array([1.0]), np.array([0.0])), 0.5)
    assert tuple(TERM_NAMES) == (
        "h2_shear",
        "h3_cross",
        "h4_quad",
        "h4_norm",
        "h5_cross",
        "h6_norm",
    )
    vals = dec.terms
    assert vals[0] == 0.0
    assert vals[1] == 0.0  # p0 = 0 kills the h^3 cross term
    assert math.isclose(vals[2], -0.0078125, rel_tol=1e-12)
    assert vals[3] == 0.0
    assert vals[4] == 0.0
    assert math.isclose(vals[5], 0.00048828125, rel_tol=1e-12)
    assert dec.direct == -0.00732421875
    assert math.isclose(dec.total, dec.direct, rel_tol=1e-12)
    assert dec.residual <= dec.quad_tolerance


@given(
    lam=st.floats(0.25, 4.0),
    q0=st.floats(-2.0, 2.0),
    p0=st.floats(-2.0, 2.0),
    h=st.floats(0.05, 0.45),
)
def test_quadratic_closed_forms(lam, q0, p0, h):
    # precision-lam gaussian: each term has a polynomial closed form in
    # (h, lam, q0, p0) derived by integrating the quadratic interpolants
    m = family("gaussian", 1, precision=lam)
    dec = energy_decomposition(m, PhaseState(np.array([q0]), np.array([p0])), h)
    got = dec.as_dict()
    expected = {
        "h2_shear": 0.0,
        "h3_cross": h**3 * lam**2 * p0 * q0 / 4.0,
        "h4_quad": -(h**4) * lam**3 * q0 * q0 / 8.0,
        "h4_norm": h**4 * lam**2 * p0 * p0 / 8.0,
        "h5_cross": -(h**5) * lam**3 * q0 * p0 / 8.0,
        "h6_norm": h**6 * lam**4 * q0 * q0 / 32.0,
    }
    for name in TERM_NAMES:
        assert math.isclose(got[name], expected[name], rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(dec.total, dec.direct, rel_tol=1e-12, abs_tol=1e-12)


def test_stationary_start_kills_position_terms(power2):
    # from the minimum q = 0 the gradient vanishes, so every term carrying
    # a gradient factor at q0 integrates to zero up to quadrature noise
    dec = energy_decomposition(power2, PhaseState(np.zeros(2), np.array([0.7, -0.2])), 0.3)
    got = dec.as_dict()
    for name in ("h3_cross", "h4_quad", "h5_cross", "h6_norm"):
        assert abs(got[name]) < 1e-13


def test_identity_residual_across_families(rng):
    cases = [
        (family("gaussian", 1), 0.5),
        (family("gaussian", 2, precision=[1.0, 4.0]), 0.4),
        (family("power", 2), 0.5),
        (family("homogeneous_perturbed", 2), 0.5),
        (family("double_well", 2), 0.1),
    ]
    worst = 0.0
    for m, hcap in cases:
        for _ in range(20):
            stt = PhaseState(rng.standard_normal(m.dim), rng.standard_normal(m.dim))
            h = rng.uniform(0.01, hcap)
            dec = energy_decomposition(m, stt, h)
            worst = max(worst, dec.residual / max(1.0, abs(dec.direct)))
    assert worst <= 1e-9


def test_junction_crossing_needs_composite_rule(homog2):
    # the blend junction at r = 3 sits inside this drift segment; honoring
    # the cut keeps the identity tight, ignoring it loses many digits
    stt = PhaseState(np.array([2.9, 0.0]), np.array([3.0, 0.0]))
    good = energy_decomposition(homog2, stt, 0.5)
    assert good.residual < 1e-12
    smooth = dataclasses.replace(homog2, kink_radii=())
    bad = energy_decomposition(smooth, stt, 0.5)
    assert bad.residual > 1e-8


def test_quad_nodes_floor():
    m = family("gaussian", 1)
    with pytest.raises(ConfigurationError, match="quad_nodes"):
        energy_decomposition(m, PhaseState(np.array([1.0]), np.array([0.0])), 0.5, quad_nodes=4)


def test_decomposition_requires_hessian(gauss1):
    stripped = PotentialModel(dim=1, u=gauss1.u, grad=gauss1.grad, family_tag="stripped")
    with pytest.raises(CapabilityError):
        energy_decomposition(stripped, PhaseState(np.array([1.0]), np.array([0.0])), 0.5)


def test_as_dict_round_trip(gauss1):
    dec = energy_decomposition(gauss1, PhaseState(np.array([1.0]), np.array([0.5])), 0.4)
    d = dec.as_dict()
    assert set(TERM_NAMES) <= set(d)
    assert d["total"] == dec.total and d["direct"] == dec.direct
    assert tuple(d[name] for name in TERM_NAMES) == dec.terms


# ---------------------------------------------------------------------- horizon


def _brute_force_horizon(model, q0, p0, h, t_max):
    """Independent trace-based check: longest all-negative prefix of dH."""
    stt = PhaseState(q0, p0)
    try:
        traj = leapfrog_run(model, stt, LeapfrogConfig(h=h, T=t_max))
        dh = traj.dh
    except Exception:
        # rebuild step by step, stopping where the trajectory leaves floats
        dh = []
        cur = stt
        from hmc_lab import hamiltonian, leapfrog_step

        prev_h = float(hamiltonian(model, cur))
        for _ in range(t_max):
            try:
                cur = leapfrog_step(model, cur, h)
            except Exception:
                break
            new_h = float(hamiltonian(model, cur))
            if not math.isfinite(new_h):
                break
            dh.append(new_h - prev_h)
            prev_h = new_h
        dh = np.asarray(dh)
    k = 0
    for v in dh:
        if v < 0:
            k += 1
        else:
            break
    return k


def test_horizon_matches_brute_force(power1):
    for r in (1.0, 10.0, 100.0):
        q0 = np.array([r])
        p0 = np.array([-1.0])
        got = negative_energy_horizon(power1, PhaseState(q0, p0), h=0.9, t_max=1500)
        want = _brute_force_horizon(power1, q0, p0, 0.9, 1500)
        assert got == want


def test_horizon_grows_with_radius(power1):
    horizons = [
        negative_energy_horizon(
            power1, PhaseState(np.array([r]), np.array([-1.0])), h=0.9, t_max=1200
        )
        for r in (10.0, 100.0, 1000.0, 10000.0)
    ]
    assert horizons == [2, 4, 1004, 1200]  # last start saturates the cap


def test_horizon_caps_at_t_max(gauss1):
    stt = PhaseState(np.array([5.0]), np.array([-1.0]))
    got = negative_energy_horizon(gauss1, stt, h=0.1, t_max=3)
    assert 0 <= got <= 3


def test_horizon_survives_blowup(dwell2):
    # divergence at step k ends the horizon at k - 1 instead of raising
    stt = PhaseState(np.array([2.0, 2.0]), np.array([2.0, 2.0]))
    got = negative_energy_horizon(dwell2, stt, h=2.0, t_max=50)
    assert isinstance(got, int)
    assert 0 <= got < 50


def test_horizon_validation(gauss1):
    stt = PhaseState(np.array([1.0]), np.array([-1.0]))
    with pytest.raises(ConfigurationError):
        negative_energy_horizon(gauss1, stt, h=0.5, t_max=0)


def test_energy_error_trace_structure(gauss1):
    stt = PhaseState(np.array([1.0]), np.array([0.0]))
    trace = energy_error_trace(gauss1, stt, h=0.5, t_max=10)
    assert trace.shape == (11,)
    assert trace[0] == 0.0
    assert math.isclose(trace[1], -0.00732421875, rel_tol=1e-15)
    assert np.all(np.isfinite(trace))


def test_energy_error_trace_marks_divergence(dwell2):
    stt = PhaseState(np.array([2.0, 2.0]), np.array([2.0, 2.0]))
    trace = energy_error_trace(dwell2, stt, h=2.0, t_max=30)
    assert trace.shape == (31,)
    assert not np.all(np.isfinite(trace))
    bad = np.where(~np.isfinite(trace))[0]
    assert np.all(~np.isfinite(trace[bad[0]:]))  # once divergent, stays flagged
