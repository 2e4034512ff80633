"""Exponential drift and rejection-mass probes for the proposal kernel.

Both probes address the pre-acceptance proposal map: fresh momentum,
T leapfrog steps, no accept/reject.  The drift probe estimates

    (K V_a)(q) / V_a(q),   V_a(q) = exp(a ||q||),

by Monte Carlo over momenta for start points on spheres of increasing
radius, entirely in log-domain.  The rejection-mass probe measures the
probability that a proposal is simultaneously uphill in energy (dH > 0)
and downhill in V_a, the joint event whose probability must vanish at
large radii for the drift of the full kernel to follow from the drift of
the proposal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import nnls
from scipy.special import logsumexp

from ..errors import ConfigurationError
from ..integrator import LeapfrogConfig, leapfrog_map
from ..parallel import run_chunked
from ..potentials import PotentialModel
from ..rng import sphere_directions

DEFAULT_A_GRID = (0.01, 0.05, 0.1, 0.5, 1.0)

KERNEL_NOTE = "ratios estimated for the pre-acceptance proposal kernel"


@dataclass(frozen=True)
class DriftReport:
    a: float                           # best multiplier on the grid
    a_grid: tuple[float, ...]
    radii: tuple[float, ...]
    ratios: tuple[float, ...]          # KV_a/V_a at each radius, for best a
    stderrs: tuple[float, ...]
    lambda_hat: float
    b_hat: float
    grid_ratios_at_max: dict           # {a: ratio at the largest radius}
    drift_detected: bool               # ratio + 3 se < 1 at the largest radius
    n_momenta: int
    overflowed: tuple[int, ...]        # per-radius count of points lost to overflow
    kernel_note: str = KERNEL_NOTE


@dataclass(frozen=True)
class RejectionMassCurve:
    radii: tuple[float, ...]
    masses: tuple[float, ...]
    stderrs: tuple[float, ...]
    a: float
    n_momenta: int
    note: str = "event {dH > 0} & {V_a(q_T) <= V_a(q_0)}; the V_a comparison reduces to ||q_T|| <= ||q_0||"


def _proposal_displacements(model, cfg, r, n_momenta, rng, workers):
    """||q_T|| - r and dH for proposals started on the radius-r sphere."""
    d = model.dim

    def chunk(n_chunk, crng):
        q0 = r * sphere_directions(crng, n_chunk, d)
        p0 = crng.standard_normal((n_chunk, d))
        with np.errstate(all="ignore"):
            e0 = model.u(q0) + 0.5 * np.sum(p0 * p0, axis=-1)
            qT, pT = leapfrog_map(model, q0, p0, cfg.h, cfg.T)
            eT = model.u(qT) + 0.5 * np.sum(pT * pT, axis=-1)
            delta = np.linalg.norm(qT, axis=-1) - r
        return delta, eT - e0

    parts = run_chunked(chunk, rng, n_momenta, workers=workers)
    delta = np.concatenate([p[0] for p in parts])
    dh = np.concatenate([p[1] for p in parts])
    return delta, dh


def _log_domain_ratio(a: float, delta: np.ndarray) -> tuple[float, float, bool]:
    """(mean of exp(a*delta), stderr, overflowed) using logsumexp throughout."""
    n = delta.shape[0]
    finite = np.isfinite(delta)
    x = a * delta[finite]
    if x.size == 0:
        return float("nan"), float("nan"), True
    log_m1 = logsumexp(x) - np.log(x.size)
    log_m2 = logsumexp(2.0 * x) - np.log(x.size)
    with np.errstate(over="ignore"):
        m1 = float(np.exp(log_m1))
        m2 = float(np.exp(log_m2))
    if not (np.isfinite(m1) and np.isfinite(m2)):
        return m1, float("inf"), True
    var = max(0.0, m2 - m1 * m1)
    return m1, float(np.sqrt(var / x.size)), not bool(finite.all())


def drift_estimate(
    model: PotentialModel,
    cfg: LeapfrogConfig,
    radii,
    n_momenta: int,
    rng: np.random.Generator,
    a_grid=DEFAULT_A_GRID,
    workers: int = 1,
) -> DriftReport:
    """Scan the multiplier grid and report the a with the strongest contraction."""
    radii = [float(r) for r in sorted(radii)]
    a_grid = [float(a) for a in a_grid]
    if any(a <= 0 for a in a_grid):
        raise ConfigurationError("drift multipliers must be > 0")

    # one displacement sample per radius, shared across the whole a-grid
    deltas = {r: _proposal_displacements(model, cfg, r, n_momenta, rng, workers)[0] for r in radii}

    per_a = {}
    for a in a_grid:
        ratios, ses, oflow = [], [], []
        for r in radii:
            m1, se, bad = _log_domain_ratio(a, deltas[r])
            ratios.append(m1)
            ses.append(se)
            oflow.append(int(bad))
        per_a[a] = (ratios, ses, oflow)

    r_max = radii[-1]
    grid_at_max = {a: per_a[a][0][-1] for a in a_grid}
    finite_as = [a for a in a_grid if np.isfinite(grid_at_max[a])]
    if not finite_as:
        raise ConfigurationError("all drift estimates overflowed; reduce the multiplier grid")
    best = min(finite_as, key=lambda a: grid_at_max[a])
    ratios, ses, oflow = per_a[best]

    # least-squares fit ratios(r) ~ lambda + b / V_a(r), constrained >= 0
    A = np.column_stack([np.ones(len(radii)), np.exp(-best * np.asarray(radii))])
    y = np.asarray(ratios)
    ok = np.isfinite(y)
    lam, b = (nnls(A[ok], y[ok])[0] if ok.sum() >= 2 else (float("nan"), float("nan")))

    detected = bool(np.isfinite(ratios[-1]) and ratios[-1] + 3.0 * ses[-1] < 1.0)
    return DriftReport(
        a=best,
        a_grid=tuple(a_grid),
        radii=tuple(radii),
        ratios=tuple(float(v) for v in ratios),
        stderrs=tuple(float(v) for v in ses),
        lambda_hat=float(lam),
        b_hat=float(b),
        grid_ratios_at_max={repr(a): float(v) for a, v in grid_at_max.items()},
        drift_detected=detected,
        n_momenta=int(n_momenta),
        overflowed=tuple(int(v) for v in oflow),
    )


def rejection_mass(
    model: PotentialModel,
    cfg: LeapfrogConfig,
    a: float,
    radii,
    n_momenta: int,
    rng: np.random.Generator,
    workers: int = 1,
) -> RejectionMassCurve:
    """Estimate P(dH > 0 and ||q_T|| <= ||q_0||) on each sphere."""
    if a <= 0:
        raise ConfigurationError(f"a must be > 0, got {a}")
    radii = [float(r) for r in sorted(radii)]
    masses, ses = [], []
    for r in radii:
        delta, dh = _proposal_displacements(model, cfg, r, n_momenta, rng, workers)
        uphill = np.where(np.isfinite(dh), dh, np.inf) > 0.0
        inward = np.where(np.isfinite(delta), delta, np.inf) <= 0.0
        hit = uphill & inward
        p_hat = float(np.mean(hit))
        masses.append(p_hat)
        ses.append(float(np.sqrt(p_hat * (1.0 - p_hat) / len(hit))))
    return RejectionMassCurve(
        radii=tuple(radii),
        masses=tuple(masses),
        stderrs=tuple(ses),
        a=float(a),
        n_momenta=int(n_momenta),
    )
