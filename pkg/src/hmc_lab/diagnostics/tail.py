"""Tail acceptance probe: is the energy error non-positive far out?

For radius r the probe draws start positions uniformly on the sphere of
radius r and momenta uniformly in the ball of radius r^gamma, integrates
T leapfrog steps and records the fraction of draws with H_T - H_0 <= 0.
In the heavy-tail regime every proposal out there should be accepted with
probability one, i.e. the fraction should be exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..integrator import LeapfrogConfig, PhaseState, leapfrog_map
from ..parallel import run_chunked
from ..potentials import PotentialModel
from ..rng import ball_points, sphere_directions
from .energy import negative_energy_horizon


@dataclass(frozen=True)
class TailAcceptanceProfile:
    radii: tuple[float, ...]
    fractions: tuple[float, ...]       # share of finite draws with dH <= 0
    worst_dh: tuple[float, ...]        # max finite dH per radius
    excluded: tuple[int, ...]          # non-finite draws per radius (flagged)
    gamma: float
    n_momenta: int
    h: float
    T: int
    horizon: Optional[tuple[int, ...]] = None


def _batch_energy(model, q, p):
    with np.errstate(all="ignore"):
        return model.u(q) + 0.5 * np.sum(p * p, axis=-1)


def tail_acceptance(
    model: PotentialModel,
    cfg: LeapfrogConfig,
    radii,
    gamma: float,
    n_momenta: int,
    rng: np.random.Generator,
    workers: int = 1,
    horizon_t_max: Optional[int] = None,
) -> TailAcceptanceProfile:
    """Sample the far-field energy error at each radius.

    ``gamma`` must satisfy 0 <= gamma < m - 1 when the model's growth
    exponent m is known (momenta stay small relative to the potential's
    own scale); gamma = 0 probes unit-ball momenta.
    """
    if gamma < 0:
        raise ConfigurationError(f"gamma must be >= 0, got {gamma}")
    m = model.growth_exponent
    if m is not None and not gamma < m - 1.0:
        raise ConfigurationError(
            f"gamma must be < m - 1 = {m - 1.0} for this model, got {gamma}"
        )
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise ConfigurationError("radii must be > 0")

    d = model.dim
    fractions, worsts, excluded, horizons = [], [], [], []
    for r in radii:
        def chunk(n_chunk: int, crng: np.random.Generator, _r=r):
            q0 = _r * sphere_directions(crng, n_chunk, d)
            p0 = ball_points(crng, n_chunk, d, _r**gamma)
            e0 = _batch_energy(model, q0, p0)
            qT, pT = leapfrog_map(model, q0, p0, cfg.h, cfg.T)
            eT = _batch_energy(model, qT, pT)
            return eT - e0

        dh = np.concatenate(run_chunked(chunk, rng, n_momenta, workers=workers))
        finite = np.isfinite(dh)
        n_fin = int(finite.sum())
        fractions.append(float(np.mean(dh[finite] <= 0.0)) if n_fin else float("nan"))
        worsts.append(float(np.max(dh[finite])) if n_fin else float("nan"))
        excluded.append(int(len(dh) - n_fin))
        if horizon_t_max is not None:
            u = sphere_directions(rng, 2, d)
            state = PhaseState(r * u[0], u[1])
            horizons.append(negative_energy_horizon(model, state, cfg.h, horizon_t_max))

    return TailAcceptanceProfile(
        radii=tuple(radii),
        fractions=tuple(fractions),
        worst_dh=tuple(worsts),
        excluded=tuple(excluded),
        gamma=float(gamma),
        n_momenta=int(n_momenta),
        h=cfg.h,
        T=cfg.T,
        horizon=tuple(horizons) if horizon_t_max is not None else None,
    )
