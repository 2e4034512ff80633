"""Small-set minorization probe.

Write the T-step position map as f(q, p) = Th p + g(q, p) with Th = T h.
If g grows at most affinely in the momentum, ||g(q, p)|| <= C0 + C1 ||p||
with C1 < Th over a start ball ||q|| <= R, then every target y in the ball
of radius M has a momentum preimage p* with

    ||p*|| <= M_tilde = (M + C0) / (Th - C1),

so the transition density from anywhere in B(0, R) is bounded below on
B(0, M) by L^-d * min over B(0, M_tilde) of the momentum density, with L
a Lipschitz bound of f in p.  The probe estimates the constants by
sampling, then certifies coverage by numerically inverting f in p for a
grid of targets, and assembles the minorization level from the pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..integrator import LeapfrogConfig, leapfrog_map
from ..potentials import PotentialModel
from ..rng import ball_points, sphere_directions

# difference quotients at or below roundoff scale are measurement noise,
# not growth; snapping them to zero keeps affine maps exactly affine
_QUOTIENT_SNAP = 1e-12


@dataclass(frozen=True)
class GrowthProbe:
    """Empirical affine-growth constants of g(q, p) = f(q, p) - Th p."""

    l_hat: float          # Lipschitz bound of g in p (0 for p-independent g)
    c0_hat: float         # affine envelope intercept for ||g||
    c1_hat: float         # affine envelope slope for ||g|| in ||p||
    th: float             # T * h
    margin: float         # Th - c1_hat
    condition_ok: bool    # c1_hat < Th
    p_radius: float
    n_samples: int

    @property
    def map_lipschitz(self) -> float:
        """Lipschitz bound of the full position map f = Th p + g in p."""
        return self.th + self.l_hat


@dataclass(frozen=True)
class SmallSetProbe:
    R: float
    M: float
    m_tilde: float
    l_hat: float
    c0_hat: float
    c1_hat: float
    th: float
    coverage_fraction: float
    epsilon_hat: float
    grid_n: int
    n_starts: int
    n_pairs: int
    solver_failures: int
    out_of_ball: int
    dim: int
    target_note: str = ""


def _endpoint(model, cfg, Q, P):
    return leapfrog_map(model, Q, P, cfg.h, cfg.T)[0]


def proposal_growth_probe(
    model: PotentialModel,
    cfg: LeapfrogConfig,
    R: float,
    n_samples: int,
    rng: np.random.Generator,
    p_radius: Optional[float] = None,
) -> GrowthProbe:
    """Estimate (L, C0, C1) for the T-step map over the start ball of radius R.

    L is the largest momentum difference quotient of g (its Lipschitz
    constant over the probed momentum ball; 0 when g ignores p).  C1 is the
    chord slope of the ||g|| growth anchored at p = 0: the smallest slope
    through the p = 0 ceiling that dominates the far samples.  When g grows
    sublinearly in ||p|| the chord slope falls toward 0 as the probe ball
    widens, which is the behaviour the irreducibility condition Th > C1
    cares about; a max quotient would stay pinned at the local slope near
    p = 0 instead.  C0 is then the smallest intercept that dominates every
    sampled ||g(q, p)|| - C1 ||p||, so (C0, C1) is a valid affine envelope
    of all observations.  Boundary rays of the start ball and p = 0 are
    probed deterministically so the envelope is anchored where affine maps
    attain their extremes.
    """
    if R <= 0 or n_samples < 8:
        raise ConfigurationError("growth probe needs R > 0 and n_samples >= 8")
    th = cfg.T * cfg.h
    if p_radius is None:
        p_radius = 10.0 * max(1.0, th)
    d = model.dim
    snap = _QUOTIENT_SNAP * max(1.0, th)

    # start points: random interior plus exact boundary rays and the origin
    anchors = np.concatenate([np.eye(d) * R, -np.eye(d) * R, np.zeros((1, d))])
    Q = np.concatenate([ball_points(rng, n_samples, d, R), anchors])
    nq = Q.shape[0]

    # zero-momentum anchor rows pin the chord at ||p|| = 0
    g0 = _endpoint(model, cfg, Q, np.zeros_like(Q))  # g(q, 0) = f(q, 0)
    c0_anchor = float(np.max(np.linalg.norm(g0, axis=-1)))
    norms_g = [np.linalg.norm(g0, axis=-1)]
    norms_p = [np.zeros(nq)]

    # radially aligned full-momentum rows at the boundary starts; for
    # rotation-symmetric potentials these are the extreme corners of the
    # (q, p) box and random ball draws alone visit them too rarely
    Qb = np.concatenate([anchors[: 2 * d]] * 2)
    Pb_aligned = np.concatenate([anchors[: 2 * d], -anchors[: 2 * d]]) * (p_radius / R)
    g_aligned = _endpoint(model, cfg, Qb, Pb_aligned) - th * Pb_aligned
    norms_g.append(np.linalg.norm(g_aligned, axis=-1))
    norms_p.append(np.full(Qb.shape[0], p_radius))

    # momentum pairs for difference quotients: one local and one global
    # pair per start point
    Pa = ball_points(rng, nq, d, p_radius)
    Pb_local = Pa + 1e-3 * (1.0 + p_radius) * sphere_directions(rng, nq, d)
    Pb_global = ball_points(rng, nq, d, p_radius)

    quo_g = []
    fa = _endpoint(model, cfg, Q, Pa)
    ga = fa - th * Pa
    norms_g.append(np.linalg.norm(ga, axis=-1))
    norms_p.append(np.linalg.norm(Pa, axis=-1))
    for Pb in (Pb_local, Pb_global):
        fb = _endpoint(model, cfg, Q, Pb)
        gb = fb - th * Pb
        sep = np.linalg.norm(Pa - Pb, axis=-1)
        ok = sep > 1e-14
        quo_g.append(np.linalg.norm(ga - gb, axis=-1)[ok] / sep[ok])
        norms_g.append(np.linalg.norm(gb, axis=-1))
        norms_p.append(np.linalg.norm(Pb, axis=-1))

    quo_g = np.concatenate(quo_g)
    quo_g = quo_g[np.isfinite(quo_g)]
    if quo_g.size == 0:
        raise ConfigurationError("growth probe produced no finite difference quotients")
    l_hat = float(np.max(quo_g))
    if l_hat <= snap:
        l_hat = 0.0

    ng = np.concatenate(norms_g)
    npn = np.concatenate(norms_p)
    finite = np.isfinite(ng)
    # chord slope over the outer half of the momentum ball: the inner-ball
    # bulge belongs to the intercept, not the slope
    far = finite & (npn >= 0.5 * p_radius)
    chords = (ng[far] - c0_anchor) / npn[far]
    c1 = float(max(0.0, float(np.max(chords)))) if chords.size else 0.0
    if c1 <= snap:
        c1 = 0.0
    c0 = float(np.max(ng[finite] - c1 * npn[finite]))

    return GrowthProbe(
        l_hat=l_hat,
        c0_hat=c0,
        c1_hat=c1,
        th=th,
        margin=th - c1,
        condition_ok=c1 < th,
        p_radius=float(p_radius),
        n_samples=int(n_samples),
    )


def minorization_epsilon(map_lipschitz: float, m_tilde: float, dim: int, coverage: float) -> float:
    """Assemble the minorization level from the probed constants.

    epsilon = L^-d * inf over the M_tilde-ball of the momentum density
    * certified coverage, where L is a Lipschitz bound of the full position
    map in p; doubling L divides the result by 2^d.
    """
    phi_min = (2.0 * math.pi) ** (-0.5 * dim) * math.exp(-0.5 * m_tilde * m_tilde)
    return min(1.0, map_lipschitz ** (-dim) * phi_min * coverage)


def _targets(M: float, grid_n: int, dim: int, rng: np.random.Generator):
    if dim == 1:
        return np.linspace(-M, M, grid_n)[:, None], "uniform grid on [-M, M]"
    if dim == 2:
        i = np.arange(grid_n)
        r = M * np.sqrt((i + 0.5) / grid_n)
        theta = i * (math.pi * (3.0 - math.sqrt(5.0)))
        return np.column_stack([r * np.cos(theta), r * np.sin(theta)]), "sunflower grid on the disk"
    return ball_points(rng, grid_n, dim, M), "random points in the ball"


def smallset_probe(
    model: PotentialModel,
    cfg: LeapfrogConfig,
    R: float,
    M: float,
    grid_n: int,
    rng: np.random.Generator,
    n_starts: int = 6,
    growth: Optional[GrowthProbe] = None,
    max_iter: int = 100,
) -> SmallSetProbe:
    """Certify coverage of B(0, M) by inverting the position map in p.

    For every (start, target) pair a damped Gauss-Newton iteration solves
    f(q, p) = y; a pair counts as covered when the root converges to
    residual <= 1e-8 (1 + ||y||) with ||p*|| <= M_tilde.  Root-finder
    failures only lower the coverage fraction, they never raise.
    """
    if M <= 0 or grid_n < 1 or n_starts < 1:
        raise ConfigurationError("smallset probe needs M > 0, grid_n >= 1, n_starts >= 1")
    if growth is None:
        growth = proposal_growth_probe(model, cfg, R, n_samples=256, rng=rng)
        # the preimage-radius argument evaluates g on the M_tilde ball, so
        # the envelope must have been measured on a ball at least that big;
        # widen and re-probe if the first estimate extrapolates
        for _ in range(3):
            if not growth.condition_ok:
                break
            mt = (M + growth.c0_hat) / (growth.th - growth.c1_hat)
            if mt <= growth.p_radius:
                break
            growth = proposal_growth_probe(
                model, cfg, R, n_samples=256, rng=rng, p_radius=2.0 * mt
            )
    if not growth.condition_ok:
        raise ConfigurationError(
            f"momentum growth slope {growth.c1_hat} is not below Th = {growth.th}; "
            "no preimage radius can be certified"
        )
    th = growth.th
    m_tilde = (M + growth.c0_hat) / (th - growth.c1_hat)
    d = model.dim

    starts = [np.zeros((1, d))]
    e1 = np.zeros(d)
    e1[0] = R
    starts.append(e1[None, :])
    if n_starts > 2:
        starts.append(ball_points(rng, n_starts - 2, d, R))
    starts_arr = np.concatenate(starts)[:n_starts]

    targets, note = _targets(M, grid_n, d, rng)
    Q = np.repeat(starts_arr, targets.shape[0], axis=0)
    Y = np.tile(targets, (starts_arr.shape[0], 1))
    n = Q.shape[0]

    # initial guess from the affine skeleton: f ~ Th p + f(q, 0)
    P = (Y - _endpoint(model, cfg, Q, np.zeros_like(Q))) / th
    tol = 1e-8 * (1.0 + np.linalg.norm(Y, axis=-1))

    res = _endpoint(model, cfg, Q, P) - Y
    rn = np.linalg.norm(res, axis=-1)
    converged = rn <= tol
    stalled = np.zeros(n, dtype=bool)

    for _ in range(max_iter):
        active = ~(converged | stalled)
        if not active.any():
            break
        # refresh the residual at the current iterate; the line search only
        # tracks norms, not the residual vectors themselves
        res = _endpoint(model, cfg, Q, P) - Y
        rn = np.linalg.norm(res, axis=-1)
        converged = rn <= tol
        active = ~(converged | stalled)
        if not active.any():
            break
        # centred-difference Jacobian in p, row-scaled steps
        eps = 1e-6 * (1.0 + np.linalg.norm(P, axis=-1))
        J = np.empty((n, d, d))
        for j in range(d):
            dP = np.zeros_like(P)
            dP[:, j] = eps
            J[:, :, j] = (_endpoint(model, cfg, Q, P + dP) - _endpoint(model, cfg, Q, P - dP)) / (
                2.0 * eps[:, None]
            )
        bad = ~np.isfinite(J).all(axis=(1, 2))
        J[bad] = np.eye(d)
        try:
            delta = np.linalg.solve(J, res[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = (np.linalg.pinv(J) @ res[..., None])[..., 0]
        delta = np.where(np.isfinite(delta), delta, 0.0)

        # backtracking line search, batched: halve until the residual drops
        step = np.where(active, 1.0, 0.0)
        accepted = np.zeros(n, dtype=bool)
        for _bt in range(25):
            trying = active & ~accepted
            if not trying.any():
                break
            cand = P - (step * trying)[:, None] * delta
            rc = np.linalg.norm(_endpoint(model, cfg, Q, cand) - Y, axis=-1)
            rc = np.where(np.isfinite(rc), rc, np.inf)
            better = trying & (rc < rn)
            P = np.where(better[:, None], cand, P)
            rn = np.where(better, rc, rn)
            accepted |= better
            step = np.where(trying & ~better, step * 0.5, step)
        stalled |= active & ~accepted
        converged = rn <= tol

    within = np.linalg.norm(P, axis=-1) <= m_tilde * (1.0 + 1e-9) + 1e-12
    covered = converged & within
    coverage = float(np.mean(covered))
    eps_hat = minorization_epsilon(growth.map_lipschitz, m_tilde, d, coverage)

    return SmallSetProbe(
        R=float(R),
        M=float(M),
        m_tilde=float(m_tilde),
        l_hat=growth.l_hat,
        c0_hat=growth.c0_hat,
        c1_hat=growth.c1_hat,
        th=th,
        coverage_fraction=coverage,
        epsilon_hat=float(eps_hat),
        grid_n=int(grid_n),
        n_starts=int(starts_arr.shape[0]),
        n_pairs=int(n),
        solver_failures=int(np.sum(~converged)),
        out_of_ball=int(np.sum(converged & ~within)),
        dim=d,
        target_note=note,
    )
