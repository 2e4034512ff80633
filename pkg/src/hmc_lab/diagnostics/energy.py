"""Exact decomposition of the one-step leapfrog energy error.

For a single step of size h from (q0, p0) to (q1, p1), with g0 = grad U(q0)
and q_t = q0 + t (q1 - q0), the energy difference H1 - H0 equals the sum of
six line-integral terms (angle brackets are dot products, Hq_t v denotes
the Hessian action D^2 U(q_t) v):

    T1 =  h^2     int_0^1 <Hq_t p0, p0>  (1/2 - t) dt
    T2 =  h^3     int_0^1 <Hq_t p0, g0>  (t - 1/4) dt
    T3 = -h^4/4   int_0^1 <Hq_t g0, g0>  t dt
    T4 =  h^4/8   || int_0^1 Hq_t p0 dt ||^2
    T5 = -h^5/8   < int_0^1 Hq_t g0 dt , int_0^1 Hq_t p0 dt >
    T6 =  h^6/32  || int_0^1 Hq_t g0 dt ||^2

The integrals are smooth in t, so Gauss-Legendre quadrature converges
spectrally; 32 nodes is far past machine precision for the built-ins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ..errors import ConfigurationError
from ..integrator import PhaseState, hamiltonian, leapfrog_step
from ..potentials import PotentialModel

TERM_NAMES = ("h2_shear", "h3_cross", "h4_quad", "h4_norm", "h5_cross", "h6_norm")


@dataclass(frozen=True)
class EnergyDecomposition:
    """Six line-integral terms (in ascending order of h), their sum, and
    the directly measured energy difference for cross-checking."""

    terms: tuple[float, float, float, float, float, float]
    total: float
    direct: float
    residual: float
    quad_tolerance: float
    quad_nodes: int

    def as_dict(self) -> dict:
        out = dict(zip(TERM_NAMES, self.terms))
        out.update(
            total=self.total,
            direct=self.direct,
            residual=self.residual,
            quad_tolerance=self.quad_tolerance,
            quad_nodes=self.quad_nodes,
        )
        return out


def _unit_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped from [-1, 1] to [0, 1]."""
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _segment_cuts(q0, q1, kink_radii) -> list[float]:
    """Interior t in (0, 1) where ||q0 + t (q1 - q0)|| crosses a kink radius.

    The integrands are smooth except where the segment crosses a radius at
    which the potential switches branch; splitting there keeps the
    quadrature spectrally accurate on each piece.
    """
    dq = q1 - q0
    a = float(dq @ dq)
    b = 2.0 * float(q0 @ dq)
    cuts = []
    for r in kink_radii:
        c = float(q0 @ q0) - r * r
        if a == 0.0:
            roots = [-c / b] if b != 0.0 else []
        else:
            disc = b * b - 4.0 * a * c
            if disc < 0.0:
                continue
            sq = math.sqrt(disc)
            roots = [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
        cuts.extend(t for t in roots if 1e-12 < t < 1.0 - 1e-12)
    out: list[float] = []
    for t in sorted(cuts):
        if not out or t - out[-1] > 1e-12:
            out.append(t)
    return out


def _quad_rule(n: int, cuts: list[float]) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, 1] with n nodes per segment."""
    t, w = _unit_nodes(n)
    if not cuts:
        return t, w
    edges = [0.0, *cuts, 1.0]
    ts, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        ts.append(lo + (hi - lo) * t)
        ws.append((hi - lo) * w)
    return np.concatenate(ts), np.concatenate(ws)


def _terms(model, q0, p0, g0, q1, h, n_nodes, cuts):
    t, w = _quad_rule(n_nodes, cuts)
    qt = q0[None, :] + t[:, None] * (q1 - q0)[None, :]
    hp = model.hess_dir(qt, p0[None, :])  # (n, d)
    hg = model.hess_dir(qt, g0[None, :])
    pp = hp @ p0
    pg = hp @ g0
    gg = hg @ g0
    t1 = h**2 * float(np.sum(w * (0.5 - t) * pp))
    t2 = h**3 * float(np.sum(w * (t - 0.25) * pg))
    t3 = -(h**4) / 4.0 * float(np.sum(w * t * gg))
    ip = w @ hp  # (d,)
    ig = w @ hg
    t4 = h**4 / 8.0 * float(ip @ ip)
    t5 = -(h**5) / 8.0 * float(ig @ ip)
    t6 = h**6 / 32.0 * float(ig @ ig)
    return (t1, t2, t3, t4, t5, t6)


def energy_decomposition(
    model: PotentialModel, state: PhaseState, h: float, quad_nodes: int = 32
) -> EnergyDecomposition:
    """Evaluate all six terms for one step of size h from ``state``."""
    if quad_nodes < 8:
        raise ConfigurationError(f"quad_nodes must be >= 8, got {quad_nodes}")
    model.require_hess()
    q0, p0 = state.q, state.p
    g0 = model.grad(q0)
    new = leapfrog_step(model, state, h)
    cuts = _segment_cuts(q0, new.q, model.kink_radii)
    terms = _terms(model, q0, p0, g0, new.q, h, quad_nodes, cuts)
    total = float(np.sum(terms))
    direct = hamiltonian(model, new) - hamiltonian(model, state)
    half = _terms(model, q0, p0, g0, new.q, h, max(4, quad_nodes // 2), cuts)
    quad_tol = abs(total - float(np.sum(half))) + 1e-14 * (1.0 + abs(direct))
    return EnergyDecomposition(
        terms=terms,
        total=total,
        direct=direct,
        residual=abs(total - direct),
        quad_tolerance=quad_tol,
        quad_nodes=quad_nodes,
    )


def negative_energy_horizon(
    model: PotentialModel, state: PhaseState, h: float, t_max: int
) -> int:
    """Largest k <= t_max such that the energy error stays strictly negative
    through every step 1..k; 0 if the very first step is not a decrease.

    Each proposal inside the horizon would be accepted with probability one,
    so the horizon measures the rejection-free reach of the integrator from
    this start.  A non-finite continuation ends the horizon at the previous
    step (the error certainly stopped being negative).
    """
    if t_max < 1:
        raise ConfigurationError(f"t_max must be >= 1, got {t_max}")
    q, p = state.q.copy(), state.p.copy()
    h0 = float(model.u(q)) + 0.5 * float(p @ p)
    with np.errstate(all="ignore"):
        g = model.grad(q)
        for k in range(1, t_max + 1):
            p = p - 0.5 * h * g
            q = q + h * p
            g = model.grad(q)
            p = p - 0.5 * h * g
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.all(np.isfinite(g))):
                return k - 1
            hk = float(model.u(q)) + 0.5 * float(p @ p)
            if not (np.isfinite(hk) and hk - h0 < 0.0):
                return k - 1
    return t_max


def energy_error_trace(model: PotentialModel, state: PhaseState, h: float, t_max: int) -> np.ndarray:
    """H(step^k) - H(state) for k = 0..t_max (inf once the orbit diverges)."""
    q, p = state.q.copy(), state.p.copy()
    h0 = float(model.u(q)) + 0.5 * float(p @ p)
    out = np.full(t_max + 1, np.inf)
    out[0] = 0.0
    with np.errstate(all="ignore"):
        g = model.grad(q)
        for k in range(1, t_max + 1):
            p = p - 0.5 * h * g
            q = q + h * p
            g = model.grad(q)
            p = p - 0.5 * h * g
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
                break
            hk = float(model.u(q)) + 0.5 * float(p @ p)
            if not np.isfinite(hk):
                break
            out[k] = hk - h0
    return out
