"""Leapfrog integration of separable Hamiltonians H(q, p) = U(q) + ||p||^2 / 2.

One step of size h is the kick-drift-kick composition

    p_half = p - (h/2) grad U(q)
    q'     = q + h p_half
    p'     = p_half - (h/2) grad U(q')

Consecutive steps share the gradient at the common endpoint, so a run of
T steps costs exactly T + 1 gradient evaluations.  The module also carries
the algebraic consequences of that recursion (closed forms for position
and momentum after k steps), the reversibility / volume / symplecticness
residuals used by the test-suite, and a high-order ODE reference flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConfigurationError, NumericError, OracleError
from .potentials import PotentialModel


@dataclass(frozen=True)
class PhaseState:
    """A point (q, p) in phase space; both arrays share shape (d,)."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise ConfigurationError(
                f"q and p must be 1-D arrays of equal length, got {q.shape} and {p.shape}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def flip(self) -> "PhaseState":
        """Momentum reversal (q, p) -> (q, -p)."""
        return PhaseState(self.q.copy(), -self.p)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @staticmethod
    def from_vector(x: np.ndarray) -> "PhaseState":
        x = np.asarray(x, dtype=float)
        d = x.shape[0] // 2
        return PhaseState(x[:d].copy(), x[d:].copy())


@dataclass(frozen=True)
class LeapfrogConfig:
    """Step size h > 0 and step count T >= 1."""

    h: float
    T: int

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ConfigurationError(f"step size h must be finite and > 0, got {self.h}")
        if not (isinstance(self.T, (int, np.integer)) and self.T >= 1):
            raise ConfigurationError(f"step count T must be an integer >= 1, got {self.T}")


@dataclass(frozen=True)
class Trajectory:
    """A recorded leapfrog orbit: states 0..T plus per-step energy increments.

    ``qs`` and ``ps`` have shape (T+1, d); ``energies`` holds H at each state
    and ``dh[k] = energies[k+1] - energies[k]``.
    """

    qs: np.ndarray
    ps: np.ndarray
    energies: np.ndarray
    dh: np.ndarray
    h: float

    @property
    def n_steps(self) -> int:
        return self.qs.shape[0] - 1

    def state(self, k: int) -> PhaseState:
        return PhaseState(self.qs[k].copy(), self.ps[k].copy())

    @property
    def states(self) -> list[PhaseState]:
        return [self.state(k) for k in range(self.qs.shape[0])]

    @property
    def initial(self) -> PhaseState:
        return self.state(0)

    @property
    def final(self) -> PhaseState:
        return self.state(self.n_steps)


def hamiltonian(model: PotentialModel, state: PhaseState) -> float:
    """Total energy U(q) + ||p||^2 / 2."""
    return float(model.u(state.q)) + 0.5 * float(state.p @ state.p)


def _check_finite(arr: np.ndarray, what: str, state: PhaseState) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{what} became non-finite", context=state)


def leapfrog_step(model: PotentialModel, state: PhaseState, h: float) -> PhaseState:
    """One kick-drift-kick step; raises NumericError with the offending state."""
    if not (np.isfinite(h) and h > 0):
        raise ConfigurationError(f"step size h must be finite and > 0, got {h}")
    g0 = model.grad(state.q)
    _check_finite(g0, "gradient", state)
    p_half = state.p - 0.5 * h * g0
    q1 = state.q + h * p_half
    g1 = model.grad(q1)
    new = PhaseState(q1, p_half - 0.5 * h * g1)
    _check_finite(np.concatenate([new.q, new.p, np.atleast_1d(g1)]), "state", new)
    return new


def leapfrog_run(model: PotentialModel, state: PhaseState, cfg: LeapfrogConfig) -> Trajectory:
    """Integrate T steps, recording every state.  Costs T + 1 gradient calls."""
    T, h = cfg.T, cfg.h
    d = state.dim
    qs = np.empty((T + 1, d))
    ps = np.empty((T + 1, d))
    qs[0], ps[0] = state.q, state.p
    q, p = state.q, state.p
    with np.errstate(all="ignore"):
        g = model.grad(q)
        _check_finite(g, "gradient", state)
        for k in range(T):
            p_half = p - 0.5 * h * g
            q = q + h * p_half
            g = model.grad(q)
            p = p_half - 0.5 * h * g
            qs[k + 1], ps[k + 1] = q, p
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.all(np.isfinite(g))):
                raise NumericError(
                    f"trajectory became non-finite at step {k + 1}",
                    context=PhaseState(np.nan_to_num(q), np.nan_to_num(p)),
                )
        energies = model.u(qs) + 0.5 * np.sum(ps * ps, axis=-1)
    return Trajectory(qs=qs, ps=ps, energies=energies, dh=np.diff(energies), h=h)


def leapfrog_map(
    model: PotentialModel, q: np.ndarray, p: np.ndarray, h: float, T: int
) -> tuple[np.ndarray, np.ndarray]:
    """Batched endpoint map over (..., d) arrays; non-finite values propagate.

    This is the Monte Carlo workhorse: no recording, no error raising, so
    diagnostics can run many initial conditions in lockstep and flag the
    non-finite rows themselves.
    """
    q = np.asarray(q, dtype=float).copy()
    p = np.asarray(p, dtype=float).copy()
    with np.errstate(all="ignore"):
        g = model.grad(q)
        for _ in range(T):
            p = p - 0.5 * h * g
            q = q + h * p
            g = model.grad(q)
            p = p - 0.5 * h * g
    return q, p


def closed_form_position(model: PotentialModel, state: PhaseState, h: float, k: int) -> np.ndarray:
    """Position after k steps via the summed-impulse form.

    q_k = q_0 + k h p_0 - (k h^2 / 2) grad U(q_0)
          - h^2 * sum_{i=1}^{k-1} (k - i) grad U(q_i),

    with the q_i taken from the leapfrog recursion itself.  For k = 1 the
    sum is empty and the expression is the single-step drift.
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    g0 = model.grad(state.q)
    out = state.q + k * h * state.p - 0.5 * k * h * h * g0
    if k > 1:
        traj = leapfrog_run(model, state, LeapfrogConfig(h=h, T=k - 1))
        grads = model.grad(traj.qs[1:k])  # q_1 .. q_{k-1}, batched
        weights = (k - np.arange(1, k)).astype(float)
        out = out - h * h * np.sum(weights[:, None] * grads, axis=0)
    return out


def closed_form_momentum(model: PotentialModel, state: PhaseState, h: float, k: int) -> np.ndarray:
    """Momentum after k steps from recorded positions only.

    p_k = p_0 - (h/2)(grad U(q_0) + grad U(q_k)) - h sum_{i=1}^{k-1} grad U(q_i).
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    traj = leapfrog_run(model, state, LeapfrogConfig(h=h, T=k))
    grads = model.grad(traj.qs)
    out = state.p - 0.5 * h * (grads[0] + grads[k])
    if k > 1:
        out = out - h * np.sum(grads[1:k], axis=0)
    return out


def reversibility_residual(model: PotentialModel, state: PhaseState, cfg: LeapfrogConfig) -> float:
    """Norm of (flip o run o flip o run)(s0) - s0; zero for an exact integrator."""
    fwd = leapfrog_run(model, state, cfg).final
    back = leapfrog_run(model, fwd.flip(), cfg).final
    ret = back.flip()
    return float(
        np.sqrt(np.sum((ret.q - state.q) ** 2) + np.sum((ret.p - state.p) ** 2))
    )


def volume_symplectic_residual(
    model: PotentialModel,
    state: PhaseState,
    cfg: LeapfrogConfig,
    fd_step: float | None = None,
) -> tuple[float, float]:
    """(| |det B| - 1 |, max |B^T J B - J|) for the finite-difference Jacobian B.

    B is the centred-difference Jacobian of the T-step map at ``state`` and
    J the canonical symplectic form on (q, p) coordinates.
    """
    x0 = state.as_vector()
    n = x0.shape[0]
    d = n // 2
    if fd_step is None:
        fd_step = 1e-6 * (1.0 + float(np.linalg.norm(x0)))

    def flow(x: np.ndarray) -> np.ndarray:
        return leapfrog_run(model, PhaseState.from_vector(x), cfg).final.as_vector()

    B = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = fd_step
        B[:, j] = (flow(x0 + e) - flow(x0 - e)) / (2.0 * fd_step)

    J = np.zeros((n, n))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    vol = abs(abs(np.linalg.det(B)) - 1.0)
    symp = float(np.max(np.abs(B.T @ J @ B - J)))
    return vol, symp


def reference_flow(
    model: PotentialModel, state: PhaseState, t: float, tol: float = 1e-12
) -> PhaseState:
    """Exact-Hamiltonian flow at time t via an order-8 adaptive ODE solve."""
    d = state.dim

    def rhs(_t, y):
        return np.concatenate([y[d:], -model.grad(y[:d])])

    sol = solve_ivp(
        rhs,
        (0.0, float(t)),
        state.as_vector(),
        method="DOP853",
        rtol=tol,
        atol=tol,
        dense_output=False,
    )
    if not sol.success:
        raise OracleError(f"reference flow failed: {sol.message}")
    return PhaseState.from_vector(sol.y[:, -1])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Dump an orbit as CSV: k, q_0.., p_0.., H, dH with 17 significant digits."""
    d = traj.qs.shape[1]
    cols = ["k"] + [f"q_{i}" for i in range(d)] + [f"p_{i}" for i in range(d)] + ["H", "dH"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(traj.qs.shape[0]):
            dh = 0.0 if k == 0 else traj.dh[k - 1]
            vals: Iterable[float] = (*traj.qs[k], *traj.ps[k], traj.energies[k], dh)
            fh.write(str(k) + "," + ",".join(format(v, ".17g") for v in vals) + "\n")
