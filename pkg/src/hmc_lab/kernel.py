"""The Hamiltonian Monte Carlo transition kernel and chain driver.

One transition from q: draw p ~ N(0, I), integrate T leapfrog steps of
size h, accept the endpoint with probability min(1, exp(H0 - H1)), else
keep q.  The randomized variant first picks (h_i, T_i) from a finite
mixture, then performs the same move; its invariant distribution is the
same mixture of the fixed-parameter kernels.

Determinism contract: for a fixed seed the draw order per iteration is
(schedule index if any) -> momentum -> acceptance uniform, so replaying
``run_chain`` with identical arguments reproduces every array bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import ConfigurationError, HmcLabError, NumericError
from .integrator import LeapfrogConfig
from .potentials import PotentialModel
from .rng import make_rng

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class HmcParams:
    """Fixed-parameter kernel: a leapfrog configuration plus a root seed."""

    cfg: LeapfrogConfig
    seed: int

    def __post_init__(self):
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class ScheduleEntry:
    weight: float
    h: float
    T: int


@dataclass(frozen=True)
class RandomizedSchedule:
    """A finite mixture over integrator settings: entries (weight, h, T)."""

    entries: tuple[ScheduleEntry, ...]

    def __post_init__(self):
        entries = tuple(
            e if isinstance(e, ScheduleEntry) else ScheduleEntry(*e) for e in self.entries
        )
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ConfigurationError("schedule must contain at least one entry")
        total = 0.0
        any_pos = False
        for i, e in enumerate(entries):
            if not (np.isfinite(e.weight) and e.weight >= 0):
                raise ConfigurationError(f"schedule entry {i}: weight must be >= 0, got {e.weight}")
            if not (np.isfinite(e.h) and e.h > 0):
                raise ConfigurationError(f"schedule entry {i}: h must be > 0, got {e.h}")
            if not (isinstance(e.T, (int, np.integer)) and e.T >= 1):
                raise ConfigurationError(f"schedule entry {i}: T must be an integer >= 1, got {e.T}")
            total += e.weight
            any_pos = any_pos or e.weight > 0
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ConfigurationError(f"schedule weights must sum to 1 (got {total!r})")
        if not any_pos:
            raise ConfigurationError("schedule needs at least one strictly positive weight")

    @classmethod
    def ramp(cls, weights, step_sizes) -> "RandomizedSchedule":
        """Mixture whose i-th entry (1-based) integrates exactly i steps."""
        weights = list(weights)
        step_sizes = list(step_sizes)
        if len(weights) != len(step_sizes):
            raise ConfigurationError("weights and step_sizes must have equal length")
        return cls(
            tuple(
                ScheduleEntry(weight=float(a), h=float(h), T=i + 1)
                for i, (a, h) in enumerate(zip(weights, step_sizes))
            )
        )

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries])


KernelSpec = Union[HmcParams, RandomizedSchedule]


def accept_prob(h0: float, h1: float) -> float:
    """min(1, exp(h0 - h1)); h1 = +inf means certain rejection."""
    if not np.isfinite(h0):
        raise NumericError(f"current-state energy must be finite, got {h0}")
    if math.isnan(h1):
        raise NumericError("proposal energy is NaN")
    if h1 == math.inf:
        return 0.0
    diff = h0 - h1
    if diff >= 0.0:
        return 1.0
    return math.exp(diff)


def _energy(model: PotentialModel, q: np.ndarray, p: np.ndarray) -> float:
    return float(model.u(q)) + 0.5 * float(p @ p)


def _integrate(model, q, p, h, T):
    """Inline leapfrog endpoint map for a single state; never raises on overflow."""
    with np.errstate(all="ignore"):
        g = model.grad(q)
        for _ in range(T):
            p = p - 0.5 * h * g
            q = q + h * p
            g = model.grad(q)
            p = p - 0.5 * h * g
    return q, p


def proposal_sample(
    model: PotentialModel, q: np.ndarray, params: HmcParams, rng: np.random.Generator
):
    """Draw one proposal: fresh momentum, T leapfrog steps.

    Returns (q_prop, start_state, end_state) as raw (q, p) pairs so callers
    can inspect both trajectory endpoints.
    """
    q = np.asarray(q, dtype=float)
    p0 = rng.standard_normal(q.shape[-1])
    q1, p1 = _integrate(model, q, p0, params.cfg.h, params.cfg.T)
    return q1, (q, p0), (q1, p1)


def _step(model, q, h, T, rng):
    """Shared single-transition core: returns (q_next, accepted, dh).

    A non-finite proposal energy is sanitised to dh = +inf (certain, flagged
    rejection) rather than raised: unstable trajectories are a legitimate
    outcome of too-coarse integration, not a programming error.
    """
    p0 = rng.standard_normal(q.shape[-1])
    h0 = _energy(model, q, p0)
    if not np.isfinite(h0):
        raise NumericError("energy at the current state is non-finite", context=(q, p0))
    q1, p1 = _integrate(model, q, p0, h, T)
    with np.errstate(all="ignore"):
        h1 = _energy(model, q1, p1)
    if not np.isfinite(h1):
        h1 = math.inf
    dh = h1 - h0
    u = rng.random()
    if u < accept_prob(h0, h1):
        return q1, True, dh
    return q, False, dh


def hmc_step(model: PotentialModel, q: np.ndarray, params: HmcParams, rng: np.random.Generator):
    """One fixed-parameter transition; rejection returns q itself (bitwise)."""
    q = np.asarray(q, dtype=float)
    return _step(model, q, params.cfg.h, params.cfg.T, rng)


def _draw_index(schedule: RandomizedSchedule, rng: np.random.Generator) -> int:
    # a single-entry schedule consumes no randomness, so its seed path
    # coincides with the fixed-parameter kernel's
    if len(schedule.entries) == 1:
        return 0
    cw = np.cumsum(schedule.weights)
    idx = int(np.searchsorted(cw, rng.random(), side="right"))
    return min(idx, len(schedule.entries) - 1)


def randomized_step(
    model: PotentialModel, q: np.ndarray, schedule: RandomizedSchedule, rng: np.random.Generator
):
    """One mixture transition; returns (q_next, accepted, chosen_index)."""
    q = np.asarray(q, dtype=float)
    idx = _draw_index(schedule, rng)
    e = schedule.entries[idx]
    q_next, accepted, _ = _step(model, q, e.h, e.T, rng)
    return q_next, accepted, idx


@dataclass
class ChainRun:
    """Output of run_chain: per-iteration records plus the inputs echoed back.

    ``overflow_iters`` lists iterations whose proposal energy overflowed
    (automatic flagged rejections).  ``error`` is set when the run halted
    early; arrays then hold only the completed iterations.
    """

    samples: np.ndarray
    accepted: np.ndarray
    proposal_dh: np.ndarray
    chosen_index: Optional[np.ndarray]
    kernel: KernelSpec
    seed: int
    q0: np.ndarray
    n_requested: int
    overflow_iters: list[int] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if self.n else math.nan


def run_chain(
    model: PotentialModel,
    q0: np.ndarray,
    kernel: KernelSpec,
    n_iters: int,
    seed: Optional[int] = None,
) -> ChainRun:
    """Drive n_iters transitions from q0.

    ``seed`` defaults to ``kernel.seed`` for fixed-parameter kernels and is
    mandatory for schedules.  Model errors mid-run halt the chain and are
    recorded on the returned object instead of propagating.
    """
    q0 = np.asarray(q0, dtype=float)
    if q0.ndim != 1 or q0.shape[0] != model.dim:
        raise ConfigurationError(f"q0 must be a length-{model.dim} vector, got shape {q0.shape}")
    if not np.all(np.isfinite(q0)):
        raise ConfigurationError("q0 must be finite")
    if n_iters < 1:
        raise ConfigurationError(f"n_iters must be >= 1, got {n_iters}")
    if isinstance(kernel, HmcParams):
        seed = kernel.seed if seed is None else seed
        schedule = None
    elif isinstance(kernel, RandomizedSchedule):
        if seed is None:
            raise ConfigurationError("a schedule kernel needs an explicit seed")
        schedule = kernel
    else:
        raise ConfigurationError(f"unsupported kernel spec: {type(kernel).__name__}")

    rng = make_rng(seed)
    d = q0.shape[0]
    samples = np.empty((n_iters, d))
    accepted = np.zeros(n_iters, dtype=bool)
    dhs = np.empty(n_iters)
    idxs = np.zeros(n_iters, dtype=np.int64) if schedule is not None else None
    overflow: list[int] = []
    error = None

    q = q0
    done = 0
    try:
        for i in range(n_iters):
            if schedule is not None:
                idx = _draw_index(schedule, rng)
                e = schedule.entries[idx]
                q, acc, dh = _step(model, q, e.h, e.T, rng)
                idxs[i] = idx
            else:
                q, acc, dh = _step(model, q, kernel.cfg.h, kernel.cfg.T, rng)
            samples[i] = q
            accepted[i] = acc
            dhs[i] = dh
            if not np.isfinite(dh):
                overflow.append(i)
            done = i + 1
    except HmcLabError as exc:
        error = f"{type(exc).__name__}: {exc}"

    return ChainRun(
        samples=samples[:done],
        accepted=accepted[:done],
        proposal_dh=dhs[:done],
        chosen_index=idxs[:done] if idxs is not None else None,
        kernel=kernel,
        seed=int(seed),
        q0=q0,
        n_requested=n_iters,
        overflow_iters=overflow,
        error=error,
    )


def kernel_spec_dict(kernel: KernelSpec) -> dict:
    """JSON-ready echo of a kernel specification."""
    if isinstance(kernel, HmcParams):
        return {"type": "hmc", "h": kernel.cfg.h, "T": kernel.cfg.T, "seed": kernel.seed}
    return {
        "type": "schedule",
        "entries": [{"weight": e.weight, "h": e.h, "T": e.T} for e in kernel.entries],
    }


def write_chain_csv(run: ChainRun, path) -> None:
    """Dump a chain as CSV: iter, accepted, dh, q_0..q_{d-1} (17 sig digits)."""
    d = run.samples.shape[1] if run.n else run.q0.shape[0]
    cols = ["iter", "accepted", "dh"] + [f"q_{i}" for i in range(d)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(run.n):
            row = [str(i), str(int(run.accepted[i])), format(run.proposal_dh[i], ".17g")]
            row += [format(v, ".17g") for v in run.samples[i]]
            fh.write(",".join(row) + "\n")


def chain_summary(run: ChainRun) -> dict:
    """JSON-ready run summary."""
    out = {
        "n": run.n,
        "n_requested": run.n_requested,
        "acceptance_rate": run.acceptance_rate,
        "seed": run.seed,
        "params": kernel_spec_dict(run.kernel),
        "overflow_iters": list(run.overflow_iters),
    }
    if run.error is not None:
        out["error"] = run.error
    return out
