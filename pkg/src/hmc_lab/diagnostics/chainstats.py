"""Per-chain summary statistics: acceptance, mixing time, moments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InsufficientDataError
from ..kernel import ChainRun

_MIN_SAMPLES = 10


def integrated_autocorr_time(x: np.ndarray) -> float:
    """Initial-positive-sequence estimate of the autocorrelation time.

    Autocovariances come from one FFT; consecutive-lag pair sums are
    accumulated while they stay positive, which is the standard consistent
    truncation for reversible chains.  The estimate is floored at 1 (an
    i.i.d. sequence cannot be better than i.i.d.).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        return 1.0
    x = x - x.mean()
    var = float(x @ x) / n
    if var == 0.0:
        # a frozen chain carries a single piece of information
        return float(n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, n=size)
    acov = np.fft.irfft(f * np.conj(f), n=size)[:n].real / n
    rho = acov / acov[0]
    tau = -1.0
    m = 0
    while 2 * m + 1 < n:
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        m += 1
    return max(1.0, tau)


@dataclass(frozen=True)
class ChainStats:
    n: int
    acceptance_rate: float
    iact: tuple[float, ...]      # per coordinate
    ess: tuple[float, ...]
    min_ess: float
    mean: tuple[float, ...]
    var: tuple[float, ...]


def chain_diagnostics(run: ChainRun) -> ChainStats:
    """Summarise a finished run; requires at least 10 recorded iterations."""
    n = run.n
    if n < _MIN_SAMPLES:
        raise InsufficientDataError(
            f"need at least {_MIN_SAMPLES} iterations for diagnostics, got {n}"
        )
    samples = run.samples
    iact = tuple(integrated_autocorr_time(samples[:, j]) for j in range(samples.shape[1]))
    ess = tuple(n / t for t in iact)
    return ChainStats(
        n=n,
        acceptance_rate=run.acceptance_rate,
        iact=iact,
        ess=ess,
        min_ess=float(min(ess)),
        mean=tuple(float(v) for v in samples.mean(axis=0)),
        var=tuple(float(v) for v in samples.var(axis=0, ddof=1)),
    )
