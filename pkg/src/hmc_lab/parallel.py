"""Deterministic fan-out for Monte Carlo loops.

Work is always split into a fixed number of chunks, each with its own
spawned generator, and results are merged in chunk order.  The worker
count only decides how many chunks run concurrently, so output bytes are
identical for any ``--workers`` value.  Threads suffice because the heavy
lifting happens inside numpy, which releases the GIL.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError

N_CHUNKS = 16
ENV_WORKERS = "HMC_LAB_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument, then the environment variable, then all cores."""
    if workers is None:
        env = os.environ.get(ENV_WORKERS)
        if env is not None:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ConfigurationError(f"{ENV_WORKERS} must be an integer, got {env!r}") from exc
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ConfigurationError(f"worker count must be >= 1, got {workers}")
    return workers


def chunk_counts(n: int, n_chunks: int = N_CHUNKS) -> list[int]:
    """Split n items into at most n_chunks balanced, non-empty chunk sizes."""
    k = min(n_chunks, n)
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def run_chunked(
    fn: Callable[[int, np.random.Generator], object],
    rng: np.random.Generator,
    n_items: int,
    workers: int = 1,
    n_chunks: int = N_CHUNKS,
) -> list:
    """Evaluate fn(chunk_size, chunk_rng) over fixed chunks, in chunk order.

    The chunk layout and per-chunk generators depend only on ``rng`` and
    ``n_items``, never on ``workers``.
    """
    sizes = chunk_counts(n_items, n_chunks)
    rngs = rng.spawn(len(sizes))
    if workers <= 1:
        return [fn(sz, r) for sz, r in zip(sizes, rngs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, sizes, rngs))


def run_tasks(fn: Callable, tasks: Sequence[tuple], workers: int = 1) -> list:
    """Apply fn to argument tuples, preserving task order."""
    if workers <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))
