"""Random-number infrastructure.

All randomness flows through counter-based Philox generators seeded via
``numpy.random.SeedSequence`` so that streams can be split reproducibly:
``rng.spawn(k)`` yields k independent child generators that do not depend
on how much of the parent stream was consumed by other spawns, which is
what makes worker-count-independent parallel reductions possible.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return the canonical generator for a 64-bit integer seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def spawn_rngs(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Split ``rng`` into ``n`` independent child generators.

    Children are a pure function of the parent's seed sequence and spawn
    counter, not of how many variates were drawn from the parent.
    """
    return list(rng.spawn(n))


def sphere_directions(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """Draw ``n`` points uniformly on the unit sphere in ``dim`` dimensions."""
    z = rng.standard_normal((n, dim))
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    # resample the (measure-zero) degenerate draws rather than dividing by ~0
    bad = norms[..., 0] < 1e-12
    while np.any(bad):
        z[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(z, axis=-1, keepdims=True)
        bad = norms[..., 0] < 1e-12
    return z / norms


def ball_points(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    """Draw ``n`` points uniformly from the closed ball of given radius."""
    u = sphere_directions(rng, n, dim)
    r = radius * rng.random(n) ** (1.0 / dim)
    return u * r[:, None]
