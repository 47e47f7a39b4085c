"""Reproducible RNG streams.

Every Monte Carlo loop uses one independent stream per replication, derived
from a root seed and the replication index, so runs are bit-reproducible
regardless of execution order or parallelism.
"""

from __future__ import annotations

import numpy as np


def stream(root_seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream addressed by `path` under `root_seed`."""
    ss = np.random.SeedSequence(root_seed, spawn_key=tuple(path))
    return np.random.default_rng(ss)


def streams(root_seed: int, n: int, *prefix: int) -> list[np.random.Generator]:
    """n sibling substreams, indexed 0..n-1 under an optional path prefix."""
    return [stream(root_seed, *prefix, r) for r in range(n)]


def as_generator(seed_or_rng) -> np.random.Generator:
    """Accept an int seed or an existing Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)
