"""Deterministic derivation of random streams.

Every stochastic routine in the package takes an integer seed and derives
its generators through :func:`derived_rng`. A stream is addressed by the
root seed plus an integer path (e.g. ``(measure_index, step_index)``), so
results never depend on execution order and any sub-computation can be
reproduced in isolation.
"""

from __future__ import annotations

import numpy as np


def derived_seq(seed: int, *path: int) -> np.random.SeedSequence:
    """Seed sequence for the stream addressed by ``(seed, *path)``."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))


def derived_rng(seed: int, *path: int) -> np.random.Generator:
    """Fresh generator for the stream addressed by ``(seed, *path)``."""
    return np.random.default_rng(derived_seq(seed, *path))


def spawn_seeds(seed: int, count: int, *path: int) -> list[int]:
    """``count`` independent child seeds below ``(seed, *path)``."""
    return [int(s) for s in derived_seq(seed, *path).generate_state(count, dtype=np.uint32)]
