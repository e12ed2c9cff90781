"""Shared experiment machinery: repeats, aggregation, artifact writers."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..seeding import spawn_seeds


@dataclass(frozen=True)
class MseCurve:
    """Mean and standard error of an error metric along a sweep axis."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        mean = np.asarray(self.mean, dtype=float)
        stderr = np.asarray(self.stderr, dtype=float)
        if not (times.shape == mean.shape == stderr.shape):
            raise ValueError("times, mean, stderr must have equal lengths")
        if np.any(stderr < 0):
            raise ValueError("stderr must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stderr", stderr)


def run_repeats(fn, repeats: int, seed: int, threads: int = 1) -> list:
    """Evaluate ``fn(repeat_index, repeat_seed)`` for every repeat.

    Repeat seeds derive from the root seed, and results come back indexed,
    so the outcome is identical whether repeats run serially or on a pool.
    """
    seeds = spawn_seeds(seed, repeats, 0)
    if threads <= 1 or repeats == 1:
        return [fn(r, seeds[r]) for r in range(repeats)]
    results = [None] * repeats
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(fn, r, seeds[r]): r for r in range(repeats)}
        for fut, r in futures.items():
            results[r] = fut.result()
    return results


def aggregate_curves(values: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and standard error (sample std / sqrt(repeats)).

    Sums use ``math.fsum`` so aggregation does not depend on repeat order.
    """
    stacked = [np.asarray(v, dtype=float) for v in values]
    n = len(stacked)
    length = stacked[0].shape[0]
    mean = np.empty(length)
    stderr = np.zeros(length)
    for j in range(length):
        col = [v[j] for v in stacked]
        mean[j] = math.fsum(col) / n
        if n > 1:
            var = math.fsum((c - mean[j]) ** 2 for c in col) / (n - 1)
            stderr[j] = math.sqrt(var) / math.sqrt(n)
    return mean, stderr


def curve_from_repeats(axis, per_repeat: list[np.ndarray]) -> MseCurve:
    mean, stderr = aggregate_curves(per_repeat)
    return MseCurve(times=np.asarray(axis, dtype=float), mean=mean, stderr=stderr)


def trapezoid_mse(errors_sq: np.ndarray, grid: np.ndarray) -> float:
    """Trapezoidal-rule integral of squared errors over the grid."""
    return float(np.trapezoid(errors_sq, grid))


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------


def write_results_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_manifest(path, entries: dict) -> None:
    """Plain-text key=value manifest (seeds, versions, derived settings)."""
    lines = [f"distkoop_version={__version__}", f"numpy_version={np.__version__}"]
    lines += [f"{k}={v}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


class OutputTracker:
    """Records files written during one invocation so failures clean up."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.created: list[Path] = []

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        p = self.out_dir / name
        self.created.append(p)
        return p

    def discard_partial(self) -> None:
        for p in self.created:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass
        self.created.clear()
