"""Empirical probability measures and their Monte Carlo evolution.

A distribution on the state space is represented by a finite weighted
sample set. All distribution-level functionality (expectations, variances,
pushforwards, transfer-operator evolution) reduces to weighted sums over
the samples, which keeps every operation exact, differentiable by hand,
and cheap to test.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, EvaluationError
from .seeding import derived_rng

TWO_PI = 2.0 * np.pi

WEIGHT_SUM_TOL = 1e-12
WEIGHT_SUM_IO_TOL = 1e-9
VARIANCE_CLAMP = 1e-12


def _uniform_weights(k: int) -> np.ndarray:
    w = np.full(k, 1.0 / k)
    w.setflags(write=False)
    return w


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted sample set representing a probability distribution.

    Parameters
    ----------
    samples : ndarray, shape (K, d)
        Sample locations. A 1-D input of length K is promoted to (K, 1).
    weights : ndarray, shape (K,), optional
        Nonnegative weights summing to one. Defaults to uniform 1/K.
    """

    samples: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        samples = np.atleast_1d(np.asarray(self.samples, dtype=float))
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise ValueError("samples must be a (K, d) array with K >= 1")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if self.weights is None:
            weights = _uniform_weights(samples.shape[0])
        else:
            weights = np.asarray(self.weights, dtype=float).ravel()
            if weights.shape[0] != samples.shape[0]:
                raise ValueError(
                    f"got {weights.shape[0]} weights for {samples.shape[0]} samples"
                )
            if np.any(weights < 0):
                raise ValueError("weights must be nonnegative")
            total = float(np.sum(weights))
            if abs(total - 1.0) > WEIGHT_SUM_TOL:
                raise ValueError(f"weights sum to {total!r}, expected 1")
            weights = weights.copy()
        object.__setattr__(self, "samples", _freeze(samples.copy()))
        object.__setattr__(self, "weights", _freeze(weights))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def states(self) -> np.ndarray:
        """Samples as passed to state functions: (K,) when d=1, else (K, d)."""
        return self.samples[:, 0] if self.dim == 1 else self.samples


def dirac(x) -> EmpiricalMeasure:
    """Point mass at state ``x`` (scalar or length-d vector)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return EmpiricalMeasure(samples=x[None, :], weights=np.array([1.0]))


def _state_values(mu: EmpiricalMeasure, f, context: str) -> np.ndarray:
    """Evaluate a vectorized state function on the measure's samples."""
    values = np.asarray(f(mu.states()), dtype=float)
    if values.shape != (mu.n_samples,):
        values = np.broadcast_to(values, (mu.n_samples,)).astype(float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise EvaluationError(f"{context} returned non-finite value at sample {idx}")
    return values


def expectation(mu: EmpiricalMeasure, f) -> float:
    """Weighted mean of the state function ``f`` under the measure."""
    return float(mu.weights @ _state_values(mu, f, "observable"))


def variance_of(mu: EmpiricalMeasure, f) -> float:
    """Variance of ``f`` under the measure: E[f^2] - E[f]^2.

    Tiny negative values from floating-point cancellation (down to
    -1e-12) are clamped to zero.
    """
    values = _state_values(mu, f, "observable")
    mean = float(mu.weights @ values)
    mean_sq = float(mu.weights @ (values * values))
    var = mean_sq - mean * mean
    if var < 0.0:
        if var < -VARIANCE_CLAMP:
            raise EvaluationError(f"variance evaluated to {var!r}, below the clamp threshold")
        var = 0.0
    return var


def pushforward(mu: EmpiricalMeasure, f) -> EmpiricalMeasure:
    """Distribution of ``f(X)`` for ``X ~ mu``; weights are unchanged."""
    try:
        mapped = np.asarray(f(mu.states()), dtype=float)
    except Exception as exc:  # surface which sample broke, if determinable
        raise EvaluationError(f"state map failed on sample batch: {exc}") from exc
    if mapped.ndim == 1:
        mapped = mapped[:, None]
    if mapped.shape[0] != mu.n_samples:
        raise EvaluationError(
            f"state map returned {mapped.shape[0]} outputs for {mu.n_samples} samples"
        )
    bad = ~np.all(np.isfinite(mapped), axis=1)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise EvaluationError(f"state map returned non-finite value at sample {idx}")
    return EmpiricalMeasure(samples=mapped, weights=mu.weights)


def evolve_measure(mu: EmpiricalMeasure, model, t: float, seed: int) -> EmpiricalMeasure:
    """Monte Carlo transfer-operator step: push every sample through ``model``.

    Each sample is advanced independently for time ``t`` (a nonnegative
    multiple of the model's snapshot step) with its own noise draws. The
    result is a deterministic function of ``(seed, mu, model, t)``.
    """
    if t < 0:
        raise ValueError(f"evolution time must be nonnegative, got {t}")
    n_steps = t / model.snapshot_dt
    if abs(n_steps - round(n_steps)) > 1e-12:
        raise ValueError(
            f"evolution time {t} is not a multiple of the snapshot step {model.snapshot_dt}"
        )
    n_steps = int(round(n_steps))
    if n_steps == 0:
        return mu
    if mu.dim != 1:
        raise ValueError("simulation models act on 1-D state spaces")
    evolved = model.evolve_samples(mu.samples[:, 0], n_steps, seed)
    return EmpiricalMeasure(samples=evolved[:, None], weights=mu.weights)


# ---------------------------------------------------------------------------
# Measure generators
# ---------------------------------------------------------------------------

SAMPLER_KINDS = ("sub_arc_uniform", "gaussian_init", "grid_bins")


@dataclass(frozen=True)
class MeasureSampler:
    """Generator of i.i.d. random empirical measures.

    kinds
    -----
    sub_arc_uniform(arc_count)
        Uniform conditional on one of ``arc_count`` equal circle arcs,
        the arc picked uniformly at random per draw.
    gaussian_init(mean, std)
        Fresh i.i.d. Gaussian sample set per draw.
    grid_bins(lo, hi, arc_count)
        Midpoint quadrature grid on a randomly chosen bin of [lo, hi),
        i.e. a weighted-grid stand-in for the bin's uniform conditional.
    """

    kind: str
    samples_per_measure: int
    arc_count: int = 1
    mean: float = 0.0
    std: float = 1.0
    lo: float = 0.0
    hi: float = TWO_PI

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.samples_per_measure < 1:
            raise ValueError("samples_per_measure must be >= 1")
        if self.kind in ("sub_arc_uniform", "grid_bins") and self.arc_count < 1:
            raise ValueError("arc_count must be >= 1")
        if self.kind == "gaussian_init" and self.std <= 0:
            raise ValueError("std must be positive")
        if self.kind == "grid_bins" and not self.hi > self.lo:
            raise ValueError("grid_bins requires hi > lo")

    def _draw(self, rng: np.random.Generator) -> EmpiricalMeasure:
        k = self.samples_per_measure
        if self.kind == "sub_arc_uniform":
            width = TWO_PI / self.arc_count
            arc = int(rng.integers(self.arc_count))
            pts = arc * width + rng.uniform(0.0, width, size=k)
            return EmpiricalMeasure(samples=np.mod(pts, TWO_PI))
        if self.kind == "gaussian_init":
            return EmpiricalMeasure(samples=rng.normal(self.mean, self.std, size=k))
        # grid_bins: deterministic midpoint grid, randomness only in the bin
        width = (self.hi - self.lo) / self.arc_count
        b = int(rng.integers(self.arc_count))
        lo = self.lo + b * width
        pts = lo + (np.arange(k) + 0.5) * (width / k)
        return EmpiricalMeasure(samples=pts)

    def sample(self, seed: int) -> EmpiricalMeasure:
        """One measure; the same seed always reproduces the same measure."""
        return self._draw(derived_rng(seed))

    def sample_indexed(self, seed: int, index: int) -> EmpiricalMeasure:
        """Measure number ``index`` in the stream rooted at ``seed``."""
        return self._draw(derived_rng(seed, index, 0))

    def sample_many(self, count: int, seed: int) -> list[EmpiricalMeasure]:
        return [self.sample_indexed(seed, j) for j in range(count)]


def sub_arc_measures(
    n_arcs: int, samples_per_measure: int, seed: int, stratified: bool = False
) -> list[EmpiricalMeasure]:
    """The fixed family of uniform conditionals on ``n_arcs`` equal circle arcs.

    Arc j covers [2*pi*j/n_arcs, 2*pi*(j+1)/n_arcs). Samples are i.i.d.
    uniform within each arc by default; ``stratified=True`` instead places
    one uniform draw in each of ``samples_per_measure`` equal sub-intervals.
    """
    if n_arcs < 1:
        raise ValueError("n_arcs must be >= 1")
    width = TWO_PI / n_arcs
    out = []
    for j in range(n_arcs):
        rng = derived_rng(seed, j)
        u = rng.uniform(0.0, 1.0, size=samples_per_measure)
        if stratified:
            u = (np.arange(samples_per_measure) + u) / samples_per_measure
        pts = j * width + u * width
        out.append(EmpiricalMeasure(samples=np.mod(pts, TWO_PI)))
    return out


def mixture(measures: list[EmpiricalMeasure], coefficients) -> EmpiricalMeasure:
    """Convex mixture by concatenating sample sets with scaled weights."""
    coefficients = np.asarray(coefficients, dtype=float)
    if len(measures) != coefficients.shape[0]:
        raise ValueError("one coefficient per measure required")
    samples = np.concatenate([m.samples for m in measures], axis=0)
    weights = np.concatenate([c * m.weights for c, m in zip(coefficients, measures)])
    return EmpiricalMeasure(samples=samples, weights=weights)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_measure_csv(mu: EmpiricalMeasure, path) -> None:
    """Write ``weight,x1,...,xd`` rows, one per sample."""
    header = ["weight"] + [f"x{i + 1}" for i in range(mu.dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for w, row in zip(mu.weights, mu.samples):
            writer.writerow([repr(float(w))] + [repr(float(v)) for v in row])


def load_measure_csv(path) -> EmpiricalMeasure:
    """Read a measure written by :func:`save_measure_csv`.

    Files whose weights deviate from total mass one by more than 1e-9 are
    rejected; smaller drift is renormalized away.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty measure file") from None
        if not header or header[0] != "weight" or len(header) < 2:
            raise DataFormatError(f"{path}: expected header 'weight,x1,...,xd'")
        dim = len(header) - 1
        weights, samples = [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 1:
                raise DataFormatError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(row)}")
            try:
                weights.append(float(row[0]))
                samples.append([float(v) for v in row[1:]])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
    if not samples:
        raise DataFormatError(f"{path}: measure has no samples")
    weights = np.asarray(weights)
    total = float(np.sum(weights))
    if abs(total - 1.0) > WEIGHT_SUM_IO_TOL:
        raise DataFormatError(f"{path}: weights sum to {total!r}, outside 1 +/- 1e-9")
    return EmpiricalMeasure(samples=np.asarray(samples), weights=weights / total)
