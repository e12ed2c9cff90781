"""Random dynamical systems: noisy circle rotations and 1-D SDEs.

Two model families are built in:

* ``rotation`` -- at every snapshot step the angle advances by a fixed
  drift ``nu`` plus a uniform draw from [-half_width, half_width], with
  optional extra additive Gaussian noise, all reduced mod 2*pi.
* ``sde`` -- ``dX = a(X) dt + b(X) dW`` integrated by Euler-Maruyama on
  an internal substep that divides the snapshot step.

Drift and diffusion coefficients are registered by name so that models
round-trip through plain-text experiment configs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError
from .measures import TWO_PI, EmpiricalMeasure, evolve_measure
from .seeding import derived_rng

# ---------------------------------------------------------------------------
# Named coefficient functions (vectorized over the state array)
# ---------------------------------------------------------------------------

DRIFTS = {
    "zero": lambda x: np.zeros_like(x),
    "ou": lambda x: -x,
    "neg_sin": lambda x: -np.sin(x),
}

DIFFUSIONS = {
    "zero": lambda x: np.zeros_like(x),
    "sqrt2": lambda x: np.full_like(x, np.sqrt(2.0)),
    "gauss_bump": lambda x: np.exp(-0.5 * (x - 1.0) ** 2),
}


def register_drift(name: str, fn) -> None:
    DRIFTS[name] = fn


def register_diffusion(name: str, fn) -> None:
    DIFFUSIONS[name] = fn


def rotation_kernel(x, nu, omega, eps=0.0):
    """One deterministic rotation update given explicit noise values."""
    return np.mod(x + nu + omega + eps, TWO_PI)


@dataclass(frozen=True)
class RdsModel:
    """Parameterized one-step stochastic evolution kernel.

    Use :func:`rotation_model` / :func:`sde_model` rather than the raw
    constructor; they fill kind-appropriate defaults and validate.
    """

    kind: str
    snapshot_dt: float
    nu: float = 0.0
    half_width: float = 0.5
    extra_noise_sigma: float = 0.0
    drift: str = ""
    diffusion: str = ""
    dt_internal: float = 0.0

    def __post_init__(self):
        if self.snapshot_dt <= 0:
            raise ValueError("snapshot_dt must be positive")
        if self.kind == "rotation":
            if self.half_width < 0:
                raise ValueError("half_width must be >= 0")
            if self.extra_noise_sigma < 0:
                raise ValueError("extra_noise_sigma must be >= 0")
        elif self.kind == "sde":
            if self.drift not in DRIFTS:
                raise ValueError(f"unregistered drift {self.drift!r}")
            if self.diffusion not in DIFFUSIONS:
                raise ValueError(f"unregistered diffusion {self.diffusion!r}")
            if self.dt_internal <= 0:
                raise ValueError("dt_internal must be positive")
            ratio = self.snapshot_dt / self.dt_internal
            if abs(ratio - round(ratio)) > 1e-12:
                raise ValueError(
                    f"dt_internal {self.dt_internal} must divide snapshot_dt {self.snapshot_dt}"
                )
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def substeps_per_snapshot(self) -> int:
        if self.kind == "rotation":
            return 1
        return int(round(self.snapshot_dt / self.dt_internal))

    @property
    def is_circle(self) -> bool:
        return self.kind == "rotation"

    def evolve_samples(self, x: np.ndarray, n_steps: int, seed: int) -> np.ndarray:
        """Advance a batch of states by ``n_steps`` snapshot steps.

        Sample k's noise at (step j, substep s) is element k of the stream
        addressed by ``(seed, j, s)``, so the result does not depend on how
        the batch is scheduled or partitioned.
        """
        x = np.asarray(x, dtype=float).copy()
        if self.kind == "rotation":
            for j in range(n_steps):
                rng = derived_rng(seed, j, 0)
                omega = rng.uniform(-self.half_width, self.half_width, size=x.shape)
                eps = 0.0
                if self.extra_noise_sigma > 0:
                    eps = rng.normal(0.0, self.extra_noise_sigma, size=x.shape)
                x = rotation_kernel(x, self.nu, omega, eps)
            return x
        a = DRIFTS[self.drift]
        b = DIFFUSIONS[self.diffusion]
        dt = self.dt_internal
        sqrt_dt = np.sqrt(dt)
        for j in range(n_steps):
            for s in range(self.substeps_per_snapshot):
                xi = derived_rng(seed, j, s).standard_normal(x.shape)
                x = x + a(x) * dt + b(x) * sqrt_dt * xi
            if not np.all(np.isfinite(x)):
                raise IntegrationError(f"non-finite state after snapshot step {j}")
        return x


def rotation_model(
    nu: float,
    half_width: float = 0.5,
    extra_noise_sigma: float = 0.0,
    snapshot_dt: float = 1.0,
) -> RdsModel:
    """Random circle rotation: drift ``nu`` + U[-half_width, half_width] noise."""
    return RdsModel(
        kind="rotation",
        snapshot_dt=snapshot_dt,
        nu=nu,
        half_width=half_width,
        extra_noise_sigma=extra_noise_sigma,
    )


def sde_model(
    drift: str,
    diffusion: str,
    snapshot_dt: float = 0.1,
    dt_internal: float | None = None,
) -> RdsModel:
    """1-D SDE with registered coefficients, Euler-Maruyama integrated.

    The internal step defaults to a tenth of the snapshot step, which keeps
    the weak discretization bias below typical Monte Carlo noise.
    """
    if dt_internal is None:
        dt_internal = snapshot_dt / 10.0
    return RdsModel(
        kind="sde",
        snapshot_dt=snapshot_dt,
        drift=drift,
        diffusion=diffusion,
        dt_internal=dt_internal,
    )


# ---------------------------------------------------------------------------
# Trajectories and snapshot pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """K trajectories sampled every ``snapshot_dt``; column j is time j*dt."""

    states: np.ndarray  # (K, m+1)
    snapshot_dt: float
    seed: int

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[1] < 2:
            raise ValueError("states must be a (K, m+1) array with m >= 1")
        states = states.copy()
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def n_members(self) -> int:
        return self.states.shape[0]

    @property
    def n_steps(self) -> int:
        return self.states.shape[1] - 1

    def times(self) -> np.ndarray:
        return np.arange(self.states.shape[1]) * self.snapshot_dt


def step(model: RdsModel, x: float, rng: np.random.Generator) -> float:
    """One snapshot step of a single state, drawing noise from ``rng``."""
    if model.kind == "rotation":
        omega = rng.uniform(-model.half_width, model.half_width)
        eps = rng.normal(0.0, model.extra_noise_sigma) if model.extra_noise_sigma > 0 else 0.0
        return float(rotation_kernel(x, model.nu, omega, eps))
    a = DRIFTS[model.drift]
    b = DIFFUSIONS[model.diffusion]
    dt = model.dt_internal
    sqrt_dt = np.sqrt(dt)
    y = np.asarray([float(x)])
    for s in range(model.substeps_per_snapshot):
        y = y + a(y) * dt + b(y) * sqrt_dt * rng.standard_normal(1)
    if not np.isfinite(y[0]):
        raise IntegrationError("non-finite state produced by SDE step")
    return float(y[0])


def generate_trajectory(model: RdsModel, x0: float, m: int, seed: int) -> TrajectoryEnsemble:
    """Single trajectory of ``m`` steps from ``x0``, deterministic in ``seed``."""
    if m < 1:
        raise ValueError("trajectory length m must be >= 1")
    rng = derived_rng(seed)
    states = np.empty(m + 1)
    states[0] = float(x0)
    x = float(x0)
    for j in range(m):
        try:
            x = step(model, x, rng)
        except IntegrationError as exc:
            raise IntegrationError(f"{exc} (trajectory step {j})") from None
        states[j + 1] = x
    return TrajectoryEnsemble(states=states[None, :], snapshot_dt=model.snapshot_dt, seed=seed)


def simulate_ensemble(model: RdsModel, x0: np.ndarray, m: int, seed: int) -> TrajectoryEnsemble:
    """K independent trajectories from the initial batch ``x0``."""
    if m < 1:
        raise ValueError("trajectory length m must be >= 1")
    x = np.asarray(x0, dtype=float).ravel()
    states = np.empty((x.shape[0], m + 1))
    states[:, 0] = x
    for j in range(m):
        x = model.evolve_samples(x, 1, derived_rng(seed, j).integers(2**32))
        states[:, j + 1] = x
    return TrajectoryEnsemble(states=states, snapshot_dt=model.snapshot_dt, seed=seed)


def generate_pairs(
    model: RdsModel, initial_measures: list[EmpiricalMeasure], seed: int
) -> list[tuple[EmpiricalMeasure, EmpiricalMeasure]]:
    """(pi_j, mu_j) pairs with mu_j one snapshot-step evolution of pi_j.

    Each pair uses an independent derived noise stream.
    """
    if not initial_measures:
        raise ValueError("at least one initial measure is required")
    pairs = []
    for j, pi in enumerate(initial_measures):
        evolved = evolve_measure(pi, model, model.snapshot_dt, seed=derived_seed_for_pair(seed, j))
        pairs.append((pi, evolved))
    return pairs


def derived_seed_for_pair(seed: int, index: int) -> int:
    return int(derived_rng(seed, index).integers(2**32))


def ensemble_measure_pairs(traj: TrajectoryEnsemble) -> list[tuple[EmpiricalMeasure, EmpiricalMeasure]]:
    """Chained (pi_j, mu_j) pairs read off an ensemble's snapshot columns.

    pi_j is the empirical measure of column j-1 and mu_j of column j, the
    single-long-trajectory-of-distributions construction: mu_j feeds back
    as pi_{j+1}.
    """
    cols = [EmpiricalMeasure(samples=traj.states[:, j]) for j in range(traj.states.shape[1])]
    return list(zip(cols[:-1], cols[1:]))
