"""Reference values the experiments are scored against.

These live in the evaluation layer on purpose: nothing here feeds the
operator fits. The circle rotation and the constant-coefficient OU
process have closed forms; everything else is scored against ensemble
Monte Carlo simulation regenerated per run with independent seeds.
"""

from __future__ import annotations

import numpy as np

from ..rds import RdsModel, simulate_ensemble
from ..seeding import derived_rng


def rotation_reference_eigenvalues(k_max: int) -> np.ndarray:
    """Spectrum of the drift-1/2 random rotation on harmonics k = 1..k_max.

    The harmonic e^{ikx} is an eigenfunction with eigenvalue
    (i - i e^{ik}) / k; the constant observable (k = 0) has eigenvalue 1.
    """
    k = np.arange(1, k_max + 1, dtype=float)
    return (1j - 1j * np.exp(1j * k)) / k


def ou_mean(x0, t):
    """E[X_t | X_0 = x0] for dX = -X dt + sqrt(2) dW."""
    return np.asarray(x0) * np.exp(-np.asarray(t))


def ou_var(t):
    """Var[X_t | X_0] for dX = -X dt + sqrt(2) dW (stationary variance 1)."""
    return 1.0 - np.exp(-2.0 * np.asarray(t))


def gaussian_under_normal(mean, var, center: float, width: float = 1.0):
    """E[exp(-(Y-center)^2 / (2 width^2))] for Y ~ N(mean, var), in closed form."""
    v = width * width
    denom = v + np.asarray(var)
    return np.sqrt(v / denom) * np.exp(-((np.asarray(mean) - center) ** 2) / (2.0 * denom))


def ou_gaussian_expectation(x0, t, center: float, width: float = 1.0):
    """Closed form for E[h(X_t) | X_0 = x0] with a Gaussian observable h."""
    return gaussian_under_normal(ou_mean(x0, t), ou_var(t), center, width)


def ou_gaussian_variance(x0, t, center: float, width: float = 1.0):
    """Closed form for Var[h(X_t) | X_0 = x0]; h^2 is a width/sqrt(2) Gaussian."""
    mean = ou_mean(x0, t)
    var = ou_var(t)
    e_sq = gaussian_under_normal(mean, var, center, width / np.sqrt(2.0))
    e = gaussian_under_normal(mean, var, center, width)
    return e_sq - e * e


def monte_carlo_conditional_reference(
    model: RdsModel,
    state_functions,
    grid: np.ndarray,
    n_steps: int,
    n_sample: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble estimates of conditional means and variances of observables.

    For every grid point x, ``n_sample`` trajectories start at x and run
    ``n_steps`` snapshot steps. Returns arrays of shape
    (n_steps + 1, n_grid, n_functions) holding E[f(X_t) | X_0 = x] and
    Var[f(X_t) | X_0 = x] estimates at each snapshot time.
    """
    grid = np.asarray(grid, dtype=float)
    x0 = np.repeat(grid, n_sample)
    traj = simulate_ensemble(model, x0, n_steps, seed=int(derived_rng(seed).integers(2**32)))
    states = traj.states.reshape(grid.shape[0], n_sample, n_steps + 1)
    n_fn = len(state_functions)
    means = np.empty((n_steps + 1, grid.shape[0], n_fn))
    variances = np.empty_like(means)
    for i, fn in enumerate(state_functions):
        vals = np.asarray(fn(states), dtype=float)  # (n_grid, n_sample, n_steps+1)
        means[:, :, i] = vals.mean(axis=1).T
        variances[:, :, i] = vals.var(axis=1).T
    return means, variances
