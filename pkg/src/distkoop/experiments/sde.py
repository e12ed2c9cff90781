"""SDE prediction experiments: observable forecasts and variance forecasts.

Training data is the ensemble-chain construction: an initial standard
normal ensemble evolves snapshot by snapshot, and consecutive snapshot
columns form the measure pairs. Forecast quality at each horizon is the
trapezoidal integral over the evaluation grid of the squared gap between
the operator prediction from a point mass and an independently simulated
conditional reference, averaged over observables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dmd import fit_dko, predict_many, snapshots_from_pairs
from ..errors import ConfigError
from ..measures import dirac
from ..observables import StateObservable, evaluate_bank, variance_coeff
from ..rds import ensemble_measure_pairs, simulate_ensemble
from ..seeding import derived_rng, spawn_seeds
from .common import MseCurve, curve_from_repeats, run_repeats, trapezoid_mse
from .config import ExperimentConfig
from .references import monte_carlo_conditional_reference


@dataclass(frozen=True)
class PredictionResult:
    curve: MseCurve
    per_repeat: np.ndarray    # (repeats, n_times)
    grid: np.ndarray
    times: np.ndarray
    fit_rank: int


def _require_sde(cfg: ExperimentConfig):
    model = cfg.model()
    if model.kind != "sde":
        raise ConfigError("model.kind", "this experiment requires an sde model")
    return model


def _chain_fit(model, bank, m: int, k: int, seed: int):
    """Fit from an ensemble chain of m snapshot pairs with k members."""
    s_init, s_path = spawn_seeds(seed, 2, 4)
    x0 = derived_rng(s_init).standard_normal(k)
    traj = simulate_ensemble(model, x0, m, seed=s_path)
    pairs = ensemble_measure_pairs(traj)
    return fit_dko(snapshots_from_pairs(bank, pairs, model.snapshot_dt))


def _prediction_steps(cfg: ExperimentConfig, model) -> int:
    return int(np.floor(cfg.t_pred / model.snapshot_dt + 1e-12))


def run_sde_predict(cfg: ExperimentConfig) -> PredictionResult:
    """Forecast MSE(t) for the linear observable bank against simulation."""
    model = _require_sde(cfg)
    bank = cfg.bank()
    fns = bank.state_functions()
    grid = cfg.prediction_grid()
    steps = _prediction_steps(cfg, model)
    times = (np.arange(steps) + 1) * model.snapshot_dt
    v0 = evaluate_bank(bank, [dirac(x) for x in grid])  # (n, n_grid)

    def one_repeat(r, seed):
        km = _chain_fit(model, bank, cfg.data_m, cfg.data_k, seed)
        ref_mean, _ = monte_carlo_conditional_reference(
            model, fns, grid, steps, cfg.n_reference_samples, seed=spawn_seeds(seed, 1, 5)[0]
        )
        hist = predict_many(km, v0, steps)  # (steps+1, n, n_grid)
        mses = np.empty(steps)
        for ell in range(1, steps + 1):
            err_sq = (ref_mean[ell].T - hist[ell]) ** 2  # (n, n_grid)
            mses[ell - 1] = np.mean([trapezoid_mse(err_sq[i], grid) for i in range(len(bank))])
        return mses, km.fit_report.rank

    results = run_repeats(one_repeat, cfg.repeats, cfg.seed, cfg.threads)
    per_repeat = np.vstack([r[0] for r in results])
    return PredictionResult(
        curve=curve_from_repeats(times, list(per_repeat)),
        per_repeat=per_repeat,
        grid=grid,
        times=times,
        fit_rank=results[0][1],
    )


def run_variance_predict(cfg: ExperimentConfig) -> PredictionResult:
    """Forecast MSE(t) for the variance of each base observable.

    Uses the quadratic bank and the coefficient vectors that contract a
    bank value vector to a variance; the reference is the simulated
    conditional variance.
    """
    model = _require_sde(cfg)
    centers = cfg.bank_centers()
    bank = cfg.bank()
    n_centers = len(centers)
    if len(bank) != n_centers * (n_centers + 1):
        raise ConfigError("bank.kind", "variance prediction requires the pq bank")
    width = cfg._get("bank", "width", float, 1.0)
    base_fns = [StateObservable(kind="gaussian", center=float(c), width=width) for c in centers]
    coeffs = np.vstack([variance_coeff(i + 1, n_centers) for i in range(n_centers)])
    grid = cfg.prediction_grid()
    steps = _prediction_steps(cfg, model)
    times = (np.arange(steps) + 1) * model.snapshot_dt
    v0 = evaluate_bank(bank, [dirac(x) for x in grid])

    def one_repeat(r, seed):
        km = _chain_fit(model, bank, cfg.data_m, cfg.data_k, seed)
        _, ref_var = monte_carlo_conditional_reference(
            model, base_fns, grid, steps, cfg.n_reference_samples, seed=spawn_seeds(seed, 1, 5)[0]
        )
        hist = predict_many(km, v0, steps)
        mses = np.empty(steps)
        for ell in range(1, steps + 1):
            pred_var = coeffs @ hist[ell]  # (n_centers, n_grid)
            err_sq = (ref_var[ell].T - pred_var) ** 2
            mses[ell - 1] = np.mean([trapezoid_mse(err_sq[i], grid) for i in range(n_centers)])
        return mses, km.fit_report.rank

    results = run_repeats(one_repeat, cfg.repeats, cfg.seed, cfg.threads)
    per_repeat = np.vstack([r[0] for r in results])
    return PredictionResult(
        curve=curve_from_repeats(times, list(per_repeat)),
        per_repeat=per_repeat,
        grid=grid,
        times=times,
        fit_rank=results[0][1],
    )
