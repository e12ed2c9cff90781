"""Circle-rotation experiments: spectrum recovery, data and noise sweeps.

Both fitting routes are exercised on the same random rotation with equal
trajectory-sample budgets: the state-level fit consumes one long
trajectory, the distribution-level fit consumes sub-arc conditional
measures and their one-step evolutions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..dmd import fit_dko, fit_sko, left_spectrum, match_eigenvalues, snapshots_from_pairs, spectrum
from ..errors import ConfigError
from ..measures import sub_arc_measures
from ..observables import indicator_bank
from ..rds import generate_pairs, generate_trajectory
from ..seeding import spawn_seeds
from .common import MseCurve, aggregate_curves, run_repeats
from .config import ExperimentConfig
from .references import rotation_reference_eigenvalues


@dataclass(frozen=True)
class EigenfunctionTable:
    """Computed vs analytic eigenfunction values at the bin centers."""

    harmonic: int
    bin_centers: np.ndarray
    sko_values: np.ndarray  # complex, phase-aligned to the reference
    dko_values: np.ndarray
    reference: np.ndarray   # e^{i k x} at the bin centers


@dataclass(frozen=True)
class CircleSpectrumResult:
    reference: np.ndarray
    sko_eigenvalues: np.ndarray
    dko_eigenvalues: np.ndarray
    mse_sko: np.ndarray   # per repeat
    mse_dko: np.ndarray
    eigenfunction_tables: tuple[EigenfunctionTable, ...]


def _require_rotation(cfg: ExperimentConfig):
    model = cfg.model()
    if model.kind != "rotation":
        raise ConfigError("model.kind", "this experiment requires the rotation model")
    return model


def _fit_both(model, bank, n_sko: int, m_dko: int, k_dko: int, seed: int):
    """One SKO fit and one DKO fit at matched sample budgets."""
    s_traj, s_meas, s_pairs = spawn_seeds(seed, 3, 1)
    traj = generate_trajectory(model, 0.0, n_sko, seed=s_traj)
    sko = fit_sko(traj, bank)
    measures = sub_arc_measures(m_dko, k_dko, seed=s_meas)
    pairs = generate_pairs(model, measures, seed=s_pairs)
    dko = fit_dko(snapshots_from_pairs(bank, pairs, model.snapshot_dt))
    return sko, dko


def _matched_mse(km, reference) -> float:
    _, mse = match_eigenvalues(spectrum(km).eigenvalues, reference)
    return mse


def _align_phase(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rotate by the unit scalar that best matches the reference."""
    inner = np.vdot(reference, values)
    if abs(inner) == 0:
        return values
    return values * (np.conj(inner) / abs(inner))


def _eigenfunction_table(km, harmonic: int, reference_eig: complex, n_bins: int):
    centers = (np.arange(n_bins) + 0.5) * (2.0 * np.pi / n_bins)
    ref = np.exp(1j * harmonic * centers)
    ref = ref / np.linalg.norm(ref)
    decomp = left_spectrum(km)
    idx = int(np.argmin(np.abs(decomp.eigenvalues - reference_eig)))
    vec = decomp.eigenvectors[:, idx]
    return _align_phase(vec, ref), ref, centers


def run_circle_spectrum(cfg: ExperimentConfig) -> CircleSpectrumResult:
    """Recover the rotation spectrum through both fitting routes."""
    model = _require_rotation(cfg)
    bank = indicator_bank(cfg.n_bins)
    n_eigs = cfg.n_reference_eigs
    reference = rotation_reference_eigenvalues(n_eigs)
    n_sko, m_dko, k_dko = cfg.data_n_sko, cfg.data_m, cfg.data_k

    def one_repeat(r, seed):
        sko, dko = _fit_both(model, bank, n_sko, m_dko, k_dko, seed)
        return sko, dko, _matched_mse(sko, reference), _matched_mse(dko, reference)

    results = run_repeats(one_repeat, cfg.repeats, cfg.seed, cfg.threads)
    sko0, dko0 = results[0][0], results[0][1]
    tables = []
    for harmonic in (1, 3):
        lam = rotation_reference_eigenvalues(harmonic)[-1]
        sko_vec, ref_vec, centers = _eigenfunction_table(sko0, harmonic, lam, len(bank))
        dko_vec, _, _ = _eigenfunction_table(dko0, harmonic, lam, len(bank))
        tables.append(
            EigenfunctionTable(
                harmonic=harmonic,
                bin_centers=centers,
                sko_values=sko_vec,
                dko_values=dko_vec,
                reference=ref_vec,
            )
        )
    return CircleSpectrumResult(
        reference=reference,
        sko_eigenvalues=spectrum(sko0).eigenvalues,
        dko_eigenvalues=spectrum(dko0).eigenvalues,
        mse_sko=np.array([r[2] for r in results]),
        mse_dko=np.array([r[3] for r in results]),
        eigenfunction_tables=tuple(tables),
    )


@dataclass(frozen=True)
class SweepResult:
    axis: np.ndarray
    sko: MseCurve
    dko: MseCurve


def run_sensitivity(cfg: ExperimentConfig) -> SweepResult:
    """Eigenvalue MSE of both routes as the trajectory-sample budget grows.

    Budget N gives the state-level fit a length-N trajectory and the
    distribution-level fit sqrt(N) sub-arc measures of sqrt(N) samples
    each, so N must be a perfect square.
    """
    model = _require_rotation(cfg)
    bank = indicator_bank(cfg.n_bins)
    reference = rotation_reference_eigenvalues(cfg.n_reference_eigs)
    budgets = cfg.n_grid
    for n in budgets:
        root = int(round(np.sqrt(n)))
        if root * root != n:
            raise ConfigError("data.n_grid", f"budget {n} is not a perfect square")

    def one_repeat(r, seed):
        sko_mses, dko_mses = [], []
        for bi, n in enumerate(budgets):
            root = int(round(np.sqrt(n)))
            sko, dko = _fit_both(model, bank, n, root, root, spawn_seeds(seed, len(budgets), 2)[bi])
            sko_mses.append(_matched_mse(sko, reference))
            dko_mses.append(_matched_mse(dko, reference))
        return np.asarray(sko_mses), np.asarray(dko_mses)

    results = run_repeats(one_repeat, cfg.repeats, cfg.seed, cfg.threads)
    axis = np.asarray(budgets, dtype=float)
    sko_mean, sko_err = aggregate_curves([r[0] for r in results])
    dko_mean, dko_err = aggregate_curves([r[1] for r in results])
    return SweepResult(
        axis=axis,
        sko=MseCurve(times=axis, mean=sko_mean, stderr=sko_err),
        dko=MseCurve(times=axis, mean=dko_mean, stderr=dko_err),
    )


def run_noise_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Eigenvalue MSE of both routes as additive rotation noise grows."""
    base_model = _require_rotation(cfg)
    bank = indicator_bank(cfg.n_bins)
    reference = rotation_reference_eigenvalues(cfg.n_reference_eigs)
    sigmas = cfg.sigma_grid
    budget = cfg.data_n_budget
    root = int(round(np.sqrt(budget)))
    if root * root != budget:
        raise ConfigError("data.n_budget", f"budget {budget} is not a perfect square")

    def one_repeat(r, seed):
        sko_mses, dko_mses = [], []
        for si, sigma in enumerate(sigmas):
            model = replace(base_model, extra_noise_sigma=float(sigma))
            sko, dko = _fit_both(model, bank, budget, root, root, spawn_seeds(seed, len(sigmas), 3)[si])
            sko_mses.append(_matched_mse(sko, reference))
            dko_mses.append(_matched_mse(dko, reference))
        return np.asarray(sko_mses), np.asarray(dko_mses)

    results = run_repeats(one_repeat, cfg.repeats, cfg.seed, cfg.threads)
    axis = np.asarray(sigmas, dtype=float)
    sko_mean, sko_err = aggregate_curves([r[0] for r in results])
    dko_mean, dko_err = aggregate_curves([r[1] for r in results])
    return SweepResult(
        axis=axis,
        sko=MseCurve(times=axis, mean=sko_mean, stderr=sko_err),
        dko=MseCurve(times=axis, mean=dko_mean, stderr=dko_err),
    )
