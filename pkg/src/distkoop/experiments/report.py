"""Artifact writers: every experiment emits CSV tables, a manifest, and
matching rendered figures into one output directory."""

from __future__ import annotations

import numpy as np

from .. import figures
from ..dmd import SpectralDecomposition, write_spectrum_csv
from .common import OutputTracker, write_manifest, write_results_csv
from .config import ExperimentConfig


def _eigs_csv(tracker: OutputTracker, name: str, eigenvalues) -> None:
    decomp = SpectralDecomposition(
        eigenvalues=np.asarray(eigenvalues, dtype=complex),
        eigenvectors=np.zeros((0, 0), dtype=complex),
    )
    write_spectrum_csv(decomp, tracker.path(name))


def _manifest(tracker: OutputTracker, cfg: ExperimentConfig, extra: dict) -> None:
    entries = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "repeats": cfg.repeats,
        "threads": cfg.threads,
        "paper_scale": cfg.paper_scale,
    }
    entries.update(extra)
    write_manifest(tracker.path("manifest"), entries)


def report_circle_spectrum(result, cfg, tracker: OutputTracker, render: bool) -> None:
    rows = [
        (r, result.mse_sko[r], result.mse_dko[r]) for r in range(len(result.mse_sko))
    ]
    rows.append(("mean", result.mse_sko.mean(), result.mse_dko.mean()))
    write_results_csv(tracker.path("results.csv"), ["repeat", "mse_sko", "mse_dko"], rows)
    _eigs_csv(tracker, "spectrum.csv", result.dko_eigenvalues)
    _eigs_csv(tracker, "sko_spectrum.csv", result.sko_eigenvalues)
    _eigs_csv(tracker, "reference_spectrum.csv", result.reference)
    ef_rows = []
    for table in result.eigenfunction_tables:
        for c, s, d, ref in zip(
            table.bin_centers, table.sko_values, table.dko_values, table.reference
        ):
            ef_rows.append((table.harmonic, c, ref.real, ref.imag, s.real, s.imag, d.real, d.imag))
    write_results_csv(
        tracker.path("eigenfunctions.csv"),
        ["harmonic", "bin_center", "re_ref", "im_ref", "re_sko", "im_sko", "re_dko", "im_dko"],
        ef_rows,
    )
    _manifest(tracker, cfg, {"mse_sko_mean": result.mse_sko.mean(), "mse_dko_mean": result.mse_dko.mean()})
    if render:
        n_ref = len(result.reference)
        figures.save_spectrum_figure(
            tracker.path("spectrum.png"),
            {
                "state-level fit": result.sko_eigenvalues[: 2 * n_ref],
                "distribution-level fit": result.dko_eigenvalues[: 2 * n_ref],
            },
            reference=result.reference,
            title="rotation spectrum recovery",
        )
        figures.save_eigenfunction_figure(
            tracker.path("eigenfunctions.png"), result.eigenfunction_tables
        )


def report_sweep(result, cfg, tracker: OutputTracker, render: bool, axis_name: str, logx: bool) -> None:
    rows = zip(result.axis, result.sko.mean, result.sko.stderr, result.dko.mean, result.dko.stderr)
    write_results_csv(
        tracker.path("results.csv"),
        [axis_name, "mse_sko_mean", "mse_sko_stderr", "mse_dko_mean", "mse_dko_stderr"],
        rows,
    )
    _manifest(tracker, cfg, {"axis": axis_name, "points": len(result.axis)})
    if render:
        figures.save_curve_figure(
            tracker.path("results.png"),
            {
                "state-level fit": (result.axis, result.sko.mean, result.sko.stderr),
                "distribution-level fit": (result.axis, result.dko.mean, result.dko.stderr),
            },
            xlabel=axis_name,
            ylabel="eigenvalue MSE",
            logx=logx,
            title=f"eigenvalue MSE vs {axis_name}",
        )


def report_prediction(result, cfg, tracker: OutputTracker, render: bool, label: str) -> None:
    rows = zip(result.times, result.curve.mean, result.curve.stderr)
    write_results_csv(tracker.path("results.csv"), ["t", "mse_mean", "mse_stderr"], rows)
    _manifest(tracker, cfg, {"fit_rank": result.fit_rank, "horizon_steps": len(result.times)})
    if render:
        figures.save_curve_figure(
            tracker.path("results.png"),
            {label: (result.times, result.curve.mean, result.curve.stderr)},
            xlabel="prediction time t",
            ylabel="MSE(t)",
            title=label,
        )


def report_convergence(result, cfg, tracker: OutputTracker, render: bool) -> None:
    rows = zip(result.m_values, result.frobenius, result.frobenius_stderr, result.weighted)
    write_results_csv(
        tracker.path("results.csv"),
        ["m", "frobenius", "frobenius_stderr", "weighted"],
        rows,
    )
    _manifest(
        tracker,
        cfg,
        {
            "slope": result.slope,
            "m_oracle": result.m_oracle,
            "gram_condition": result.gram_condition,
        },
    )
    if render:
        figures.save_convergence_figure(
            tracker.path("results.png"),
            result.m_values,
            result.frobenius,
            result.weighted,
            result.slope,
        )


def report_grid_forecast(result, cfg, tracker: OutputTracker, render: bool) -> None:
    horizon, n_patches = result.predicted.shape
    header = ["step"] + [f"patch_{p}" for p in range(n_patches)]
    rows = [(ell + 1, *result.predicted[ell]) for ell in range(horizon)]
    write_results_csv(tracker.path("forecast.csv"), header, rows)
    write_results_csv(
        tracker.path("results.csv"),
        ["step", "relative_l2_error"],
        [(ell + 1, result.errors_per_step[ell]) for ell in range(horizon)],
    )
    _eigs_csv(tracker, "spectrum.csv", result.eigenvalues)
    _manifest(
        tracker,
        cfg,
        {
            "source": result.source,
            "train_frames": result.train_frames,
            "max_eigenvalue_modulus": result.max_modulus,
        },
    )
    if render:
        figures.save_spectrum_figure(
            tracker.path("spectrum.png"),
            {"fitted operator": result.eigenvalues},
            title="grid operator spectrum",
        )
        actual = result.series.vectors[result.train_frames : result.train_frames + horizon]
        figures.save_field_figure(
            tracker.path("forecast.png"),
            result.series.to_frames(actual),
            result.series.to_frames(result.predicted),
        )
        figures.save_curve_figure(
            tracker.path("errors.png"),
            {"forecast": (np.arange(1, horizon + 1), result.errors_per_step, np.zeros(horizon))},
            xlabel="steps past training window",
            ylabel="relative L2 error",
            logy=False,
            title="held-out forecast error",
        )
