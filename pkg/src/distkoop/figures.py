"""Figure rendering for experiment reports.

Every experiment writes delimited output as the canonical artifact; these
helpers render the matching PNG next to it. All rendering is headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update(
    {
        "figure.figsize": (6.0, 4.2),
        "figure.dpi": 130,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "savefig.bbox": "tight",
    }
)

_MARKERS = ("o", "s", "^", "d", "v", "*")


def save_spectrum_figure(path, spectra: dict[str, np.ndarray], reference=None, title="spectrum"):
    """Complex-plane scatter of one or more spectra against the unit circle."""
    fig, ax = plt.subplots()
    theta = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(theta), np.sin(theta), "k-", lw=0.8, alpha=0.5)
    for (label, eigs), marker in zip(spectra.items(), _MARKERS):
        eigs = np.asarray(eigs, dtype=complex)
        ax.scatter(eigs.real, eigs.imag, s=28, marker=marker, label=label, alpha=0.8)
    if reference is not None:
        reference = np.asarray(reference, dtype=complex)
        ax.scatter(reference.real, reference.imag, s=90, marker="*", c="gold",
                   edgecolors="k", linewidths=0.5, label="reference", zorder=5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title)
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path)
    plt.close(fig)


def save_curve_figure(path, curves: dict[str, tuple], xlabel, ylabel, logx=False, logy=True, title=""):
    """Error-bar curves; each entry maps a label to (x, mean, stderr)."""
    fig, ax = plt.subplots()
    for (label, (x, mean, stderr)), marker in zip(curves.items(), _MARKERS):
        ax.errorbar(x, mean, yerr=stderr, marker=marker, ms=4, capsize=2, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path)
    plt.close(fig)


def save_convergence_figure(path, m_values, frobenius, weighted, slope):
    fig, ax = plt.subplots()
    ax.loglog(m_values, frobenius, "o-", label="Frobenius distance")
    ax.loglog(m_values, weighted, "s--", label="Gram-weighted distance")
    anchor = frobenius[0] * (np.asarray(m_values) / m_values[0]) ** -0.5
    ax.loglog(m_values, anchor, "k:", lw=1, label="slope -1/2 guide")
    ax.set_xlabel("training measures m")
    ax.set_ylabel("distance to limit operator")
    ax.set_title(f"fitted log-log slope {slope:.2f}")
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path)
    plt.close(fig)


def save_eigenfunction_figure(path, tables):
    """Computed vs analytic eigenfunction coordinates per harmonic."""
    fig, axes = plt.subplots(len(tables), 2, figsize=(8.5, 2.9 * len(tables)), squeeze=False)
    for row, table in enumerate(tables):
        for col, part in enumerate(("real", "imag")):
            ax = axes[row][col]
            take = np.real if part == "real" else np.imag
            ax.plot(table.bin_centers, take(table.reference), "k-", lw=1.2, label="analytic")
            ax.plot(table.bin_centers, take(table.sko_values), "^", ms=3, label="state-level fit")
            ax.plot(table.bin_centers, take(table.dko_values), "s", ms=3, label="distribution-level fit")
            ax.set_title(f"harmonic {table.harmonic}, {part} part", fontsize=9)
            ax.set_xlabel("angle")
            if row == 0 and col == 0:
                ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_field_figure(path, actual_frames, predicted_frames, titles=None):
    """Two rows of heatmaps: held-out frames above their forecasts."""
    n = len(predicted_frames)
    fig, axes = plt.subplots(2, n, figsize=(2.2 * n, 4.6), squeeze=False)
    vmax = max(np.max(np.abs(a)) for a in list(actual_frames) + list(predicted_frames)) or 1.0
    for k in range(n):
        for row, frames, name in ((0, actual_frames, "actual"), (1, predicted_frames, "forecast")):
            ax = axes[row][k]
            ax.imshow(frames[k], vmin=0, vmax=vmax, cmap="magma")
            ax.set_xticks([])
            ax.set_yticks([])
            label = titles[k] if titles else f"step {k + 1}"
            ax.set_title(f"{name} {label}", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
