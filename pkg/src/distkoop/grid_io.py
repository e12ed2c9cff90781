"""Gridded snapshot ingestion, coarse-graining, and forecasting.

Raster sequences (e.g. hourly intensity fields) are read from a directory
holding a plain-text manifest plus either per-frame CSV files or one flat
binary blob. Frames are coarse-grained to patch averages, and the patch
vectors drive the same least-squares operator fit as the distribution
pipeline, with the patch averages acting as the observable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dmd import KoopmanMatrix, SnapshotMatrices, fit_dko
from .errors import DataFormatError

MANIFEST_NAME = "manifest.txt"
FRAME_PATTERN = "frame_{:06d}.csv"
BINARY_NAME = "frames.bin"

MANIFEST_KEYS = ("rows", "cols", "frames", "cadence_seconds", "nan_policy", "format")
NAN_POLICIES = ("zero", "fail")
FORMATS = ("csv_frames_dir", "flat_binary")


@dataclass(frozen=True)
class RasterSequence:
    """T frames of an R x C nonnegative intensity field."""

    frames: np.ndarray  # (T, R, C)
    cadence_seconds: float
    meta: dict

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 3:
            raise ValueError("frames must be a (T, R, C) array")
        object.__setattr__(self, "frames", frames)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.frames.shape


@dataclass(frozen=True)
class PatchSeries:
    """Per-frame vectors of patch-average values on a (pr x pc) grid."""

    vectors: np.ndarray  # (T, P) with P = pr * pc, row-major patches
    patch_rows: int
    patch_cols: int
    row_edges: np.ndarray  # pr + 1 pixel boundaries
    col_edges: np.ndarray

    @property
    def n_patches(self) -> int:
        return self.patch_rows * self.patch_cols

    def patch_block(self, p: int) -> tuple[slice, slice]:
        """Pixel block (row slice, col slice) backing patch index ``p``."""
        r, c = divmod(p, self.patch_cols)
        return (
            slice(int(self.row_edges[r]), int(self.row_edges[r + 1])),
            slice(int(self.col_edges[c]), int(self.col_edges[c + 1])),
        )

    def to_frames(self, vectors: np.ndarray | None = None) -> np.ndarray:
        """Reshape patch vectors to (..., pr, pc) images for display."""
        v = self.vectors if vectors is None else np.asarray(vectors)
        return v.reshape(v.shape[:-1] + (self.patch_rows, self.patch_cols))


# ---------------------------------------------------------------------------
# Manifest + frame IO
# ---------------------------------------------------------------------------


def read_manifest(path: Path) -> dict:
    manifest = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        manifest[key.strip()] = value.strip()
    missing = [k for k in MANIFEST_KEYS if k not in manifest]
    if missing:
        raise DataFormatError(f"{path}: manifest missing keys {missing}")
    return manifest


def _apply_nan_policy(frames: np.ndarray, policy: str, where: str) -> np.ndarray:
    if policy not in NAN_POLICIES:
        raise DataFormatError(f"{where}: unknown nan_policy {policy!r}")
    n_bad = int(np.count_nonzero(~np.isfinite(frames)))
    if n_bad == 0:
        return frames
    if policy == "fail":
        raise DataFormatError(f"{where}: {n_bad} non-finite pixels with nan_policy=fail")
    frames = np.where(np.isfinite(frames), frames, 0.0)
    return frames


def ingest(path, format: str | None = None) -> RasterSequence:
    """Load a raster sequence from a manifest-described directory."""
    root = Path(path)
    manifest = read_manifest(root / MANIFEST_NAME)
    fmt = format or manifest["format"]
    if fmt not in FORMATS:
        raise DataFormatError(f"{root}: unknown format {fmt!r}")
    try:
        rows, cols, n_frames = (int(manifest[k]) for k in ("rows", "cols", "frames"))
        cadence = float(manifest["cadence_seconds"])
    except ValueError as exc:
        raise DataFormatError(f"{root}: bad manifest value: {exc}") from None

    if fmt == "csv_frames_dir":
        frames = np.empty((n_frames, rows, cols))
        for t in range(n_frames):
            fp = root / FRAME_PATTERN.format(t)
            if not fp.exists():
                raise DataFormatError(f"{root}: missing frame file {fp.name}")
            try:
                frame = np.loadtxt(fp, delimiter=",", ndmin=2)
            except ValueError as exc:
                raise DataFormatError(f"{fp}: ragged or non-numeric rows ({exc})") from None
            if frame.shape != (rows, cols):
                raise DataFormatError(
                    f"{fp}: frame shape {frame.shape} does not match declared ({rows}, {cols})"
                )
            frames[t] = frame
    else:
        blob = root / BINARY_NAME
        if not blob.exists():
            raise DataFormatError(f"{root}: missing {BINARY_NAME}")
        with open(blob, "rb") as fh:
            dims = np.fromfile(fh, dtype="<u8", count=3)
            if dims.shape[0] != 3:
                raise DataFormatError(f"{blob}: truncated dimension header")
            if tuple(int(d) for d in dims) != (n_frames, rows, cols):
                raise DataFormatError(
                    f"{blob}: embedded dims {tuple(int(d) for d in dims)} disagree with "
                    f"manifest ({n_frames}, {rows}, {cols})"
                )
            data = np.fromfile(fh, dtype="<f8")
        if data.shape[0] != n_frames * rows * cols:
            raise DataFormatError(f"{blob}: expected {n_frames * rows * cols} values, got {data.shape[0]}")
        frames = data.reshape(n_frames, rows, cols)

    frames = _apply_nan_policy(frames, manifest["nan_policy"], str(root))
    meta = dict(manifest)
    return RasterSequence(frames=frames, cadence_seconds=cadence, meta=meta)


def write_raster(r: RasterSequence, path, format: str = "flat_binary", nan_policy: str = "zero"):
    """Write a raster sequence plus manifest; inverse of :func:`ingest`."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    t, rows, cols = r.shape
    manifest = (
        f"rows={rows}\ncols={cols}\nframes={t}\n"
        f"cadence_seconds={r.cadence_seconds!r}\nnan_policy={nan_policy}\nformat={format}\n"
    )
    (root / MANIFEST_NAME).write_text(manifest)
    if format == "csv_frames_dir":
        for i in range(t):
            np.savetxt(root / FRAME_PATTERN.format(i), r.frames[i], delimiter=",")
    elif format == "flat_binary":
        with open(root / BINARY_NAME, "wb") as fh:
            np.asarray([t, rows, cols], dtype="<u8").tofile(fh)
            np.ascontiguousarray(r.frames, dtype="<f8").tofile(fh)
    else:
        raise DataFormatError(f"unknown format {format!r}")


# ---------------------------------------------------------------------------
# Coarse-graining and forecasting
# ---------------------------------------------------------------------------


def _block_edges(total: int, blocks: int) -> np.ndarray:
    # remainder pixels go to the trailing blocks
    base, rem = divmod(total, blocks)
    sizes = [base] * (blocks - rem) + [base + 1] * rem
    return np.concatenate(([0], np.cumsum(sizes)))


def coarse_grain(r: RasterSequence, pr: int, pc: int) -> PatchSeries:
    """Average pixel blocks on a pr x pc structured grid of patches."""
    t, rows, cols = r.shape
    if pr < 1 or pc < 1:
        raise ValueError("patch grid must have at least one block per axis")
    if pr > rows or pc > cols:
        raise ValueError(f"patch grid ({pr}, {pc}) exceeds raster ({rows}, {cols})")
    row_edges = _block_edges(rows, pr)
    col_edges = _block_edges(cols, pc)
    sums = np.add.reduceat(r.frames, row_edges[:-1], axis=1)
    sums = np.add.reduceat(sums, col_edges[:-1], axis=2)
    areas = np.outer(np.diff(row_edges), np.diff(col_edges))
    vectors = (sums / areas).reshape(t, pr * pc)
    return PatchSeries(
        vectors=vectors, patch_rows=pr, patch_cols=pc, row_edges=row_edges, col_edges=col_edges
    )


@dataclass(frozen=True)
class GridForecast:
    koopman: KoopmanMatrix
    predicted: np.ndarray        # (horizon, P)
    errors_per_step: np.ndarray  # (horizon,) relative L2 vs held-out frames
    train_end: np.ndarray        # last training vector (forecast seed state)


def forecast_grid(
    series: PatchSeries, train_frames: int, horizon: int, svd_cutoff: float = 1e-10
) -> GridForecast:
    """Fit a one-step operator on the first ``train_frames`` vectors and forecast.

    The observables are the patch averages themselves, so the snapshot
    matrices are consecutive-column slices of the series. Held-out frames
    inside the series score each forecast step by relative L2 error.
    """
    vectors = series.vectors
    t_total = vectors.shape[0]
    if train_frames < 2:
        raise ValueError("need at least two training frames")
    if train_frames + horizon > t_total:
        raise ValueError(
            f"train_frames + horizon = {train_frames + horizon} exceeds {t_total} frames"
        )
    labels = tuple(f"patch_{p}" for p in range(series.n_patches))
    snap = SnapshotMatrices(
        psi=vectors[: train_frames - 1].T,
        phi=vectors[1:train_frames].T,
        bank_labels=labels,
        dt=1.0,
    )
    km = fit_dko(snap, svd_rel_cutoff=svd_cutoff)
    v = vectors[train_frames - 1].copy()
    predicted = np.empty((horizon, series.n_patches))
    errors = np.empty(horizon)
    for ell in range(horizon):
        v = km.d @ v
        predicted[ell] = v
        actual = vectors[train_frames + ell]
        scale = np.linalg.norm(actual)
        errors[ell] = float(np.linalg.norm(v - actual) / scale) if scale > 0 else float(
            np.linalg.norm(v)
        )
    return GridForecast(
        koopman=km,
        predicted=predicted,
        errors_per_step=errors,
        train_end=vectors[train_frames - 1].copy(),
    )
