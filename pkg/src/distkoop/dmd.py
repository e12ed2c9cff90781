"""Least-squares operator fitting, spectra, prediction, and the Galerkin oracle.

The central object is the n x n matrix ``D`` minimizing ||Phi - D Psi||_F
over snapshot matrices whose columns are observable vectors of paired
input/evolved data. ``D = Phi pinv(Psi)`` is computed through an SVD with
a relative cutoff, which yields the minimum-norm solution in the
rank-deficient regime and satisfies the normal equations
``Phi Psi^T = D Psi Psi^T`` to the tolerance recorded in the fit report.

The same solver serves three data sources: distribution snapshots
(pairs of measures), single-trajectory state snapshots, and raw vector
series (grid forecasting).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateDataError,
    IllConditionedGramError,
    NumericalError,
)
from .measures import MeasureSampler, evolve_measure
from .observables import ObservableBank, bank_from_descriptors, bank_to_descriptors, evaluate_bank
from .seeding import derived_rng

NORMAL_EQUATION_TOL = 1e-8
EIGENPAIR_TOL = 1e-8
GRAM_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class FitReport:
    residual_fro: float       # ||Phi - D Psi||_F
    normal_residual: float    # ||Phi Psi^T - D Psi Psi^T||_F / max(1, ||Phi Psi^T||_F)
    rank: int                 # retained singular values
    svd_cutoff: float         # relative cutoff used


@dataclass(frozen=True)
class SnapshotMatrices:
    """Paired observable matrices: column j of phi evolves column j of psi."""

    psi: np.ndarray
    phi: np.ndarray
    bank_labels: tuple[str, ...]
    dt: float

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if psi.ndim != 2 or psi.shape[1] < 1:
            raise ValueError("psi must be an (n, m) matrix with m >= 1")
        if phi.shape != psi.shape:
            raise ValueError(f"phi shape {phi.shape} differs from psi shape {psi.shape}")
        if len(self.bank_labels) != psi.shape[0]:
            raise ValueError("one bank label per matrix row required")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "bank_labels", tuple(self.bank_labels))

    @property
    def n_observables(self) -> int:
        return self.psi.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.psi.shape[1]


@dataclass(frozen=True)
class KoopmanMatrix:
    """Fitted finite-dimensional operator with its provenance."""

    d: np.ndarray
    dt: float
    bank_labels: tuple[str, ...]
    fit_report: FitReport

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("operator matrix must be square")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "bank_labels", tuple(self.bank_labels))

    @property
    def n(self) -> int:
        return self.d.shape[0]


def _least_squares_operator(psi: np.ndarray, phi: np.ndarray, svd_rel_cutoff: float):
    if not np.any(psi):
        raise DegenerateDataError("input snapshot matrix is identically zero")
    u, s, vt = np.linalg.svd(psi, full_matrices=False)
    keep = s > svd_rel_cutoff * s[0]
    rank = int(np.count_nonzero(keep))
    # minimum-norm least-squares solution through the truncated pseudoinverse
    d = (phi @ vt[keep].T) * (1.0 / s[keep]) @ u[:, keep].T
    residual_fro = float(np.linalg.norm(phi - d @ psi))
    cross = phi @ psi.T
    normal_residual = float(
        np.linalg.norm(cross - d @ (psi @ psi.T)) / max(1.0, np.linalg.norm(cross))
    )
    if normal_residual > NORMAL_EQUATION_TOL:
        raise NumericalError(
            f"normal-equation residual {normal_residual:.3e} exceeds {NORMAL_EQUATION_TOL:.0e}"
        )
    report = FitReport(
        residual_fro=residual_fro,
        normal_residual=normal_residual,
        rank=rank,
        svd_cutoff=float(svd_rel_cutoff),
    )
    return d, report


def fit_dko(snap: SnapshotMatrices, svd_rel_cutoff: float = 1e-10) -> KoopmanMatrix:
    """Fit the distribution-level operator from paired measure snapshots."""
    d, report = _least_squares_operator(snap.psi, snap.phi, svd_rel_cutoff)
    return KoopmanMatrix(d=d, dt=snap.dt, bank_labels=snap.bank_labels, fit_report=report)


def fit_sko(traj, bank: ObservableBank, svd_rel_cutoff: float = 1e-10) -> KoopmanMatrix:
    """Fit the state-level operator from a single trajectory.

    The bank must consist of linear lifts; their underlying state
    functions are evaluated directly on the trajectory points.
    """
    states = traj.states
    if states.shape[0] != 1:
        raise ValueError("state-level fitting takes a single trajectory (K=1)")
    xs = states[0]
    fns = bank.state_functions()
    values = np.vstack([np.asarray(f(xs), dtype=float) for f in fns])
    snap = SnapshotMatrices(
        psi=values[:, :-1], phi=values[:, 1:], bank_labels=bank.labels, dt=traj.snapshot_dt
    )
    d, report = _least_squares_operator(snap.psi, snap.phi, svd_rel_cutoff)
    return KoopmanMatrix(d=d, dt=snap.dt, bank_labels=snap.bank_labels, fit_report=report)


def snapshots_from_pairs(bank: ObservableBank, pairs, dt: float) -> SnapshotMatrices:
    """Evaluate a bank over (pi_j, mu_j) measure pairs."""
    psi = evaluate_bank(bank, [p for p, _ in pairs])
    phi = evaluate_bank(bank, [m for _, m in pairs])
    return SnapshotMatrices(psi=psi, phi=phi, bank_labels=bank.labels, dt=dt)


def snapshots_from_sampler(
    bank: ObservableBank, sampler: MeasureSampler, model, count: int, seed: int
) -> SnapshotMatrices:
    """Draw ``count`` i.i.d. measures, evolve each one step, evaluate the bank.

    Measure j comes from the sampler stream ``(seed, j, 0)`` and its
    evolution noise from ``(seed, j, 1)``, so datasets of different sizes
    under one seed share their common prefix.
    """
    n = len(bank)
    psi = np.empty((n, count))
    phi = np.empty((n, count))
    for j in range(count):
        pi = sampler.sample_indexed(seed, j)
        mu = evolve_measure(
            pi, model, model.snapshot_dt, seed=int(derived_rng(seed, j, 1).integers(2**32))
        )
        psi[:, j] = bank.evaluate(pi)
        phi[:, j] = bank.evaluate(mu)
    return SnapshotMatrices(psi=psi, phi=phi, bank_labels=bank.labels, dt=model.snapshot_dt)


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs sorted by descending modulus, phase-normalized."""

    eigenvalues: np.ndarray   # (n,) complex
    eigenvectors: np.ndarray  # (n, n) complex, columns match eigenvalues
    sort_order: str = "modulus_desc"


def _spectral_decomposition(mat: np.ndarray) -> SpectralDecomposition:
    try:
        w, v = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from None
    order = np.lexsort((-w.imag, -w.real, -np.abs(w)))
    w = w[order]
    v = v[:, order]
    for k in range(v.shape[1]):
        col = v[:, k]
        norm = np.linalg.norm(col)
        if norm > 0:
            col = col / norm
        peak = np.max(np.abs(col))
        nz = np.nonzero(np.abs(col) > 1e-12 * max(peak, 1.0))[0]
        if nz.size:
            pivot = col[nz[0]]
            col = col * (np.conj(pivot) / abs(pivot))
        v[:, k] = col
    scale = np.linalg.norm(mat, 2) if np.any(mat) else 1.0
    worst = max(
        float(np.linalg.norm(mat @ v[:, k] - w[k] * v[:, k])) for k in range(v.shape[1])
    )
    if worst > EIGENPAIR_TOL * max(scale, 1.0):
        raise NumericalError(
            f"eigenpair residual {worst:.3e} exceeds {EIGENPAIR_TOL:.0e} * ||D||"
        )
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def spectrum(km: KoopmanMatrix) -> SpectralDecomposition:
    """Full complex eigendecomposition of the fitted operator."""
    return _spectral_decomposition(km.d)


def left_spectrum(km: KoopmanMatrix) -> SpectralDecomposition:
    """Eigendecomposition of the transpose.

    Left eigenvectors carry the coefficient expansions of eigen-observables
    in the bank basis (for an indicator bank: the eigenfunction's values
    at the bin centers).
    """
    return _spectral_decomposition(km.d.T)


def match_eigenvalues(computed, reference) -> tuple[list[tuple[int, int]], float]:
    """Greedy nearest-neighbor pairing of computed to reference eigenvalues.

    References are matched in order, each consuming its nearest unused
    computed eigenvalue. Returns the (reference_index, computed_index)
    pairs and the mean squared modulus error over the pairs.
    """
    computed = np.asarray(computed, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    if computed.shape[0] < reference.shape[0]:
        raise ValueError(
            f"need at least {reference.shape[0]} computed eigenvalues, got {computed.shape[0]}"
        )
    used = np.zeros(computed.shape[0], dtype=bool)
    pairs = []
    sq_errors = []
    for r, lam in enumerate(reference):
        dist = np.abs(computed - lam)
        dist[used] = np.inf
        c = int(np.argmin(dist))
        used[c] = True
        pairs.append((r, c))
        sq_errors.append(float(dist[c] ** 2))
    return pairs, float(np.mean(sq_errors))


def predict(km: KoopmanMatrix, v0: np.ndarray, steps: int) -> np.ndarray:
    """Iterated application of the operator: rows v_0, v_1, ..., v_steps."""
    v0 = np.asarray(v0, dtype=float).ravel()
    if v0.shape[0] != km.n:
        raise ValueError(f"coefficient vector has length {v0.shape[0]}, operator is {km.n}x{km.n}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    out = np.empty((steps + 1, km.n))
    out[0] = v0
    v = v0
    for ell in range(1, steps + 1):
        v = km.d @ v
        out[ell] = v
    return out


def predict_many(km: KoopmanMatrix, v0_columns: np.ndarray, steps: int) -> np.ndarray:
    """Vectorized :func:`predict` over columns; returns (steps+1, n, n_cols)."""
    v = np.asarray(v0_columns, dtype=float)
    if v.ndim != 2 or v.shape[0] != km.n:
        raise ValueError("v0_columns must be an (n, n_cols) matrix")
    out = np.empty((steps + 1,) + v.shape)
    out[0] = v
    for ell in range(1, steps + 1):
        v = km.d @ v
        out[ell] = v
    return out


# ---------------------------------------------------------------------------
# Galerkin-limit oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GalerkinOracle:
    """Large-sample estimate of the best matrix approximation on the bank span.

    ``d_infinity`` solves Y = D G where G and Y are Monte Carlo moments of
    the bank values over freshly sampled measures and their one-step
    evolutions.
    """

    g: np.ndarray
    y: np.ndarray
    d_infinity: np.ndarray
    sampler: MeasureSampler
    m_oracle: int
    seed: int


def build_galerkin_oracle(
    bank: ObservableBank,
    sampler: MeasureSampler,
    model,
    m_oracle: int,
    seed: int,
) -> GalerkinOracle:
    """Estimate G, Y, and the limiting operator from ``m_oracle`` fresh measures."""
    n = len(bank)
    if m_oracle < 20 * n:
        raise ValueError(f"m_oracle={m_oracle} too small; need at least 20*n = {20 * n}")
    snap = snapshots_from_sampler(bank, sampler, model, m_oracle, seed)
    g = snap.psi @ snap.psi.T / m_oracle
    g = 0.5 * (g + g.T)
    y = snap.phi @ snap.psi.T / m_oracle
    cond = float(np.linalg.cond(g))
    if not np.isfinite(cond) or cond > GRAM_CONDITION_LIMIT:
        raise IllConditionedGramError(cond)
    d_inf = np.linalg.solve(g, y.T).T
    return GalerkinOracle(
        g=g, y=y, d_infinity=d_inf, sampler=sampler, m_oracle=m_oracle, seed=seed
    )


def hilbert_schmidt_residual(km: KoopmanMatrix, oracle: GalerkinOracle) -> dict:
    """Distance of a fit from the oracle: plain and Gram-weighted Frobenius."""
    e = oracle.d_infinity - km.d
    try:
        weighted = float(np.linalg.norm(np.linalg.solve(oracle.g, e) @ oracle.g))
    except np.linalg.LinAlgError:
        raise IllConditionedGramError(np.linalg.cond(oracle.g)) from None
    return {"frobenius": float(np.linalg.norm(e)), "weighted": weighted}


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def save_operator(km: KoopmanMatrix, path, bank: ObservableBank | None = None, seed_info=None):
    """Write the matrix as .npy plus a JSON sidecar with fit metadata."""
    path = Path(path)
    np.save(path.with_suffix(".npy"), km.d)
    meta = {
        "dt": km.dt,
        "bank_labels": list(km.bank_labels),
        "fit_report": asdict(km.fit_report),
        "seed_lineage": seed_info if seed_info is not None else {},
    }
    if bank is not None:
        meta["bank"] = bank_to_descriptors(bank)
    with open(_sidecar(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_operator(path) -> tuple[KoopmanMatrix, ObservableBank | None]:
    path = Path(path)
    d = np.load(path.with_suffix(".npy"))
    with open(_sidecar(path)) as fh:
        meta = json.load(fh)
    km = KoopmanMatrix(
        d=d,
        dt=float(meta["dt"]),
        bank_labels=tuple(meta["bank_labels"]),
        fit_report=FitReport(**meta["fit_report"]),
    )
    bank = bank_from_descriptors(meta["bank"]) if "bank" in meta else None
    return km, bank


def save_snapshots(snap: SnapshotMatrices, path, bank: ObservableBank | None = None, seed_info=None):
    """Write psi/phi as one .npz plus a JSON sidecar with the bank descriptor."""
    path = Path(path)
    np.savez(path.with_suffix(".npz"), psi=snap.psi, phi=snap.phi)
    meta = {"dt": snap.dt, "bank_labels": list(snap.bank_labels)}
    if bank is not None:
        meta["bank"] = bank_to_descriptors(bank)
    if seed_info is not None:
        meta["seed_lineage"] = seed_info
    with open(_sidecar(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_snapshots(path) -> tuple[SnapshotMatrices, ObservableBank | None]:
    path = Path(path)
    with np.load(path.with_suffix(".npz")) as data:
        psi, phi = data["psi"], data["phi"]
    with open(_sidecar(path)) as fh:
        meta = json.load(fh)
    snap = SnapshotMatrices(
        psi=psi, phi=phi, bank_labels=tuple(meta["bank_labels"]), dt=float(meta["dt"])
    )
    bank = bank_from_descriptors(meta["bank"]) if "bank" in meta else None
    return snap, bank


def write_spectrum_csv(decomp: SpectralDecomposition, path) -> None:
    """CSV export: index, re, im, modulus."""
    with open(path, "w", newline="") as fh:
        fh.write("index,re,im,modulus\n")
        for k, lam in enumerate(decomp.eigenvalues):
            fh.write(f"{k},{float(lam.real)!r},{float(lam.imag)!r},{float(abs(lam))!r}\n")
