"""Experiment configuration: defaults, file parsing, overrides, echo.

A configuration is a flat set of ``[section] key = value`` entries. Desk
defaults keep runtimes CI-friendly; ``paper_scale`` swaps in the full
published budgets. Values resolve in order: defaults, then the config
file, then dotted ``section.key=value`` overrides. The fully resolved
text is echoed into every output directory before any computation.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..measures import MeasureSampler
from ..observables import ObservableBank, gaussian_bank, indicator_bank, monomial_bank, pq_bank
from ..rds import RdsModel, rotation_model, sde_model

EXPERIMENTS = (
    "circle_spectrum",
    "sensitivity",
    "noise_sweep",
    "sde_predict",
    "variance_predict",
    "convergence",
    "grid_forecast",
)

_SECTION_ORDER = ("experiment", "model", "bank", "data", "prediction", "convergence", "grid")

_REQUIRED = object()


def _rotation_defaults(n_bins: int) -> dict:
    return {
        "model": {
            "kind": "rotation",
            "nu": "0.5",
            "half_width": "0.5",
            "sigma": "0.0",
            "snapshot_dt": "1.0",
        },
        "bank": {"kind": "indicator", "n_bins": str(n_bins)},
    }


def _sde_defaults() -> dict:
    return {
        "model": {
            "kind": "sde",
            "drift": "ou",
            "diffusion": "sqrt2",
            "snapshot_dt": "0.1",
            "dt_internal": "0.01",
        },
        "bank": {
            "kind": "gaussian",
            "centers_lo": "-2.0",
            "centers_hi": "2.0",
            "centers_count": "9",
            "width": "1.0",
        },
        "prediction": {
            "t_pred": "10.0",
            "grid_lo": "-2.0",
            "grid_hi": "2.0",
            "grid_points": "101",
            "n_reference_samples": "100",
        },
    }


def desk_defaults(experiment: str) -> dict:
    base = {"experiment": {"name": experiment, "repeats": "1", "threads": "1"}}
    if experiment == "circle_spectrum":
        base.update(_rotation_defaults(50))
        base["experiment"]["repeats"] = "10"
        base["data"] = {"m": "20", "k": "1000", "n_sko": "20000"}
        base["prediction"] = {"n_reference_eigs": "5"}
    elif experiment == "sensitivity":
        base.update(_rotation_defaults(50))
        base["experiment"]["repeats"] = "5"
        base["data"] = {"n_grid": "1,4,16,64,256,1024,4096,10000"}
        base["prediction"] = {"n_reference_eigs": "5"}
    elif experiment == "noise_sweep":
        base.update(_rotation_defaults(50))
        base["experiment"]["repeats"] = "10"
        base["data"] = {"n_budget": "10000", "sigma_grid": "0,0.25,0.5,0.75,1.0"}
        base["prediction"] = {"n_reference_eigs": "5"}
    elif experiment == "sde_predict":
        base.update(_sde_defaults())
        base["experiment"]["repeats"] = "20"
        base["data"] = {"m": "60", "k": "100"}
    elif experiment == "variance_predict":
        base.update(_sde_defaults())
        base["experiment"]["repeats"] = "10"
        base["bank"]["kind"] = "pq"
        base["data"] = {"m": "60", "k": "100"}
        base["prediction"]["t_pred"] = "3.0"
    elif experiment == "convergence":
        base.update(_rotation_defaults(10))
        base["convergence"] = {
            "m_grid": "100,200,400,800,1600,3200,6400,12800",
            "m_oracle": "50000",
            "sampler_kind": "sub_arc_uniform",
            "sampler_arcs": "20",
            "sampler_k": "100",
        }
    elif experiment == "grid_forecast":
        base["grid"] = {
            "data_path": "",
            "format": "",
            "patch_rows": "10",
            "patch_cols": "10",
            "train_frames": "60",
            "horizon": "5",
            "synthetic_frames": "80",
            "synthetic_size": "20",
        }
    elif experiment == "simulate":
        # defaults for the data-generation subcommand, not an experiment
        base.update(_rotation_defaults(50))
        base["data"] = {"m": "20", "k": "100", "n_sko": "1000"}
    else:
        raise ConfigError("experiment.name", f"unknown experiment {experiment!r}")
    return base


def paper_overrides(experiment: str) -> dict:
    """Published budget restorations applied on top of the desk defaults."""
    if experiment == "circle_spectrum":
        return {"bank": {"n_bins": "100"}, "prediction": {"n_reference_eigs": "10"}}
    if experiment == "sensitivity":
        n_grid = ",".join(str(j * j) for j in range(1, 101))
        return {
            "experiment": {"repeats": "20"},
            "bank": {"n_bins": "100"},
            "data": {"n_grid": n_grid},
            "prediction": {"n_reference_eigs": "10"},
        }
    if experiment == "noise_sweep":
        return {
            "experiment": {"repeats": "20"},
            "bank": {"n_bins": "100"},
            "data": {"sigma_grid": ",".join(f"{s:g}" for s in np.linspace(0, 1, 11))},
            "prediction": {"n_reference_eigs": "10"},
        }
    if experiment == "sde_predict":
        return {"experiment": {"repeats": "100"}}
    if experiment == "variance_predict":
        return {"experiment": {"repeats": "100"}, "prediction": {"t_pred": "10.0"}}
    if experiment == "grid_forecast":
        return {"grid": {"patch_rows": "50", "patch_cols": "50", "train_frames": "672"}}
    return {}


def _merge(dst: dict, src: dict) -> None:
    for section, entries in src.items():
        dst.setdefault(section, {}).update(entries)


def _apply_override(sections: dict, spec: str) -> None:
    key, sep, value = spec.partition("=")
    if not sep:
        raise ConfigError(spec, "override must look like section.key=value")
    section, dot, name = key.strip().partition(".")
    if not dot or not name:
        raise ConfigError(key.strip(), "override key must be dotted: section.key")
    sections.setdefault(section, {})[name.strip()] = value.strip()


def read_config_file(path) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(str(path), f"cannot read config file: {exc}") from None
    return {section: dict(parser.items(section)) for section in parser.sections()}


def render_config(sections: dict) -> str:
    """Deterministic INI rendering of the resolved configuration."""
    out = io.StringIO()
    ordered = [s for s in _SECTION_ORDER if s in sections]
    ordered += sorted(s for s in sections if s not in _SECTION_ORDER)
    for section in ordered:
        out.write(f"[{section}]\n")
        for key in sorted(sections[section]):
            out.write(f"{key} = {sections[section][key]}\n")
        out.write("\n")
    return out.getvalue()


@dataclass
class ExperimentConfig:
    """Typed view over the resolved key/value sections."""

    sections: dict
    paper_scale: bool = False

    def _get(self, section: str, key: str, cast, default=_REQUIRED):
        entries = self.sections.get(section, {})
        if key not in entries or entries[key] == "":
            if default is _REQUIRED:
                raise ConfigError(f"{section}.{key}", "required value is missing")
            return default
        raw = entries[key]
        try:
            return cast(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}") from None

    # -- experiment block ---------------------------------------------------
    @property
    def experiment(self) -> str:
        name = self._get("experiment", "name", str)
        if name not in EXPERIMENTS:
            raise ConfigError("experiment.name", f"unknown experiment {name!r}")
        return name

    @property
    def seed(self) -> int:
        seed = self._get("experiment", "seed", int)
        return seed

    @property
    def repeats(self) -> int:
        repeats = self._get("experiment", "repeats", int, 1)
        if repeats < 1:
            raise ConfigError("experiment.repeats", "must be >= 1")
        return repeats

    @property
    def threads(self) -> int:
        threads = self._get("experiment", "threads", int, 1)
        if threads < 1:
            raise ConfigError("experiment.threads", "must be >= 1")
        return threads

    # -- model block ----------------------------------------------------------
    def model(self) -> RdsModel:
        kind = self._get("model", "kind", str)
        try:
            if kind == "rotation":
                return rotation_model(
                    nu=self._get("model", "nu", float),
                    half_width=self._get("model", "half_width", float, 0.5),
                    extra_noise_sigma=self._get("model", "sigma", float, 0.0),
                    snapshot_dt=self._get("model", "snapshot_dt", float, 1.0),
                )
            if kind == "sde":
                return sde_model(
                    drift=self._get("model", "drift", str),
                    diffusion=self._get("model", "diffusion", str),
                    snapshot_dt=self._get("model", "snapshot_dt", float, 0.1),
                    dt_internal=self._get("model", "dt_internal", float, None),
                )
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from None
        raise ConfigError("model.kind", f"unknown model kind {kind!r}")

    # -- bank block -----------------------------------------------------------
    def bank_centers(self) -> np.ndarray:
        lo = self._get("bank", "centers_lo", float, -2.0)
        hi = self._get("bank", "centers_hi", float, 2.0)
        count = self._get("bank", "centers_count", int, 9)
        if count < 1:
            raise ConfigError("bank.centers_count", "must be >= 1")
        return np.linspace(lo, hi, count)

    @property
    def n_bins(self) -> int:
        return self._positive("bank", "n_bins")

    def bank(self) -> ObservableBank:
        kind = self._get("bank", "kind", str)
        try:
            if kind == "indicator":
                return indicator_bank(self._get("bank", "n_bins", int))
            if kind == "gaussian":
                return gaussian_bank(self.bank_centers(), width=self._get("bank", "width", float, 1.0))
            if kind == "pq":
                return pq_bank(self.bank_centers(), width=self._get("bank", "width", float, 1.0))
            if kind == "monomial":
                degrees = self._get("bank", "degrees", _int_list, (0, 1, 2))
                return monomial_bank(degrees)
        except ValueError as exc:
            raise ConfigError("bank", str(exc)) from None
        raise ConfigError("bank.kind", f"unknown bank kind {kind!r}")

    # -- data / prediction / convergence blocks -------------------------------
    @property
    def data_m(self) -> int:
        return self._positive("data", "m")

    @property
    def data_k(self) -> int:
        return self._positive("data", "k")

    @property
    def data_n_sko(self) -> int:
        return self._positive("data", "n_sko")

    @property
    def data_n_budget(self) -> int:
        return self._positive("data", "n_budget")

    @property
    def n_grid(self) -> tuple[int, ...]:
        values = self._get("data", "n_grid", _int_list)
        if any(v < 1 for v in values):
            raise ConfigError("data.n_grid", "budgets must be positive")
        return values

    @property
    def sigma_grid(self) -> tuple[float, ...]:
        values = self._get("data", "sigma_grid", _float_list)
        if any(s < 0 for s in values):
            raise ConfigError("data.sigma_grid", "noise levels must be >= 0")
        return values

    def _positive(self, section: str, key: str) -> int:
        value = self._get(section, key, int)
        if value < 1:
            raise ConfigError(f"{section}.{key}", "must be >= 1")
        return value

    @property
    def n_reference_eigs(self) -> int:
        return self._get("prediction", "n_reference_eigs", int, 5)

    @property
    def t_pred(self) -> float:
        t = self._get("prediction", "t_pred", float, 10.0)
        if t <= 0:
            raise ConfigError("prediction.t_pred", "must be positive")
        return t

    def prediction_grid(self) -> np.ndarray:
        lo = self._get("prediction", "grid_lo", float, -2.0)
        hi = self._get("prediction", "grid_hi", float, 2.0)
        points = self._get("prediction", "grid_points", int, 101)
        if points < 2:
            raise ConfigError("prediction.grid_points", "need at least 2 grid points")
        return np.linspace(lo, hi, points)

    @property
    def n_reference_samples(self) -> int:
        value = self._get("prediction", "n_reference_samples", int, 100)
        if value < 2:
            raise ConfigError("prediction.n_reference_samples", "need at least 2 samples")
        return value

    @property
    def m_grid(self) -> tuple[int, ...]:
        values = self._get("convergence", "m_grid", _int_list)
        if any(v < 1 for v in values):
            raise ConfigError("convergence.m_grid", "budgets must be positive")
        return values

    @property
    def m_oracle(self) -> int:
        return self._positive("convergence", "m_oracle")

    def sampler(self) -> MeasureSampler:
        kind = self._get("convergence", "sampler_kind", str, "sub_arc_uniform")
        try:
            return MeasureSampler(
                kind=kind,
                samples_per_measure=self._get("convergence", "sampler_k", int, 100),
                arc_count=self._get("convergence", "sampler_arcs", int, 20),
            )
        except ValueError as exc:
            raise ConfigError("convergence.sampler_kind", str(exc)) from None

    # -- grid block -------------------------------------------------------
    @property
    def grid_settings(self) -> dict:
        g = self.sections.get("grid", {})
        return {
            "data_path": self._get("grid", "data_path", str, ""),
            "format": self._get("grid", "format", str, "") or None,
            "patch_rows": self._positive("grid", "patch_rows"),
            "patch_cols": self._positive("grid", "patch_cols"),
            "train_frames": self._positive("grid", "train_frames"),
            "horizon": self._positive("grid", "horizon"),
            "synthetic_frames": self._get("grid", "synthetic_frames", int, 80),
            "synthetic_size": self._get("grid", "synthetic_size", int, 20),
        } if g else {}

    def echo(self) -> str:
        return render_config(self.sections)


def _int_list(raw) -> tuple[int, ...]:
    if isinstance(raw, (tuple, list)):
        return tuple(int(v) for v in raw)
    return tuple(int(v.strip()) for v in str(raw).split(",") if v.strip())


def _float_list(raw) -> tuple[float, ...]:
    if isinstance(raw, (tuple, list)):
        return tuple(float(v) for v in raw)
    return tuple(float(v.strip()) for v in str(raw).split(",") if v.strip())


def load_config(
    experiment: str,
    config_path=None,
    overrides=(),
    seed: int | None = None,
    paper_scale: bool = False,
    threads: int | None = None,
) -> ExperimentConfig:
    """Resolve an experiment configuration from defaults, file, and overrides."""
    sections = desk_defaults(experiment)
    if paper_scale:
        _merge(sections, paper_overrides(experiment))
    if config_path:
        _merge(sections, read_config_file(config_path))
    for spec in overrides:
        _apply_override(sections, spec)
    if seed is not None:
        sections.setdefault("experiment", {})["seed"] = str(int(seed))
    if threads is not None:
        sections.setdefault("experiment", {})["threads"] = str(int(threads))
    cfg = ExperimentConfig(sections=sections, paper_scale=paper_scale)
    cfg.seed  # seeds are mandatory; fail before any computation
    return cfg
