"""Scripted experiment reproductions with config-driven budgets."""

from .circle import (
    CircleSpectrumResult,
    SweepResult,
    run_circle_spectrum,
    run_noise_sweep,
    run_sensitivity,
)
from .common import MseCurve
from .config import EXPERIMENTS, ExperimentConfig, load_config, render_config
from .convergence import ConvergenceResult, run_convergence
from .gridexp import GridForecastResult, run_grid_forecast, synthetic_advection_diffusion
from .sde import PredictionResult, run_sde_predict, run_variance_predict
