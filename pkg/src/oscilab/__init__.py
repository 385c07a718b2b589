"""Numerical toolkit for maximal functions and weighted local bmo on sampled 1-D data."""

from .families import (
    FamilySpec,
    gradient_bounded,
    plateau_cascade,
    plateau_window,
    step_plateau,
    tail_family,
    time_blowup,
)
from .lab import EXPERIMENTS, ExperimentConfig, SweepResult, default_config, driver_statistic, run_experiment
from .maximal import (
    MaximalOptions,
    StepFamilyParams,
    analytic_maximal_step,
    gradient_decay_estimate,
    maximal_at,
    maximal_detail,
    maximal_function,
)
from .oscillation import (
    OscillationReport,
    derivative_oscillation_check,
    mean_oscillation,
    multiplier_inequality_ratio,
    weighted_bmo_norm,
)
from .sampled import Grid1D, Interval, SampledFunction, graded_grid, make_grid, mollify, read_csv, write_csv
from .weights import LogWeight, phi, phi_star, phi_star_from_integral

__version__ = "0.1.0"

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "FamilySpec",
    "Grid1D",
    "Interval",
    "LogWeight",
    "MaximalOptions",
    "OscillationReport",
    "SampledFunction",
    "StepFamilyParams",
    "SweepResult",
    "analytic_maximal_step",
    "default_config",
    "derivative_oscillation_check",
    "driver_statistic",
    "gradient_bounded",
    "gradient_decay_estimate",
    "graded_grid",
    "make_grid",
    "maximal_at",
    "maximal_detail",
    "maximal_function",
    "mean_oscillation",
    "mollify",
    "multiplier_inequality_ratio",
    "phi",
    "phi_star",
    "phi_star_from_integral",
    "plateau_cascade",
    "plateau_window",
    "read_csv",
    "run_experiment",
    "step_plateau",
    "tail_family",
    "time_blowup",
    "weighted_bmo_norm",
    "write_csv",
]
