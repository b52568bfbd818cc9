"""Experiment harness: configuration, the 50 Hz loop, protocols, CLI, server."""

from .config import ExperimentConfig, load_config, save_config
from .experiments import (
    compute_metrics,
    load_report,
    make_subject,
    run_force_estimation_experiment,
    run_prosthesis_control_experiment,
    run_tension_calibration,
    run_tension_step_response,
    save_report,
    train_control_estimator,
)
from .loop import (
    FeatureFrontend,
    ProsthesisPipeline,
    ScriptedActivation,
    TrialRecord,
    run_loop,
)

__all__ = [
    "ExperimentConfig",
    "FeatureFrontend",
    "ProsthesisPipeline",
    "ScriptedActivation",
    "TrialRecord",
    "compute_metrics",
    "load_config",
    "load_report",
    "make_subject",
    "run_force_estimation_experiment",
    "run_loop",
    "run_prosthesis_control_experiment",
    "run_tension_calibration",
    "run_tension_step_response",
    "save_config",
    "save_report",
    "train_control_estimator",
]
