"""Experiment harness: configuration, drivers, plotting and the ``qsindy`` CLI."""
from .config import ExperimentConfig, ConfigError, load_config
from .experiments import (
    run_burgers,
    run_diagnostic_study,
    run_hw_noise,
    run_rbf_grid,
    run_sweep,
    run_verify,
)

__all__ = [
    "ExperimentConfig", "ConfigError", "load_config", "run_sweep", "run_rbf_grid",
    "run_diagnostic_study", "run_hw_noise", "run_burgers", "run_verify",
]
