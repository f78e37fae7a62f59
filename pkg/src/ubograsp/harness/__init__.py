"""Experiment harness: seeded repeated runs, robustness evaluation, reporting."""

from .config import ConfigError, ExperimentConfig, Scenario, format_config, load_config, parse_config
from .experiment import (
    AggregateStats,
    ExperimentResult,
    RunResult,
    aggregate,
    execute_run,
    make_objective,
    monte_carlo_eval,
    run_experiment,
)
from .report import report

__all__ = [
    "AggregateStats", "ConfigError", "ExperimentConfig", "ExperimentResult", "RunResult",
    "Scenario", "aggregate", "execute_run", "format_config", "load_config", "make_objective",
    "monte_carlo_eval", "parse_config", "report", "run_experiment",
]
