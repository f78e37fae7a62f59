"""Unscented Bayesian optimization for safe grasping.

Gaussian-process surrogate with sampled hyperparameters, expected
improvement and its unscented variant, a planar grasp simulator with a
collision penalty, and an experiment harness.
"""

from .acquisition import (
    Incumbent,
    IncumbentKind,
    best_observed_incumbent,
    expected_improvement,
    latin_hypercube,
    maximize_acquisition,
)
from .errors import ContractError, InputError, NumericalError, StateError, UbograspError
from .gp import GPModel, KernelHyperparams, ObservationSet, fit, predict, sample_hyperparams
from .optimizer import (
    Acquisition,
    OptimizerConfig,
    RunRecord,
    collision_penalty,
    make_synthetic_objective,
    penalized_objective,
    run_optimization,
)
from .unscented import InputNoise, SigmaPointSet, sigma_points, uei, unscented_incumbent, unscented_outcome

__version__ = "0.1.0"

__all__ = [
    "Acquisition", "ContractError", "GPModel", "Incumbent", "IncumbentKind", "InputError",
    "InputNoise", "KernelHyperparams", "NumericalError", "ObservationSet", "OptimizerConfig",
    "RunRecord", "SigmaPointSet", "StateError", "UbograspError", "best_observed_incumbent",
    "collision_penalty", "expected_improvement", "fit", "latin_hypercube",
    "make_synthetic_objective", "maximize_acquisition", "penalized_objective", "predict",
    "run_optimization", "sample_hyperparams", "sigma_points", "uei", "unscented_incumbent",
    "unscented_outcome",
]
