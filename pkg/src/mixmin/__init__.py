"""Data-mixture weights by convex minimization over the simplex.

Given each source's proxy-model scores on samples from a target task, find
the mixture of sources whose weighted ensemble best fits the target, then
turn those weights into a remixing plan.
"""

__version__ = "0.1.0"

from mixmin.errors import DataFormatError, MixMinError, SimplexError, ZeroProbabilityError
from mixmin.objectives import (
    LossKind,
    PredictionMatrix,
    ce_gradient,
    ce_objective,
    gradient,
    mix_log_scores,
    mse_gradient,
    mse_objective,
    objective,
)
from mixmin.simplex import MixtureWeights, entropic_step, uniform_weights, validate_simplex
from mixmin.solver import SolverConfig, SolverTrace, exact_expectation_matrix, mixmin_fit

__all__ = [
    "DataFormatError",
    "LossKind",
    "MixMinError",
    "MixtureWeights",
    "PredictionMatrix",
    "SimplexError",
    "SolverConfig",
    "SolverTrace",
    "ZeroProbabilityError",
    "ce_gradient",
    "ce_objective",
    "entropic_step",
    "exact_expectation_matrix",
    "gradient",
    "mix_log_scores",
    "mixmin_fit",
    "mse_gradient",
    "mse_objective",
    "objective",
    "uniform_weights",
    "validate_simplex",
]
