"""Exact changepoint marginalisation in O(mn), its gradient, and HMC on top of it."""

from .dp import (
    ChangepointWeights,
    DPTables,
    SegmentLikelihoodMatrix,
    build_likelihood_matrix,
    changepoint_index,
    log_normalizer,
    marginal_log_likelihood,
)
from .errors import (
    CapabilityError,
    ContractViolation,
    CpmargError,
    EvaluationError,
    GuardRefusal,
    ParseError,
)
from .gradients import MarginalGradient, finite_difference_check, marginal_gradient

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "ChangepointWeights",
    "ContractViolation",
    "CpmargError",
    "DPTables",
    "EvaluationError",
    "GuardRefusal",
    "MarginalGradient",
    "ParseError",
    "SegmentLikelihoodMatrix",
    "build_likelihood_matrix",
    "changepoint_index",
    "finite_difference_check",
    "log_normalizer",
    "marginal_gradient",
    "marginal_log_likelihood",
]
