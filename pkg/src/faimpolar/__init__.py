"""Polarization analysis and polar coding for finite-state hidden Markov processes."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    BudgetExceeded,
    DomainError,
    FaimError,
    ImpossibleInput,
    InvalidParameter,
    InvalidRate,
    LengthMismatch,
    LengthNotPowerOfTwo,
    ModelError,
    NonStochastic,
    NotConverged,
    NotErgodic,
)
from .model import (  # noqa: E402
    FaimModel,
    gilbert_elliott,
    load_model,
    memoryless_from_channel,
    pair_marginal,
    psi,
    rll_source,
    sample_trajectory,
    save_model,
    stationary_distribution,
    validate,
)
from .params import BsiFamily, JointDist, bhattacharyya, bsi_aggregate, cond_entropy, prob_error, total_variation  # noqa: E402

__all__ = [
    "BsiFamily", "BudgetExceeded", "DomainError", "FaimError", "FaimModel", "ImpossibleInput",
    "InvalidParameter", "InvalidRate", "JointDist", "LengthMismatch", "LengthNotPowerOfTwo",
    "ModelError", "NonStochastic", "NotConverged", "NotErgodic", "bhattacharyya", "bsi_aggregate",
    "cond_entropy", "gilbert_elliott", "load_model", "memoryless_from_channel", "pair_marginal",
    "prob_error", "psi", "rll_source", "sample_trajectory", "save_model", "stationary_distribution",
    "total_variation", "validate",
]
