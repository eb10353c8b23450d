"""Numerical laboratory for action-drift stability of near-integrable Hamiltonians."""

__version__ = "0.1.0"

from .algebra import (
    FTPolynomial,
    RegularityProfile,
    ck_norm_upper_bound,
    compose_linear_flow,
    poisson_bracket,
    synthesize_ck_perturbation,
)

__all__ = [
    "FTPolynomial",
    "RegularityProfile",
    "ck_norm_upper_bound",
    "compose_linear_flow",
    "poisson_bracket",
    "synthesize_ck_perturbation",
    "__version__",
]
