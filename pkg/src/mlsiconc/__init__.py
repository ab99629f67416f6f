"""Finite-space concentration toolkit.

Difference operators, modified log-Sobolev checks, two-level tail bounds,
permutation statistics and Talagrand's convex distance on small finite spaces.
"""

from mlsiconc.config import Settings, load_settings
from mlsiconc.finite_space import (
    DomainError,
    EnumerationTooLarge,
    FiniteSpace,
    ProbabilityMeasure,
    build_space,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EnumerationTooLarge",
    "FiniteSpace",
    "ProbabilityMeasure",
    "Settings",
    "build_space",
    "load_settings",
]
