"""
Service layer: certification procedures and the verification lab.
"""

from .base_service import BaseService
from .estimator_service import EstimatorService, passes_for_slack
from .tail_lab_service import (TailLabService, chernoff_kl_tail_bound,
                               enumerate_lower_tail, exact_lower_tail,
                               poisson_binomial_pmf)

__all__ = [
    "BaseService",
    "EstimatorService",
    "passes_for_slack",
    "TailLabService",
    "chernoff_kl_tail_bound",
    "enumerate_lower_tail",
    "exact_lower_tail",
    "poisson_binomial_pmf",
]
