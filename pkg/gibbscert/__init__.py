"""
gibbscert: high-probability upper bounds on the Gibbs risk of a posterior
from Monte-Carlo loss evaluations.
"""

from .kl_core import (Probability, SlackBudget, kl, kl_inverse_upper, kl_plus,
                      pinsker_relaxation, rescale_loss, round_trip_tolerance,
                      slack_budget)
from .models import (BudgetComparison, Certificate, CoverageReport,
                     EstimatorMethod, HeterogeneousBernoulliSpec,
                     SyntheticKind, SyntheticPosteriorSpec, TailReport)
from .repositories import (DatasetHandle, InMemoryDataset, LossOracle,
                           PosteriorSampler, RescaledLossOracle, build_synthetic,
                           certificate_from_json, certificate_to_json,
                           ingest_loss_matrix)
from .services import EstimatorService, TailLabService, passes_for_slack

__version__ = "1.0.0"

__all__ = [
    "Probability",
    "SlackBudget",
    "kl",
    "kl_plus",
    "kl_inverse_upper",
    "pinsker_relaxation",
    "rescale_loss",
    "round_trip_tolerance",
    "slack_budget",
    "BudgetComparison",
    "Certificate",
    "CoverageReport",
    "EstimatorMethod",
    "HeterogeneousBernoulliSpec",
    "SyntheticKind",
    "SyntheticPosteriorSpec",
    "TailReport",
    "DatasetHandle",
    "InMemoryDataset",
    "LossOracle",
    "PosteriorSampler",
    "RescaledLossOracle",
    "build_synthetic",
    "ingest_loss_matrix",
    "certificate_from_json",
    "certificate_to_json",
    "EstimatorService",
    "TailLabService",
    "passes_for_slack",
]
