"""
Repository layer: data access behind the estimators.

Datasets, posterior samplers and loss oracles (in-memory, synthetic and
file-backed), plus the artifact store for emitted certificates and reports.
"""

from .artifact_repository import (ArtifactRepository, certificate_from_json,
                                  certificate_to_json)
from .base_repository import (BaseRepository, DatasetHandle, InMemoryDataset,
                              LossOracle, PosteriorSampler, RescaledLossOracle)
from .loss_matrix_repository import (LossMatrix, LossMatrixBundle,
                                     LossMatrixRepository, ingest_loss_matrix)
from .synthetic_repository import (SyntheticDataset, SyntheticLossOracle,
                                   SyntheticPosteriorSampler, build_synthetic)

__all__ = [
    "ArtifactRepository",
    "certificate_from_json",
    "certificate_to_json",
    "BaseRepository",
    "DatasetHandle",
    "InMemoryDataset",
    "LossOracle",
    "PosteriorSampler",
    "RescaledLossOracle",
    "LossMatrix",
    "LossMatrixBundle",
    "LossMatrixRepository",
    "ingest_loss_matrix",
    "SyntheticDataset",
    "SyntheticLossOracle",
    "SyntheticPosteriorSampler",
    "build_synthetic",
]
