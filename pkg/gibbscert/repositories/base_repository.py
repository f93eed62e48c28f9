"""
Base repository classes: the data-access boundary between estimators and user models.

Estimators never see models or data directly. They see three repositories:
a DatasetHandle serving example tokens by index, a PosteriorSampler serving
hypothesis handles by draw index, and a LossOracle scoring a hypothesis on
an example. Indices are 0-based.
"""

import hashlib
import json
import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Hashable, Optional, Sequence

from ..exceptions import ErrorCode, ValidationError
from ..kl_core import Probability, rescale_loss


class BaseRepository(ABC):
    """Base class for all repository implementations."""

    def __init__(self):
        self.logger = logging.getLogger(
            f"{self.__class__.__module__}.{self.__class__.__name__}"
        )

    @property
    @abstractmethod
    def repository_name(self) -> str:
        """Name of the repository for logging."""
        pass

    @property
    def thread_safe(self) -> bool:
        """Whether concurrent calls from several threads are allowed."""
        return False

    def describe(self) -> Optional[Dict[str, Any]]:
        """
        Canonical description of the underlying content, or None when opaque.

        Used to fingerprint the data a certificate was computed on.
        """
        return None

    def log_operation(self, operation: str, details: Dict[str, Any] = None) -> None:
        """Log a repository operation with structured data."""
        log_data = {
            "repository": self.repository_name,
            "operation": operation,
        }

        if details:
            log_data.update(details)

        self.logger.debug("Repository operation", extra=log_data)


class DatasetHandle(BaseRepository):
    """Fixed dataset s = (z_0, ..., z_{m-1}); index j always yields the same token."""

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of examples m (>= 1)."""
        pass

    @abstractmethod
    def example(self, j: int) -> Hashable:
        """Opaque token for example j."""
        pass

    def digest(self) -> Optional[str]:
        """SHA-256 of the canonical description, or None for opaque datasets."""
        description = self.describe()
        if description is None:
            return None
        encoded = json.dumps(description, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(encoded.encode("utf-8")).hexdigest()

    def check_index(self, j: int) -> None:
        if not 0 <= j < self.size:
            raise ValidationError(
                message=f"example index {j} is outside [0, {self.size})",
                error_code=ErrorCode.DIMENSION_MISMATCH,
                field_name="example_index",
                provided_value=j,
            )


class PosteriorSampler(BaseRepository):
    """
    Seeded source of hypothesis handles H_t ~ rho.

    Draw t must be a deterministic function of (seed, t) alone, and distinct
    draws must be independent and identically distributed.
    """

    @property
    @abstractmethod
    def seed(self) -> int:
        """64-bit master seed recorded in certificates."""
        pass

    @abstractmethod
    def draw(self, t: int) -> Any:
        """Hypothesis handle for draw index t."""
        pass

    @property
    def available_draws(self) -> Optional[int]:
        """Number of distinct draws this sampler can serve, None if unbounded."""
        return None


class LossOracle(BaseRepository):
    """Evaluation map (hypothesis, example token) -> loss in [0, 1]."""

    @abstractmethod
    def loss(self, hypothesis: Any, example: Hashable) -> float:
        """Loss of hypothesis on example; must lie in [0, 1]."""
        pass

    def checked_loss(self, hypothesis: Any, example: Hashable, t: int, j: int) -> Probability:
        """loss() validated into [0, 1]; out-of-range values are hard errors."""
        value = self.loss(hypothesis, example)
        try:
            return Probability(value, "loss")
        except ValidationError as e:
            raise ValidationError(
                message=f"loss oracle returned {value!r} for draw {t}, example {j}; "
                "losses must lie in [0, 1]",
                error_code=ErrorCode.LOSS_OUT_OF_RANGE,
                field_name="loss",
                provided_value=value,
                details={"draw_index": t, "example_index": j},
                remediation="Fix the loss function or wrap it in RescaledLossOracle",
            ) from e


class InMemoryDataset(DatasetHandle):
    """Dataset backed by an in-memory sequence of tokens."""

    def __init__(self, examples: Sequence[Hashable], description: Optional[Dict[str, Any]] = None):
        super().__init__()
        if len(examples) < 1:
            raise ValidationError(
                message="a dataset needs at least one example",
                error_code=ErrorCode.DIMENSION_MISMATCH,
                field_name="m",
                provided_value=0,
            )
        self.examples = tuple(examples)
        self._description = description

    @property
    def repository_name(self) -> str:
        return "InMemoryDataset"

    @property
    def thread_safe(self) -> bool:
        return True

    @property
    def size(self) -> int:
        return len(self.examples)

    def example(self, j: int) -> Hashable:
        self.check_index(j)
        return self.examples[j]

    def describe(self) -> Optional[Dict[str, Any]]:
        return self._description


class RescaledLossOracle(LossOracle):
    """Wraps an oracle whose losses lie in [low, high] and maps them onto [0, 1]."""

    def __init__(self, inner: LossOracle, low: float, high: float):
        super().__init__()
        self.inner = inner
        self.low = float(low)
        self.high = float(high)
        rescale_loss(self.low, self.low, self.high)

    @property
    def repository_name(self) -> str:
        return f"Rescaled({self.inner.repository_name})"

    @property
    def thread_safe(self) -> bool:
        return self.inner.thread_safe

    def loss(self, hypothesis: Any, example: Hashable) -> float:
        return rescale_loss(self.inner.loss(hypothesis, example), self.low, self.high)
