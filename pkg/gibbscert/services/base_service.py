"""
Base service class with common functionality for all services.
"""

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from ..config import Settings, get_settings
from ..exceptions import CertificationError, ErrorCode, IntegrityError

Item = TypeVar("Item")
Result = TypeVar("Result")


class BaseService(ABC):
    """Base class for all service layer implementations."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(
            f"{self.__class__.__module__}.{self.__class__.__name__}"
        )

    @property
    @abstractmethod
    def service_name(self) -> str:
        """Name of the service for logging and error reporting."""
        pass

    def log_operation(self, operation: str, details: Dict[str, Any] = None) -> None:
        """Log a service operation with structured data."""
        log_data = {
            "service": self.service_name,
            "operation": operation,
        }

        if details:
            log_data.update(details)

        self.logger.info(f"{self.service_name}.{operation}", extra=log_data)

    def map_ordered(
        self,
        function: Callable[[Item], Result],
        items: Sequence[Item],
        parallel: bool = True,
    ) -> List[Result]:
        """
        Apply function to every item, returning results in item order.

        Work is split into contiguous chunks handed to a thread pool when
        `parallel` is set and more than one worker is configured; otherwise it
        runs inline. Either way the output order is the input order.
        """
        workers = self.settings.max_workers
        if not parallel or workers <= 1 or len(items) < 2:
            return [function(item) for item in items]

        chunk_count = min(len(items), workers * 4)
        size = -(-len(items) // chunk_count)
        chunks = [items[start:start + size] for start in range(0, len(items), size)]

        def run_chunk(chunk: Sequence[Item]) -> List[Result]:
            return [function(item) for item in chunk]

        with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as executor:
            results: List[Result] = []
            for chunk_result in executor.map(run_chunk, chunks):
                results.extend(chunk_result)
        return results

    def handle_service_error(
        self, operation: str, error: Exception, **kwargs
    ) -> CertificationError:
        """
        Wrap an exception raised by caller-supplied code (sampler, dataset, oracle).

        Args:
            operation: The operation that failed
            error: The original exception
            **kwargs: Additional context

        Returns:
            The original error if it already is a CertificationError, else an IntegrityError
        """
        if isinstance(error, CertificationError):
            return error

        error_details = {
            "operation": operation,
            "original_error": str(error),
            "error_type": type(error).__name__,
            **kwargs,
        }

        self.logger.error(
            f"{self.service_name} operation failed: {operation}", extra=error_details
        )

        return IntegrityError(
            message=f"{self.service_name} operation '{operation}' failed: {error}",
            error_code=ErrorCode.EVALUATION_FAILED,
            details=error_details,
        )
