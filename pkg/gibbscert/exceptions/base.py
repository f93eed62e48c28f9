"""
Base exception classes for gibbscert.

This module provides a standardized exception hierarchy with enhanced
error information including details, remediation suggestions, and
structured error codes. The code families double as the CLI exit-code
taxonomy (see handlers.py).
"""

from enum import Enum
from typing import Any, Dict, Optional


class ErrorCode(Enum):
    """Standardized error codes for different types of failures."""

    # Configuration errors (1xxx)
    CONFIG_INVALID = "CONFIG_1001"
    CONFIG_REQUIRED = "CONFIG_1002"

    # Validation errors (3xxx)
    VALIDATION_FAILED = "VALIDATION_3001"
    PROBABILITY_OUT_OF_RANGE = "VALIDATION_3002"
    SLACK_INVALID = "VALIDATION_3003"
    DELTA_OUT_OF_RANGE = "VALIDATION_3004"
    LOSS_OUT_OF_RANGE = "VALIDATION_3005"
    PREMISE_VIOLATED = "VALIDATION_3006"
    DIMENSION_MISMATCH = "VALIDATION_3007"
    MATRIX_MALFORMED = "VALIDATION_3008"
    SEED_MISSING = "VALIDATION_3009"

    # I/O errors (5xxx)
    FILE_NOT_FOUND = "IO_5001"
    FILE_UNREADABLE = "IO_5002"
    FILE_UNWRITABLE = "IO_5003"

    # Integrity errors (6xxx)
    BOUND_MISMATCH = "INTEGRITY_6001"
    CERTIFICATE_INCONSISTENT = "INTEGRITY_6002"
    SCHEMA_MISMATCH = "INTEGRITY_6003"
    CHECK_FAILED = "INTEGRITY_6004"
    EVALUATION_FAILED = "INTEGRITY_6005"


class CertificationError(Exception):
    """
    Base exception for all gibbscert errors.

    Provides structured error information including error codes,
    details, and remediation suggestions to help users resolve issues.
    """

    def __init__(
        self,
        message: str,
        error_code: ErrorCode = None,
        details: Dict[str, Any] = None,
        remediation: str = None,
    ):
        """
        Initialize a gibbscert exception.

        Args:
            message: Human-readable error message
            error_code: Standardized error code for the error type
            details: Additional structured information about the error
            remediation: Suggested steps to resolve the issue
        """
        self.message = message
        self.error_code = error_code
        self.details = details or {}
        self.remediation = remediation
        super().__init__(message)

    def to_dict(self) -> Dict[str, Any]:
        """Convert exception to dictionary format for CLI error output."""
        result = {
            "error": self.message,
            "error_code": self.error_code.value if self.error_code else None,
            "details": self.details,
        }

        if self.remediation:
            result["remediation"] = self.remediation

        return result


class ConfigurationError(CertificationError):
    """Configuration-related errors."""

    def __init__(
        self,
        message: str,
        error_code: ErrorCode = ErrorCode.CONFIG_INVALID,
        config_key: str = None,
        expected_value: str = None,
        **kwargs
    ):
        details = kwargs.pop("details", None) or {}
        if config_key:
            details["config_key"] = config_key
        if expected_value:
            details["expected_value"] = expected_value

        super().__init__(
            message=message, error_code=error_code, details=details, **kwargs
        )


class ValidationError(CertificationError):
    """Input validation errors."""

    def __init__(
        self,
        message: str,
        error_code: ErrorCode = ErrorCode.VALIDATION_FAILED,
        field_name: str = None,
        provided_value: Any = None,
        **kwargs
    ):
        details = kwargs.pop("details", None) or {}
        if field_name:
            details["field"] = field_name
        if provided_value is not None:
            details["provided_value"] = str(provided_value)

        super().__init__(
            message=message, error_code=error_code, details=details, **kwargs
        )


class DataIngestionError(CertificationError):
    """File access errors while reading inputs or writing artifacts."""

    def __init__(
        self,
        message: str,
        error_code: ErrorCode = ErrorCode.FILE_UNREADABLE,
        path: str = None,
        **kwargs
    ):
        details = kwargs.pop("details", None) or {}
        if path:
            details["path"] = str(path)

        super().__init__(
            message=message, error_code=error_code, details=details, **kwargs
        )


class IntegrityError(CertificationError):
    """A stored or computed artifact disagrees with its own recomputation."""

    def __init__(
        self,
        message: str,
        error_code: ErrorCode = ErrorCode.BOUND_MISMATCH,
        expected: Any = None,
        actual: Any = None,
        details: Optional[Dict[str, Any]] = None,
        remediation: str = None,
    ):
        details = details or {}
        if expected is not None:
            details["expected"] = repr(expected)
        if actual is not None:
            details["actual"] = repr(actual)

        super().__init__(
            message=message,
            error_code=error_code,
            details=details,
            remediation=remediation,
        )
