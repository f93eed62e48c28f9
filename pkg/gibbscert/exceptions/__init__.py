"""
Exception handling package for gibbscert.

This package provides standardized exception classes and error handling
utilities for consistent error management across the library and CLI.
"""

from .base import (CertificationError, ConfigurationError, DataIngestionError,
                   ErrorCode, IntegrityError, ValidationError)
from .handlers import (EXIT_INTERNAL, EXIT_IO, EXIT_OK, EXIT_VALIDATION,
                       exit_code_for, handle_cli_exception)

__all__ = [
    "CertificationError",
    "ConfigurationError",
    "DataIngestionError",
    "IntegrityError",
    "ValidationError",
    "ErrorCode",
    "EXIT_OK",
    "EXIT_VALIDATION",
    "EXIT_IO",
    "EXIT_INTERNAL",
    "exit_code_for",
    "handle_cli_exception",
]
