"""
Error handlers for the command-line front end.

This module provides centralized error handling for all gibbscert
exceptions and unexpected failures, ensuring a consistent error payload
on stderr and a stable exit-code taxonomy for scripts.
"""

import json
import logging
import sys
import traceback
from typing import TextIO

from pydantic import ValidationError as PydanticValidationError

from .base import CertificationError, ErrorCode

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


def exit_code_for(error: BaseException) -> int:
    """
    Map an exception to the documented process exit code.

    Args:
        error: The exception that ended the command

    Returns:
        2 for configuration/validation problems, 3 for I/O problems,
        4 for integrity failures and anything unexpected
    """
    if isinstance(error, PydanticValidationError):
        return EXIT_VALIDATION
    if isinstance(error, CertificationError):
        return _get_exit_code_for_error_code(error.error_code)
    return EXIT_INTERNAL


def handle_cli_exception(error: BaseException, stream: TextIO = None) -> int:
    """
    Log an exception, write its structured form to stderr and return the exit code.

    Args:
        error: The exception raised by a command
        stream: Where the JSON error payload goes (stderr by default)

    Returns:
        Process exit code
    """
    stream = stream or sys.stderr

    if isinstance(error, CertificationError):
        logger.error(
            f"{type(error).__name__}: {error.message}",
            extra={
                "error_code": error.error_code.value if error.error_code else None,
                "details": error.details,
            },
        )
        payload = error.to_dict()
    elif isinstance(error, PydanticValidationError):
        logger.warning(
            f"ValidationError: {error.error_count()} validation errors",
            extra={"errors": error.errors(include_url=False)},
        )
        payload = {
            "error": "Run configuration validation failed",
            "error_code": ErrorCode.VALIDATION_FAILED.value,
            "details": {
                "validation_errors": [
                    {
                        "field": " -> ".join(str(loc) for loc in item["loc"]),
                        "message": item["msg"],
                        "type": item["type"],
                    }
                    for item in error.errors(include_url=False)
                ]
            },
            "remediation": "Check the command-line flags against `--help`",
        }
    else:
        tb_str = "".join(
            traceback.format_exception(type(error), error, error.__traceback__)
        )
        logger.error(
            f"Unexpected error: {error}",
            extra={
                "exception_type": type(error).__name__,
                "traceback": tb_str,
            },
        )
        payload = {
            "error": "An unexpected internal error occurred",
            "error_code": "INTERNAL_ERROR",
            "details": {
                "exception_type": type(error).__name__,
                "exception_message": str(error),
            },
        }

    stream.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    return exit_code_for(error)


def _get_exit_code_for_error_code(error_code: ErrorCode) -> int:
    """
    Map error codes to process exit codes.

    Args:
        error_code: The gibbscert error code

    Returns:
        Exit code integer
    """
    if not error_code:
        return EXIT_INTERNAL

    if error_code.value.startswith(("CONFIG_", "VALIDATION_")):
        return EXIT_VALIDATION

    if error_code.value.startswith("IO_"):
        return EXIT_IO

    return EXIT_INTERNAL
