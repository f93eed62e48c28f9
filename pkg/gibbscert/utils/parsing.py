"""
Input parsing utilities for command-line values.

Turns the comma-separated lists and timestamps accepted on the command line
into validated Python values, raising ValidationError with the offending
position instead of guessing.
"""

import math
from datetime import datetime, timezone
from typing import List, Optional

from ..exceptions import ErrorCode, ValidationError


class InputParser:
    """Centralized command-line value parsing."""

    # Longest list accepted from a single flag; larger inputs belong in a file.
    MAX_LIST_LENGTH = 1_000_000

    @staticmethod
    def parse_probability_list(text: str, field_name: str) -> List[float]:
        """
        Parse "0.2,0.6,..." into a list of floats in [0, 1].

        Args:
            text: Comma-separated decimals
            field_name: Flag name used in error messages

        Returns:
            The parsed values, in order
        """
        if text is None or not text.strip():
            raise ValidationError(
                message=f"{field_name} must be a non-empty comma-separated list",
                field_name=field_name,
                provided_value=text,
            )

        items = [item.strip() for item in text.split(",")]
        if len(items) > InputParser.MAX_LIST_LENGTH:
            raise ValidationError(
                message=f"{field_name} has more than {InputParser.MAX_LIST_LENGTH} entries",
                field_name=field_name,
                remediation="Put long lists in a file",
            )

        values = []
        for position, item in enumerate(items, start=1):
            try:
                value = float(item)
            except ValueError:
                raise ValidationError(
                    message=f"{field_name} entry {position} is not a number: {item!r}",
                    field_name=field_name,
                    provided_value=item,
                )
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise ValidationError(
                    message=f"{field_name} entry {position} = {value!r} is outside [0, 1]",
                    error_code=ErrorCode.PROBABILITY_OUT_OF_RANGE,
                    field_name=field_name,
                    provided_value=value,
                )
            values.append(value)
        return values

    @staticmethod
    def parse_created_at(text: Optional[str], source_date_epoch: int) -> datetime:
        """
        Resolve the certificate timestamp.

        "now" stamps wall-clock UTC time; an ISO-8601 string is used as given
        (naive values are taken as UTC); None falls back to source_date_epoch.
        """
        if text is None:
            return datetime.fromtimestamp(source_date_epoch, tz=timezone.utc)
        if text.strip().lower() == "now":
            return datetime.now(timezone.utc)
        try:
            stamp = datetime.fromisoformat(text.strip())
        except ValueError:
            raise ValidationError(
                message=f"--created-at must be ISO-8601 or 'now', got {text!r}",
                field_name="created_at",
                provided_value=text,
            )
        if stamp.tzinfo is None:
            stamp = stamp.replace(tzinfo=timezone.utc)
        return stamp.astimezone(timezone.utc)


# Convenience functions for common operations
def parse_probability_list(text: str, field_name: str) -> List[float]:
    """Convenience function for probability list parsing"""
    return InputParser.parse_probability_list(text, field_name)


def parse_created_at(text: Optional[str], source_date_epoch: int) -> datetime:
    """Convenience function for timestamp resolution"""
    return InputParser.parse_created_at(text, source_date_epoch)
