"""
Canonical JSON encoding.

Keys are sorted, separators carry no whitespace and every float is written
with a fixed number of significant digits (17 by default, enough to round
trip any IEEE double). Byte equality of two encodings therefore implies
value equality, which is what golden-file tests and certificate audits
compare.
"""

import json
import math
import numbers
from datetime import datetime
from enum import Enum
from typing import Any, Optional

from ..config import get_settings
from ..exceptions import ErrorCode, ValidationError


def canonical_float(value: float, digits: Optional[int] = None) -> str:
    """Fixed-precision decimal text for a finite float."""
    digits = digits or get_settings().float_digits
    if not math.isfinite(value):
        raise ValidationError(
            message=f"non-finite value {value!r} cannot be written to canonical JSON",
            error_code=ErrorCode.VALIDATION_FAILED,
            provided_value=value,
        )
    return format(value, f".{digits}g")


def canonical_dumps(payload: Any, digits: Optional[int] = None) -> str:
    """
    Encode payload as canonical JSON text (no trailing newline).

    Args:
        payload: dicts, lists, strings, numbers, booleans, None, enums and datetimes
        digits: Significant digits for floats (settings default 17)

    Returns:
        The canonical encoding
    """
    digits = digits or get_settings().float_digits
    return _encode(payload, digits)


def _encode(value: Any, digits: int) -> str:
    if value is None or isinstance(value, (bool, str)):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, Enum):
        return _encode(value.value, digits)
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return canonical_float(float(value), digits)
    if isinstance(value, datetime):
        return json.dumps(value.isoformat())
    if isinstance(value, dict):
        items = sorted(
            ((str(key), item) for key, item in value.items()), key=lambda pair: pair[0]
        )
        return "{" + ",".join(
            f"{json.dumps(key, ensure_ascii=True)}:{_encode(item, digits)}"
            for key, item in items
        ) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_encode(item, digits) for item in value) + "]"
    raise TypeError(f"cannot encode {type(value).__name__} as canonical JSON")
