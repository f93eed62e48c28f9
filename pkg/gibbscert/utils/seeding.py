"""
Counter-based random streams.

Every random quantity in gibbscert is a pure function of a 64-bit seed and
up to three counter words, drawn through numpy's Philox bit generator: the
seed is the Philox key and the words fill the upper three 64-bit lanes of
the 256-bit counter. The lowest lane is left for Philox's own increments,
so streams that differ in any word never overlap. Draws can therefore be
evaluated in any order, or in parallel, and still reproduce bit for bit.
"""

from typing import Tuple

import numpy as np

from ..exceptions import ErrorCode, ValidationError

SEED_LIMIT = 2**64

# Stream tags (third counter word) keeping unrelated consumers apart.
POSTERIOR_STREAM = 0
SUBSAMPLE_STREAM = 1
COVERAGE_STREAM = 2
DATA_STREAM = 3


def validate_seed(seed: int, field_name: str = "seed") -> int:
    """Return seed unchanged if it is a 64-bit unsigned integer."""
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValidationError(
            message=f"{field_name} must be an integer",
            error_code=ErrorCode.SEED_MISSING,
            field_name=field_name,
            provided_value=seed,
        )
    if not 0 <= int(seed) < SEED_LIMIT:
        raise ValidationError(
            message=f"{field_name} must lie in [0, 2**64), got {seed}",
            error_code=ErrorCode.VALIDATION_FAILED,
            field_name=field_name,
            provided_value=seed,
        )
    return int(seed)


def _counter(words: Tuple[int, ...]) -> np.ndarray:
    if len(words) > 3:
        raise ValueError("at most three counter words are supported")
    for word in words:
        if not 0 <= word < SEED_LIMIT:
            raise ValueError(f"counter word {word} does not fit in 64 bits")
    lanes = [0, *words] + [0] * (3 - len(words))
    return np.array(lanes, dtype=np.uint64)


def counter_stream(seed: int, *words: int) -> np.random.Generator:
    """
    Independent generator for the block addressed by (seed, words).

    Args:
        seed: 64-bit master seed (the Philox key)
        words: Up to three counter words, e.g. (draw index, example index, stream tag)

    Returns:
        A numpy Generator positioned at the start of that block
    """
    key = validate_seed(seed)
    return np.random.Generator(np.random.Philox(key=key, counter=_counter(words)))


def counter_uniform(seed: int, *words: int) -> float:
    """First uniform [0, 1) variate of the block addressed by (seed, words)."""
    return float(counter_stream(seed, *words).random())
