"""
Binary KL divergence, its one-sided variant and a certified upper inversion.

Every function here is a pure function of its arguments. Inputs outside
their domain raise ValidationError instead of being clamped, because a
silently clamped loss would turn into an invalid certificate downstream.
"""

import math
from typing import Any, Optional

import numpy as np
from scipy.special import xlog1py

from .config import get_settings
from .exceptions import ConfigurationError, ErrorCode, ValidationError

# Largest overshoot kl(q, bound) - c accepted once the bracket is narrow.
_KL_RESOLUTION = 1e-10


class Probability(float):
    """A real number in [0, 1]; construction fails for anything else (NaN included)."""

    def __new__(cls, value: Any, field_name: str = "probability"):
        if type(value) is cls:
            return value
        try:
            number = float(value)
        except (TypeError, ValueError) as e:
            raise ValidationError(
                message=f"{field_name} must be a real number",
                error_code=ErrorCode.PROBABILITY_OUT_OF_RANGE,
                field_name=field_name,
                provided_value=value,
            ) from e
        if not 0.0 <= number <= 1.0:
            raise ValidationError(
                message=f"{field_name} must lie in [0, 1], got {number!r}",
                error_code=ErrorCode.PROBABILITY_OUT_OF_RANGE,
                field_name=field_name,
                provided_value=number,
                remediation="Losses and means must already be on the [0, 1] scale; "
                "use rescale_loss for losses bounded in another interval",
            )
        return super().__new__(cls, number)


class SlackBudget(float):
    """The confidence term c = log(1/delta)/T, in nats; finite and nonnegative."""

    def __new__(cls, value: Any, field_name: str = "slack"):
        if type(value) is cls:
            return value
        try:
            number = float(value)
        except (TypeError, ValueError) as e:
            raise ValidationError(
                message=f"{field_name} must be a real number",
                error_code=ErrorCode.SLACK_INVALID,
                field_name=field_name,
                provided_value=value,
            ) from e
        if not (math.isfinite(number) and number >= 0.0):
            raise ValidationError(
                message=f"{field_name} must be finite and nonnegative, got {number!r}",
                error_code=ErrorCode.SLACK_INVALID,
                field_name=field_name,
                provided_value=number,
            )
        return super().__new__(cls, number)


def validate_delta(delta: Any) -> float:
    """Return delta as a float, raising unless it lies in the open interval (0, 1)."""
    try:
        value = float(delta)
    except (TypeError, ValueError) as e:
        raise ValidationError(
            message="delta must be a real number",
            error_code=ErrorCode.DELTA_OUT_OF_RANGE,
            field_name="delta",
            provided_value=delta,
        ) from e
    if not 0.0 < value < 1.0:
        raise ValidationError(
            message=f"delta must lie in (0, 1), got {value!r}",
            error_code=ErrorCode.DELTA_OUT_OF_RANGE,
            field_name="delta",
            provided_value=value,
        )
    return value


def slack_budget(delta: float, summands: int) -> SlackBudget:
    """
    Confidence term log(1/delta)/T for T independent summands.

    Args:
        delta: Failure probability in (0, 1)
        summands: Number of independent summands T (>= 1)

    Returns:
        The slack c as a SlackBudget
    """
    delta = validate_delta(delta)
    if isinstance(summands, bool) or int(summands) != summands or summands < 1:
        raise ValidationError(
            message=f"number of summands must be a positive integer, got {summands!r}",
            error_code=ErrorCode.VALIDATION_FAILED,
            field_name="T",
            provided_value=summands,
        )
    return SlackBudget(-math.log(delta) / int(summands))


def _kl(q: float, p: float) -> float:
    # log1p form keeps precision when p is near q or near 1.
    if q == p:
        return 0.0
    if p == 0.0 or p == 1.0:
        return math.inf
    value = float(xlog1py(q, (q - p) / p) + xlog1py(1.0 - q, (p - q) / (1.0 - p)))
    # Rounding can leave a negative residue of a few ulps when p is close to q.
    return value if value > 0.0 else 0.0


def kl(q: float, p: float) -> float:
    """
    Bernoulli KL divergence kl(q, p) = q log(q/p) + (1-q) log((1-q)/(1-p)).

    Uses 0 log 0 = 0 and returns +inf when p is 0 or 1 and q differs from p.
    """
    return _kl(Probability(q, "q"), Probability(p, "p"))


def kl_plus(q: float, p: float) -> float:
    """One-sided kl: kl(q, p) when q <= p, otherwise 0. Non-increasing in q."""
    q = Probability(q, "q")
    p = Probability(p, "p")
    return _kl(q, p) if q <= p else 0.0


def kl_inverse_upper(
    q: float,
    c: float,
    tol: Optional[float] = None,
    max_iterations: Optional[int] = None,
) -> Probability:
    """
    Certified upper inverse sup{p in [0, 1] : kl(q, p) <= c}.

    Bisects p on [q, 1] keeping the invariant kl(q, high) > c and returns the
    upper bracket end, so the result is never below the true supremum. The
    bracket is narrowed until it is at most ``tol`` wide and kl(q, high)
    overshoots c by at most 1e-10.

    When c >= kl(q, 1 - tol) the supremum lies within tol of 1 and exactly 1
    is returned. Near 1 the overshoot bound can be unattainable in double
    precision; bisection then runs until the bracket is two adjacent doubles
    (see round_trip_tolerance).

    Args:
        q: Empirical mean in [0, 1]
        c: Slack budget (nats), finite and nonnegative
        tol: Bracket width at which bisection may stop (settings default 1e-12)
        max_iterations: Cap on bisection steps (settings default)

    Returns:
        The upper bound as a Probability
    """
    q = Probability(q, "q")
    c = SlackBudget(c, "c")
    settings = get_settings()
    tol = settings.inversion_tolerance if tol is None else float(tol)
    max_iterations = (
        settings.inversion_max_iterations if max_iterations is None else max_iterations
    )
    if not 0.0 < tol < 0.5:
        raise ConfigurationError(
            message=f"inversion tolerance must lie in (0, 0.5), got {tol!r}",
            config_key="inversion_tolerance",
            expected_value="0 < tol < 0.5",
        )

    if c == 0.0 or q == 1.0:
        return q
    if c >= _kl(q, 1.0 - tol):
        return Probability(1.0)

    low, high = float(q), 1.0
    for _ in range(max_iterations):
        mid = 0.5 * (low + high)
        if mid <= low or mid >= high:
            break
        if high - low <= tol and _kl(q, high) - c <= _KL_RESOLUTION:
            break
        if _kl(q, mid) <= c:
            low = mid
        else:
            high = mid
    return Probability(high, "bound")


def round_trip_tolerance(q: float, bound: float) -> float:
    """
    Largest kl(q, bound) - c a kl_inverse_upper result may carry.

    Either the 1e-10 overshoot accepted by the stopping rule, or the rise of
    kl(q, .) across the one double below ``bound`` when the bracket shrank to
    adjacent doubles first.
    """
    q = Probability(q, "q")
    bound = Probability(bound, "bound")
    if bound <= q:
        return _KL_RESOLUTION
    below = max(float(q), float(np.nextafter(bound, 0.0)))
    return max(_KL_RESOLUTION, _kl(q, bound) - _kl(q, below))


def pinsker_relaxation(q: float, c: float) -> Probability:
    """Square-root ceiling min(1, q + sqrt(c/2)) that dominates kl_inverse_upper."""
    q = Probability(q, "q")
    c = SlackBudget(c, "c")
    return Probability(min(1.0, q + math.sqrt(c / 2.0)))


def rescale_loss(value: float, low: float, high: float) -> Probability:
    """
    Map a loss bounded in [low, high] onto [0, 1].

    Never applied implicitly; callers with losses on another scale wrap
    their oracle explicitly (see RescaledLossOracle).
    """
    low, high, value = float(low), float(high), float(value)
    if not (math.isfinite(low) and math.isfinite(high) and high > low):
        raise ValidationError(
            message=f"loss range must satisfy low < high, got [{low!r}, {high!r}]",
            error_code=ErrorCode.VALIDATION_FAILED,
            field_name="loss_range",
            provided_value=(low, high),
        )
    if not low <= value <= high:
        raise ValidationError(
            message=f"loss {value!r} lies outside its declared range [{low!r}, {high!r}]",
            error_code=ErrorCode.LOSS_OUT_OF_RANGE,
            field_name="loss",
            provided_value=value,
        )
    return Probability(min(1.0, (value - low) / (high - low)), "loss")
