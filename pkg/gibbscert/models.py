from datetime import datetime, timezone
from enum import Enum
from math import fsum
from pathlib import Path
from typing import Annotated, List, Optional

from pydantic import (BaseModel, ConfigDict, Field, field_validator,
                      model_validator)

Seed = Annotated[int, Field(ge=0, lt=2**64)]


class CheckStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"
    SKIPPED = "skipped"


class EstimatorMethod(str, Enum):
    CLASSIC = "classic"
    FRESH = "fresh"
    TESTSET = "testset"
    SUBSAMPLED = "subsampled"


class SyntheticKind(str, Enum):
    BERNOULLI_PER_EXAMPLE = "bernoulli-per-example"
    POINT_MASS = "point-mass"
    BETA_LOSS = "beta-loss"


class RunCommand(str, Enum):
    CERTIFY_CLASSIC = "certify-classic"
    CERTIFY_FRESH = "certify-fresh"
    CERTIFY_TESTSET = "certify-testset"
    CERTIFY_SUBSAMPLED = "certify-subsampled"
    SIMULATE_COVERAGE = "simulate-coverage"
    VERIFY_THEOREM3 = "verify-theorem3"
    BUDGET_COMPARE = "budget-compare"
    KLINV = "klinv"
    VERIFY_CERTIFICATE = "verify-certificate"
    LAB = "lab"


CERTIFY_COMMANDS = {
    RunCommand.CERTIFY_CLASSIC: EstimatorMethod.CLASSIC,
    RunCommand.CERTIFY_FRESH: EstimatorMethod.FRESH,
    RunCommand.CERTIFY_TESTSET: EstimatorMethod.TESTSET,
    RunCommand.CERTIFY_SUBSAMPLED: EstimatorMethod.SUBSAMPLED,
}


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class Certificate(BaseModel):
    """High-probability upper bound on a Gibbs risk, with enough provenance to audit it."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    schema_version: str
    method: EstimatorMethod
    empirical_mean: float = Field(ge=0.0, le=1.0)
    T: int = Field(ge=1)
    delta: float = Field(gt=0.0, lt=1.0)
    slack: float = Field(ge=0.0)
    bound: float = Field(ge=0.0, le=1.0)
    pinsker_bound: float = Field(ge=0.0, le=1.0)
    tolerance: float = Field(gt=0.0)
    n_passes: int = Field(ge=0)
    m: int = Field(ge=1)
    n_evaluations: int = Field(ge=1)
    seed: Seed
    subsample_seed: Optional[Seed] = None
    held_out: bool = False
    data_digest: Optional[str] = None
    created_at: datetime

    @field_validator("created_at")
    @classmethod
    def _utc(cls, value: datetime) -> datetime:
        if value.tzinfo is None:
            return value.replace(tzinfo=timezone.utc)
        return value.astimezone(timezone.utc)


class HeterogeneousBernoulliSpec(BaseModel):
    """Independent Bernoulli variables X_1..X_T with individual means p_1..p_T."""

    model_config = ConfigDict(frozen=True)

    means: List[float] = Field(min_length=1)

    @field_validator("means")
    @classmethod
    def _means_in_unit_interval(cls, value: List[float]) -> List[float]:
        for index, mean in enumerate(value):
            if not 0.0 <= mean <= 1.0:
                raise ValueError(f"mean #{index} = {mean!r} is outside [0, 1]")
        return value

    @property
    def T(self) -> int:
        return len(self.means)

    @classmethod
    def homogeneous(cls, mean: float, T: int) -> "HeterogeneousBernoulliSpec":
        return cls(means=[mean] * T)


class TailReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float = Field(ge=0.0, le=1.0)
    exact_tail: float = Field(ge=0.0, le=1.0)
    bound: float = Field(ge=0.0, le=1.0)
    satisfied: bool


class CoverageReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    trials: int = Field(ge=1)
    failures: int = Field(ge=0)
    delta: float = Field(gt=0.0, lt=1.0)
    failure_rate: float = Field(ge=0.0, le=1.0)
    z_slack: float
    true_mean: float = Field(ge=0.0, le=1.0)
    mean_bound: float = Field(ge=0.0, le=1.0)
    pinsker_failures: int = Field(ge=0)
    T: int = Field(ge=1)
    seed: Seed
    method: Optional[EstimatorMethod] = None

    @model_validator(mode="after")
    def _failures_within_trials(self) -> "CoverageReport":
        if self.failures > self.trials or self.pinsker_failures > self.trials:
            raise ValueError("failures cannot exceed trials")
        return self

    @property
    def acceptance_threshold(self) -> float:
        """delta plus three binomial standard errors."""
        return self.delta + 3.0 * (self.delta * (1.0 - self.delta) / self.trials) ** 0.5

    @property
    def within_tolerance(self) -> bool:
        return self.failure_rate <= self.acceptance_threshold


class BudgetComparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    n_classic: int = Field(ge=1)
    delta: float = Field(gt=0.0, lt=1.0)
    q: float = Field(ge=0.0, le=1.0)
    total_evaluations: int = Field(ge=1)
    slack_classic: float
    slack_fresh_equal_budget: float
    bound_classic: float
    bound_fresh: float
    pass_ratio: int
    fresh_passes_for_equal_slack: int


class KlInverseResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: float
    c: float
    bound: float
    pinsker_bound: float
    tolerance: float


class SyntheticPosteriorSpec(BaseModel):
    """Simulation stand-in for a posterior and loss: per-example mean losses p_1..p_m."""

    model_config = ConfigDict(frozen=True)

    kind: SyntheticKind = SyntheticKind.BERNOULLI_PER_EXAMPLE
    means: List[float] = Field(min_length=1)
    concentration: float = Field(default=10.0, gt=0.0)

    @field_validator("means")
    @classmethod
    def _means_in_unit_interval(cls, value: List[float]) -> List[float]:
        for index, mean in enumerate(value):
            if not 0.0 <= mean <= 1.0:
                raise ValueError(f"mean #{index} = {mean!r} is outside [0, 1]")
        return value

    @property
    def m(self) -> int:
        return len(self.means)

    @property
    def gibbs_risk(self) -> float:
        """The in-sample Gibbs risk L_s(rho) this spec simulates."""
        return fsum(self.means) / len(self.means)

    @classmethod
    def constant(
        cls, mean: float, m: int, kind: SyntheticKind = SyntheticKind.BERNOULLI_PER_EXAMPLE
    ) -> "SyntheticPosteriorSpec":
        return cls(kind=kind, means=[mean] * m)


_REQUIRED_FIELDS = {
    RunCommand.KLINV: ("q", "c"),
    RunCommand.BUDGET_COMPARE: ("m", "n", "q"),
    RunCommand.VERIFY_THEOREM3: ("spec_means", "grid"),
    RunCommand.VERIFY_CERTIFICATE: ("input",),
}

_FLAG_NAMES = {"spec_means": "--spec", "input": "--input"}


class RunConfig(BaseModel):
    """One validated CLI invocation."""

    model_config = ConfigDict(frozen=True)

    subcommand: RunCommand
    delta: float = Field(default=0.05, gt=0.0, lt=1.0)
    n: Optional[int] = Field(default=None, ge=1)
    T: Optional[int] = Field(default=None, ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    seed: Optional[Seed] = None
    subsample_seed: Optional[Seed] = None
    input: Optional[Path] = None
    synthetic: Optional[SyntheticPosteriorSpec] = None
    output: Optional[Path] = None
    format: OutputFormat = OutputFormat.JSON
    trials: Optional[int] = Field(default=None, ge=1)
    q: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    c: Optional[float] = Field(default=None, ge=0.0)
    spec_means: Optional[List[float]] = None
    grid: Optional[List[float]] = None
    held_out: bool = True
    created_at: Optional[datetime] = None
    estimator: Optional[EstimatorMethod] = None
    quick: bool = False

    @model_validator(mode="after")
    def _check_inputs(self) -> "RunConfig":
        if self.subcommand in CERTIFY_COMMANDS:
            if (self.input is None) == (self.synthetic is None):
                raise ValueError(
                    "exactly one of a loss-matrix input file or a synthetic spec is required"
                )
            if self.subcommand == RunCommand.CERTIFY_SUBSAMPLED:
                if self.T is None:
                    raise ValueError("certify-subsampled requires --T")
            elif self.n is None:
                raise ValueError(f"{self.subcommand.value} requires --n")
        required = _REQUIRED_FIELDS.get(self.subcommand, ())
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            flags = ", ".join(_FLAG_NAMES.get(name, f"--{name}") for name in missing)
            raise ValueError(f"{self.subcommand.value} requires {flags}")
        if self.subcommand == RunCommand.SIMULATE_COVERAGE:
            if self.estimator is None and self.spec_means is None:
                raise ValueError("simulate-coverage requires --spec, or --method with a synthetic posterior")
            if self.estimator is not None and (self.synthetic is None or self.n is None):
                raise ValueError("estimator coverage requires a synthetic posterior and --n")
        return self

    @property
    def method(self) -> Optional[EstimatorMethod]:
        return CERTIFY_COMMANDS.get(self.subcommand)
