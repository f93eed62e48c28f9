"""
Certification procedures for the Gibbs risk of a posterior.

Four estimators share one evaluation engine:

- classic: n posterior draws, each scored on the whole dataset (T = n)
- fresh: a new draw for every (pass, example) pair, draw t = i*m + j (T = n*m)
- testset: the fresh discipline over held-out i.i.d. examples (T = n*m)
- subsampled: T draws each scored on one example picked uniformly with replacement

The empirical mean is accumulated as one correctly rounded partial sum per
fixed block (a pass, or a fixed-size block of sub-samples) and a correctly
rounded sum of the partials, so the result does not depend on thread count
or scheduling.
"""

import math
from datetime import datetime, timezone
from math import fsum
from typing import Callable, Hashable, List, Optional, Sequence, Union

from ..exceptions import (CertificationError, ErrorCode, IntegrityError,
                          ValidationError)
from ..kl_core import (Probability, kl_inverse_upper, pinsker_relaxation,
                       slack_budget, validate_delta)
from ..models import Certificate, EstimatorMethod
from ..repositories.base_repository import (DatasetHandle, InMemoryDataset,
                                            LossOracle, PosteriorSampler)
from ..utils.seeding import SUBSAMPLE_STREAM, counter_stream, validate_seed
from .base_service import BaseService

# Sub-samples per partial sum; fixed so partial sums never depend on worker count.
SUBSAMPLE_BLOCK = 1024


def _positive_int(value: int, field_name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValidationError(
            message=f"{field_name} must be a positive integer, got {value!r}",
            error_code=ErrorCode.VALIDATION_FAILED,
            field_name=field_name,
            provided_value=value,
        )
    return value


def passes_for_slack(m: int, target_slack: float, delta: float) -> int:
    """
    Smallest number of fresh-estimator passes n with log(1/delta)/(n*m) <= target_slack.

    Args:
        m: Dataset size
        target_slack: Slack to reach (> 0), e.g. a classic estimator's slack
        delta: Failure probability in (0, 1)

    Returns:
        The pass count n (>= 1)
    """
    m = _positive_int(m, "m")
    delta = validate_delta(delta)
    if not (math.isfinite(target_slack) and target_slack > 0.0):
        raise ValidationError(
            message=f"target slack must be finite and positive, got {target_slack!r}",
            error_code=ErrorCode.SLACK_INVALID,
            field_name="target_slack",
            provided_value=target_slack,
        )
    passes = max(1, math.ceil(-math.log(delta) / (m * target_slack)))
    # The float estimate can be off by one either way.
    while passes > 1 and slack_budget(delta, (passes - 1) * m) <= target_slack:
        passes -= 1
    while slack_budget(delta, passes * m) > target_slack:
        passes += 1
    return passes


class EstimatorService(BaseService):
    """Produces and audits Gibbs-risk certificates."""

    @property
    def service_name(self) -> str:
        return "EstimatorService"

    def estimate_classic(
        self,
        sampler: PosteriorSampler,
        data: DatasetHandle,
        loss: LossOracle,
        n: int,
        delta: float,
        created_at: Optional[datetime] = None,
    ) -> Certificate:
        """
        Multi-pass certificate: n draws, each evaluated on all m examples.

        The empirical mean is (1/n) sum_i L_s(H_i); the slack is log(1/delta)/n.
        """
        n = _positive_int(n, "n")
        delta = validate_delta(delta)
        m = data.size
        self._require_draws(sampler, n)
        tokens = self._tokens(data)

        def one_pass(i: int) -> float:
            hypothesis = sampler.draw(i)
            return fsum(
                loss.checked_loss(hypothesis, token, i, j) for j, token in enumerate(tokens)
            )

        partials = self._partial_sums(EstimatorMethod.CLASSIC, one_pass, range(n), sampler, data, loss)
        return self._certify(
            method=EstimatorMethod.CLASSIC,
            total=fsum(partials),
            evaluations=n * m,
            summands=n,
            delta=delta,
            n_passes=n,
            sampler=sampler,
            data=data,
            created_at=created_at,
        )

    def estimate_fresh(
        self,
        sampler: PosteriorSampler,
        data: DatasetHandle,
        loss: LossOracle,
        n: int,
        delta: float,
        created_at: Optional[datetime] = None,
    ) -> Certificate:
        """
        Fresh-sample certificate: pass i scores example j with its own draw t = i*m + j.

        Same n*m loss evaluations as the classic estimator, but T = n*m
        independent summands, so the slack is m times smaller.
        """
        return self._fresh_discipline(
            EstimatorMethod.FRESH, sampler, data, loss, n, delta, False, created_at
        )

    def estimate_testset(
        self,
        sampler: PosteriorSampler,
        datastream: Union[DatasetHandle, Sequence[Hashable]],
        loss: LossOracle,
        n: int,
        delta: float,
        held_out: bool = True,
        created_at: Optional[datetime] = None,
    ) -> Certificate:
        """
        Out-of-sample certificate for L(rho) over m fresh i.i.d. examples Z_0..Z_{m-1}.

        The examples must be independent of whatever produced the posterior;
        `held_out` records the caller's assertion of that in the certificate.
        """
        if not isinstance(datastream, DatasetHandle):
            datastream = InMemoryDataset(datastream)
        if not held_out:
            self.logger.warning(
                "Test-set certificate requested on data not declared held out; "
                "the bound certifies L(rho) only if the examples are fresh",
                extra={"service": self.service_name},
            )
        return self._fresh_discipline(
            EstimatorMethod.TESTSET, sampler, datastream, loss, n, delta, held_out, created_at
        )

    def estimate_subsampled(
        self,
        sampler: PosteriorSampler,
        data: DatasetHandle,
        loss: LossOracle,
        T: int,
        delta: float,
        subsample_seed: int,
        created_at: Optional[datetime] = None,
    ) -> Certificate:
        """
        Sub-sampled certificate for L_s(rho): summand t is loss(H_t, z_{J_t}).

        J_0..J_{T-1} are drawn uniformly with replacement from the m examples
        using `subsample_seed`, i.e. the test-set construction with the data
        distribution Uniform(s), whose mean is the in-sample Gibbs risk.
        """
        T = _positive_int(T, "T")
        delta = validate_delta(delta)
        subsample_seed = validate_seed(subsample_seed, "subsample_seed")
        m = data.size
        self._require_draws(sampler, T)
        indices = counter_stream(subsample_seed, 0, 0, SUBSAMPLE_STREAM).integers(0, m, size=T)
        picks = [int(j) for j in indices]

        def block_sum(start: int) -> float:
            stop = min(start + SUBSAMPLE_BLOCK, T)
            return fsum(
                loss.checked_loss(sampler.draw(t), data.example(picks[t]), t, picks[t])
                for t in range(start, stop)
            )

        partials = self._partial_sums(
            EstimatorMethod.SUBSAMPLED, block_sum, range(0, T, SUBSAMPLE_BLOCK), sampler, data, loss
        )
        return self._certify(
            method=EstimatorMethod.SUBSAMPLED,
            total=fsum(partials),
            evaluations=T,
            summands=T,
            delta=delta,
            n_passes=0,
            sampler=sampler,
            data=data,
            subsample_seed=subsample_seed,
            created_at=created_at,
        )

    def recompute_bound(self, certificate: Certificate) -> Probability:
        """
        Recompute kl_inverse_upper(empirical_mean, slack) and compare bit for bit.

        Raises:
            IntegrityError: If the stored bound differs from the recomputed one
        """
        bound = kl_inverse_upper(
            certificate.empirical_mean, certificate.slack, tol=certificate.tolerance
        )
        if bound != certificate.bound:
            raise IntegrityError(
                message="stored bound does not match its recomputation; the certificate "
                "was altered or produced by an incompatible version",
                error_code=ErrorCode.BOUND_MISMATCH,
                expected=float(bound),
                actual=certificate.bound,
            )
        return bound

    def verify_certificate(self, certificate: Certificate) -> Probability:
        """
        Full audit: schema version, summand bookkeeping, slack formula and bound.

        Returns:
            The verified bound

        Raises:
            IntegrityError: On the first inconsistency found
        """
        expected_version = self.settings.certificate_schema_version
        if certificate.schema_version != expected_version:
            raise IntegrityError(
                message=f"certificate schema version {certificate.schema_version!r} "
                f"is not the supported version {expected_version!r}",
                error_code=ErrorCode.SCHEMA_MISMATCH,
                expected=expected_version,
                actual=certificate.schema_version,
            )

        method = certificate.method
        if method == EstimatorMethod.CLASSIC:
            expected_T = certificate.n_passes
            expected_evaluations = certificate.n_passes * certificate.m
        elif method in (EstimatorMethod.FRESH, EstimatorMethod.TESTSET):
            expected_T = certificate.n_passes * certificate.m
            expected_evaluations = expected_T
        else:
            expected_T = certificate.n_evaluations
            expected_evaluations = certificate.T
            if certificate.subsample_seed is None:
                raise IntegrityError(
                    message="sub-sampled certificate lacks its subsample_seed",
                    error_code=ErrorCode.CERTIFICATE_INCONSISTENT,
                )
        if certificate.T != expected_T or certificate.n_evaluations != expected_evaluations:
            raise IntegrityError(
                message=f"{method.value} certificate has inconsistent T/evaluation counts",
                error_code=ErrorCode.CERTIFICATE_INCONSISTENT,
                expected={"T": expected_T, "n_evaluations": expected_evaluations},
                actual={"T": certificate.T, "n_evaluations": certificate.n_evaluations},
            )

        slack = slack_budget(certificate.delta, certificate.T)
        if not math.isclose(slack, certificate.slack, rel_tol=4 * 2.0**-52, abs_tol=0.0):
            raise IntegrityError(
                message="stored slack is not log(1/delta)/T",
                error_code=ErrorCode.CERTIFICATE_INCONSISTENT,
                expected=float(slack),
                actual=certificate.slack,
            )

        pinsker = pinsker_relaxation(certificate.empirical_mean, certificate.slack)
        if pinsker != certificate.pinsker_bound:
            raise IntegrityError(
                message="stored pinsker_bound does not match its recomputation",
                error_code=ErrorCode.CERTIFICATE_INCONSISTENT,
                expected=float(pinsker),
                actual=certificate.pinsker_bound,
            )

        bound = self.recompute_bound(certificate)
        self.log_operation("verify_certificate", {"method": method.value, "bound": float(bound)})
        return bound

    def _fresh_discipline(
        self,
        method: EstimatorMethod,
        sampler: PosteriorSampler,
        data: DatasetHandle,
        loss: LossOracle,
        n: int,
        delta: float,
        held_out: bool,
        created_at: Optional[datetime],
    ) -> Certificate:
        n = _positive_int(n, "n")
        delta = validate_delta(delta)
        m = data.size
        self._require_draws(sampler, n * m)
        tokens = self._tokens(data)

        def one_pass(i: int) -> float:
            offset = i * m
            return fsum(
                loss.checked_loss(sampler.draw(offset + j), token, offset + j, j)
                for j, token in enumerate(tokens)
            )

        partials = self._partial_sums(method, one_pass, range(n), sampler, data, loss)
        return self._certify(
            method=method,
            total=fsum(partials),
            evaluations=n * m,
            summands=n * m,
            delta=delta,
            n_passes=n,
            sampler=sampler,
            data=data,
            held_out=held_out,
            created_at=created_at,
        )

    def _certify(
        self,
        method: EstimatorMethod,
        total: float,
        evaluations: int,
        summands: int,
        delta: float,
        n_passes: int,
        sampler: PosteriorSampler,
        data: DatasetHandle,
        subsample_seed: Optional[int] = None,
        held_out: bool = False,
        created_at: Optional[datetime] = None,
    ) -> Certificate:
        empirical_mean = Probability(total / evaluations, "empirical_mean")
        slack = slack_budget(delta, summands)
        bound = kl_inverse_upper(empirical_mean, slack, tol=self.settings.inversion_tolerance)
        certificate = Certificate(
            schema_version=self.settings.certificate_schema_version,
            method=method,
            empirical_mean=empirical_mean,
            T=summands,
            delta=delta,
            slack=slack,
            bound=bound,
            pinsker_bound=pinsker_relaxation(empirical_mean, slack),
            tolerance=self.settings.inversion_tolerance,
            n_passes=n_passes,
            m=data.size,
            n_evaluations=evaluations,
            seed=sampler.seed,
            subsample_seed=subsample_seed,
            held_out=held_out,
            data_digest=data.digest(),
            created_at=created_at or datetime.now(timezone.utc),
        )
        self.log_operation(
            f"estimate_{method.value}",
            {
                "T": summands,
                "n_evaluations": evaluations,
                "empirical_mean": float(empirical_mean),
                "bound": float(bound),
                "delta": delta,
            },
        )
        return certificate

    def _partial_sums(
        self,
        method: EstimatorMethod,
        function: Callable[[int], float],
        items: Sequence[int],
        sampler: PosteriorSampler,
        data: DatasetHandle,
        loss: LossOracle,
    ) -> List[float]:
        try:
            return self.map_ordered(function, items, self._parallel(sampler, data, loss))
        except CertificationError:
            raise
        except Exception as e:
            raise self.handle_service_error(
                f"estimate_{method.value}", e, method=method.value
            ) from e

    @staticmethod
    def _tokens(data: DatasetHandle) -> List[Hashable]:
        return [data.example(j) for j in range(data.size)]

    @staticmethod
    def _parallel(sampler: PosteriorSampler, data: DatasetHandle, loss: LossOracle) -> bool:
        return sampler.thread_safe and data.thread_safe and loss.thread_safe

    @staticmethod
    def _require_draws(sampler: PosteriorSampler, needed: int) -> None:
        available = sampler.available_draws
        if available is not None and available < needed:
            raise ValidationError(
                message=f"{needed} posterior draws are needed but the sampler "
                f"provides {available}; draws are never reused",
                error_code=ErrorCode.DIMENSION_MISMATCH,
                field_name="draws",
                provided_value=available,
                details={"needed": needed},
            )
