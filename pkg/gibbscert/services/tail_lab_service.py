"""
Verification lab for the concentration inequalities behind the certificates.

Exact lower tails of Poisson-binomial sums are checked against the
Chernoff-kl bound exp(-T kl(t, p)), and the coverage of the kl-inverse
bound is measured by simulation, both on raw Bernoulli sums and end to end
through the estimators.
"""

import math
from datetime import datetime, timezone
from math import fsum
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..exceptions import ErrorCode, ValidationError
from ..kl_core import (Probability, kl, kl_inverse_upper, pinsker_relaxation,
                       slack_budget, validate_delta)
from ..models import (BudgetComparison, CoverageReport, EstimatorMethod,
                      HeterogeneousBernoulliSpec, SyntheticPosteriorSpec,
                      TailReport)
from ..repositories.synthetic_repository import build_synthetic
from ..utils.seeding import COVERAGE_STREAM, counter_stream, validate_seed
from .base_service import BaseService
from .estimator_service import EstimatorService, passes_for_slack

ENUMERATION_LIMIT = 16
TAIL_TOLERANCE = 1e-12

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def poisson_binomial_pmf(means: Sequence[float]) -> np.ndarray:
    """
    Probability mass function of the number of successes among independent Bernoulli(p_i).

    O(T^2) recursion over the variables; entry k is Pr(sum = k).
    """
    values = [Probability(p, f"means[{i}]") for i, p in enumerate(means)]
    pmf = np.zeros(len(values) + 1, dtype=np.float64)
    pmf[0] = 1.0
    for i, p in enumerate(values):
        pmf[1:i + 2] = pmf[1:i + 2] * (1.0 - p) + pmf[:i + 1] * p
        pmf[0] *= 1.0 - p
    return pmf


def _aggregate_mean(spec: HeterogeneousBernoulliSpec) -> float:
    return fsum(spec.means) / spec.T


def _tail_mask(T: int, t: float) -> np.ndarray:
    return np.arange(T + 1, dtype=np.float64) / T <= t


def exact_lower_tail(spec: HeterogeneousBernoulliSpec, t: float) -> Probability:
    """Pr(mean of the X_i <= t), exact up to floating-point accumulation."""
    t = Probability(t, "t")
    pmf = poisson_binomial_pmf(spec.means)
    tail = fsum(pmf[_tail_mask(spec.T, t)])
    return Probability(min(1.0, tail), "exact_tail")


def enumerate_lower_tail(spec: HeterogeneousBernoulliSpec, t: float) -> Probability:
    """
    Same quantity as exact_lower_tail by summing over all 2^T outcomes.

    Raises:
        ValidationError: If T exceeds 16
    """
    t = Probability(t, "t")
    if spec.T > ENUMERATION_LIMIT:
        raise ValidationError(
            message=f"enumeration is limited to T <= {ENUMERATION_LIMIT}, got T={spec.T}",
            error_code=ErrorCode.DIMENSION_MISMATCH,
            field_name="T",
            provided_value=spec.T,
        )
    means = np.asarray(spec.means, dtype=np.float64)
    outcomes = (np.arange(2**spec.T)[:, None] >> np.arange(spec.T)) & 1
    probabilities = np.prod(np.where(outcomes == 1, means, 1.0 - means), axis=1)
    successes = outcomes.sum(axis=1)
    tail = fsum(probabilities[successes / spec.T <= t])
    return Probability(min(1.0, tail), "exact_tail")


def chernoff_kl_tail_bound(spec: HeterogeneousBernoulliSpec, t: float) -> Probability:
    """
    exp(-T kl(t, p)) with p the aggregate mean; valid for t in [0, p].

    Raises:
        ValidationError: If t > p
    """
    t = Probability(t, "t")
    p = _aggregate_mean(spec)
    if t > p:
        raise ValidationError(
            message=f"threshold t={t!r} exceeds the aggregate mean p={p!r}; "
            "the lower-tail bound only holds for t in [0, p]",
            error_code=ErrorCode.PREMISE_VIOLATED,
            field_name="t",
            provided_value=float(t),
            details={"aggregate_mean": p},
        )
    return Probability(math.exp(-spec.T * kl(t, p)), "bound")


class TailLabService(BaseService):
    """Runs tail-bound and coverage experiments."""

    @property
    def service_name(self) -> str:
        return "TailLabService"

    def verify_tail_bound(
        self, spec: HeterogeneousBernoulliSpec, t_grid: Sequence[float]
    ) -> List[TailReport]:
        """
        Pair the exact lower tail with its Chernoff-kl bound at every grid point.

        Every threshold is validated against the premise t <= p before any
        tail is computed.
        """
        bounds = [chernoff_kl_tail_bound(spec, t) for t in t_grid]
        pmf = poisson_binomial_pmf(spec.means)
        reports = []
        for t, bound in zip(t_grid, bounds):
            exact = Probability(min(1.0, fsum(pmf[_tail_mask(spec.T, float(t))])))
            reports.append(
                TailReport(
                    t=float(t),
                    exact_tail=exact,
                    bound=bound,
                    satisfied=exact <= bound + TAIL_TOLERANCE,
                )
            )
        violations = [report.t for report in reports if not report.satisfied]
        if violations:
            self.logger.error(
                "Exact tail exceeded the Chernoff-kl bound",
                extra={"service": self.service_name, "thresholds": violations, "T": spec.T},
            )
        self.log_operation(
            "verify_tail_bound",
            {"T": spec.T, "grid_points": len(reports), "violations": len(violations)},
        )
        return reports

    def coverage_simulation(
        self,
        true_means: HeterogeneousBernoulliSpec,
        delta: float,
        trials: int,
        seed: int,
    ) -> CoverageReport:
        """
        Frequency with which kl_inverse_upper(mean, log(1/delta)/T) falls below the true mean.

        Trial k draws X_1..X_T from its own counter block (seed, k), so the
        report does not depend on how trials are scheduled.
        """
        delta = validate_delta(delta)
        seed = validate_seed(seed)
        trials = self._trial_count(trials)
        T = true_means.T
        means = np.asarray(true_means.means, dtype=np.float64)
        p = _aggregate_mean(true_means)
        slack = slack_budget(delta, T)

        def successes(k: int) -> int:
            draws = counter_stream(seed, k, 0, COVERAGE_STREAM).random(T)
            return int(np.count_nonzero(draws < means))

        counts = self.map_ordered(successes, range(trials))

        # The empirical mean only takes T + 1 values.
        bounds: Dict[int, float] = {}
        relaxed: Dict[int, float] = {}
        for count in set(counts):
            q = count / T
            bounds[count] = float(kl_inverse_upper(q, slack))
            relaxed[count] = float(pinsker_relaxation(q, slack))

        failures = sum(1 for count in counts if bounds[count] < p)
        pinsker_failures = sum(1 for count in counts if relaxed[count] < p)
        report = self._report(
            trials=trials,
            failures=failures,
            pinsker_failures=pinsker_failures,
            delta=delta,
            true_mean=p,
            mean_bound=fsum(bounds[count] for count in counts) / trials,
            T=T,
            seed=seed,
        )
        self.log_operation(
            "coverage_simulation",
            {"T": T, "trials": trials, "failures": failures, "delta": delta},
        )
        return report

    def estimator_coverage(
        self,
        method: EstimatorMethod,
        spec: SyntheticPosteriorSpec,
        n: int,
        delta: float,
        trials: int,
        seed: int,
        T: Optional[int] = None,
    ) -> CoverageReport:
        """
        End-to-end coverage: certify a synthetic posterior `trials` times and
        count certificates whose bound falls below the known Gibbs risk.

        Each trial runs the estimator on an independently derived seed. For
        the sub-sampled estimator T defaults to n*m.
        """
        method = EstimatorMethod(method)
        delta = validate_delta(delta)
        seed = validate_seed(seed)
        trials = self._trial_count(trials)
        summands = T if T is not None else n * spec.m
        truth = spec.gibbs_risk
        inner = EstimatorService(self.settings.model_copy(update={"max_workers": 1}))

        def one_trial(k: int) -> tuple:
            words = counter_stream(seed, k, 1, COVERAGE_STREAM).integers(0, 2**63, size=2)
            trial_seed, subsample_seed = int(words[0]), int(words[1])
            dataset, sampler, oracle = build_synthetic(spec, trial_seed)
            if method == EstimatorMethod.CLASSIC:
                certificate = inner.estimate_classic(
                    sampler, dataset, oracle, n, delta, created_at=_EPOCH
                )
            elif method == EstimatorMethod.FRESH:
                certificate = inner.estimate_fresh(
                    sampler, dataset, oracle, n, delta, created_at=_EPOCH
                )
            elif method == EstimatorMethod.TESTSET:
                stream = dataset.sample_stream(spec.m, trial_seed)
                certificate = inner.estimate_testset(
                    sampler, stream, oracle, n, delta, created_at=_EPOCH
                )
            else:
                certificate = inner.estimate_subsampled(
                    sampler, dataset, oracle, summands, delta, subsample_seed,
                    created_at=_EPOCH,
                )
            return certificate.bound, certificate.pinsker_bound, certificate.T

        outcomes = self.map_ordered(one_trial, range(trials))
        failures = sum(1 for bound, _, _ in outcomes if bound < truth)
        pinsker_failures = sum(1 for _, relaxed, _ in outcomes if relaxed < truth)
        report = self._report(
            trials=trials,
            failures=failures,
            pinsker_failures=pinsker_failures,
            delta=delta,
            true_mean=truth,
            mean_bound=fsum(bound for bound, _, _ in outcomes) / trials,
            T=outcomes[0][2],
            seed=seed,
            method=method,
        )
        self.log_operation(
            "estimator_coverage",
            {"method": method.value, "trials": trials, "failures": failures},
        )
        return report

    def budget_compare(self, m: int, n_classic: int, delta: float, q: float) -> BudgetComparison:
        """
        Classic versus fresh at the same number of loss evaluations n_classic*m.

        The fresh slack is the classic slack divided by m, and the fresh
        estimator needs about n_classic/m passes to match the classic slack.
        """
        delta = validate_delta(delta)
        q = Probability(q, "q")
        budget = n_classic * m
        slack_classic = slack_budget(delta, n_classic)
        slack_fresh = slack_budget(delta, budget)
        comparison = BudgetComparison(
            m=m,
            n_classic=n_classic,
            delta=delta,
            q=q,
            total_evaluations=budget,
            slack_classic=slack_classic,
            slack_fresh_equal_budget=slack_fresh,
            bound_classic=kl_inverse_upper(q, slack_classic),
            bound_fresh=kl_inverse_upper(q, slack_fresh),
            pass_ratio=m,
            fresh_passes_for_equal_slack=passes_for_slack(m, slack_classic, delta),
        )
        self.log_operation("budget_compare", {"m": m, "n_classic": n_classic})
        return comparison

    @staticmethod
    def _trial_count(trials: int) -> int:
        if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
            raise ValidationError(
                message=f"trials must be a positive integer, got {trials!r}",
                field_name="trials",
                provided_value=trials,
            )
        return trials

    @staticmethod
    def _report(
        trials: int,
        failures: int,
        pinsker_failures: int,
        delta: float,
        true_mean: float,
        mean_bound: float,
        T: int,
        seed: int,
        method: Optional[EstimatorMethod] = None,
    ) -> CoverageReport:
        failure_rate = failures / trials
        standard_error = math.sqrt(delta * (1.0 - delta) / trials)
        return CoverageReport(
            trials=trials,
            failures=failures,
            delta=delta,
            failure_rate=failure_rate,
            z_slack=(delta - failure_rate) / standard_error,
            true_mean=true_mean,
            mean_bound=min(1.0, mean_bound),
            pinsker_failures=pinsker_failures,
            T=T,
            seed=seed,
            method=method,
        )
