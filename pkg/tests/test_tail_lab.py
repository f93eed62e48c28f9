import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gibbscert.exceptions import ErrorCode, ValidationError
from gibbscert.models import (EstimatorMethod, HeterogeneousBernoulliSpec,
                              SyntheticPosteriorSpec)
from gibbscert.services import (TailLabService, chernoff_kl_tail_bound,
                                enumerate_lower_tail, exact_lower_tail,
                                poisson_binomial_pmf)

TWO_POINT = HeterogeneousBernoulliSpec(means=[0.2, 0.6])

bernoulli_means = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=12)


@pytest.fixture
def lab(settings):
    return TailLabService(settings)


class TestExactTail:
    def test_two_point_closed_form(self):
        assert exact_lower_tail(TWO_POINT, 0.0) == pytest.approx(0.32, abs=1e-15)
        assert enumerate_lower_tail(TWO_POINT, 0.0) == pytest.approx(0.32, abs=1e-15)

    def test_full_threshold_is_certain(self):
        assert exact_lower_tail(TWO_POINT, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_pmf_matches_binomial(self):
        pmf = poisson_binomial_pmf([0.3] * 20)
        np.testing.assert_allclose(pmf, stats.binom.pmf(np.arange(21), 20, 0.3), atol=1e-14)

    def test_pmf_sums_to_one(self):
        pmf = poisson_binomial_pmf(np.linspace(0.0, 1.0, 50))
        assert math.fsum(pmf) == pytest.approx(1.0, abs=50 * 1e-15)

    @settings(max_examples=100)
    @given(means=bernoulli_means, t=st.floats(min_value=0.0, max_value=1.0))
    def test_recursion_agrees_with_enumeration(self, means, t):
        spec = HeterogeneousBernoulliSpec(means=means)
        assert exact_lower_tail(spec, t) == pytest.approx(enumerate_lower_tail(spec, t), abs=1e-12)

    def test_enumeration_limit(self):
        with pytest.raises(ValidationError) as excinfo:
            enumerate_lower_tail(HeterogeneousBernoulliSpec.homogeneous(0.5, 17), 0.2)
        assert excinfo.value.error_code == ErrorCode.DIMENSION_MISMATCH


class TestChernoffBound:
    def test_two_point_closed_form(self):
        assert chernoff_kl_tail_bound(TWO_POINT, 0.0) == pytest.approx(0.36, rel=1e-14)

    def test_single_variable(self):
        spec = HeterogeneousBernoulliSpec(means=[0.7])
        assert chernoff_kl_tail_bound(spec, 0.0) == pytest.approx(0.3, rel=1e-14)

    def test_at_the_mean_is_trivial(self):
        assert chernoff_kl_tail_bound(TWO_POINT, 0.4) == 1.0

    def test_threshold_above_mean(self):
        with pytest.raises(ValidationError) as excinfo:
            chernoff_kl_tail_bound(TWO_POINT, 0.5)
        assert excinfo.value.error_code == ErrorCode.PREMISE_VIOLATED

    @settings(max_examples=200)
    @given(means=bernoulli_means, fraction=st.floats(min_value=0.0, max_value=1.0))
    def test_dominates_exact_tail(self, means, fraction):
        spec = HeterogeneousBernoulliSpec(means=means)
        t = min(fraction * math.fsum(means) / len(means), math.fsum(means) / len(means))
        assert exact_lower_tail(spec, t) <= chernoff_kl_tail_bound(spec, t) + 1e-12


class TestVerifyTailBound:
    def test_two_point_grid(self, lab):
        reports = lab.verify_tail_bound(TWO_POINT, [0.0, 0.2, 0.4])
        assert [report.t for report in reports] == [0.0, 0.2, 0.4]
        assert all(report.satisfied for report in reports)
        assert reports[0].exact_tail == pytest.approx(0.32, abs=1e-15)
        assert reports[0].bound == pytest.approx(0.36, rel=1e-14)

    def test_validates_whole_grid_first(self, lab):
        with pytest.raises(ValidationError) as excinfo:
            lab.verify_tail_bound(TWO_POINT, [0.0, 0.9])
        assert excinfo.value.error_code == ErrorCode.PREMISE_VIOLATED


class TestCoverageSimulation:
    def test_degenerate_means_never_fail(self, lab):
        report = lab.coverage_simulation(
            HeterogeneousBernoulliSpec.homogeneous(0.0, 10), 0.05, trials=50, seed=1
        )
        assert report.failures == 0
        assert report.within_tolerance

    def test_reproducible(self, lab):
        spec = HeterogeneousBernoulliSpec.homogeneous(0.3, 100)
        first = lab.coverage_simulation(spec, 0.05, trials=300, seed=9)
        second = lab.coverage_simulation(spec, 0.05, trials=300, seed=9)
        assert first == second

    def test_worker_count_does_not_matter(self, serial_settings, settings):
        spec = HeterogeneousBernoulliSpec(means=[i / 50 for i in range(50)])
        serial = TailLabService(serial_settings).coverage_simulation(spec, 0.1, 400, seed=4)
        pooled = TailLabService(settings.model_copy(update={"max_workers": 6})).coverage_simulation(
            spec, 0.1, 400, seed=4
        )
        assert serial == pooled

    def test_report_fields(self, lab):
        spec = HeterogeneousBernoulliSpec.homogeneous(0.3, 100)
        report = lab.coverage_simulation(spec, 0.05, trials=500, seed=2)
        assert report.T == 100
        assert report.true_mean == pytest.approx(0.3)
        assert report.pinsker_failures <= report.failures
        assert report.mean_bound > report.true_mean
        assert report.z_slack == pytest.approx(
            (0.05 - report.failure_rate) / math.sqrt(0.05 * 0.95 / 500)
        )

    @pytest.mark.slow
    @pytest.mark.parametrize("T, delta", [(100, 0.05), (500, 0.1), (1000, 0.01)])
    @pytest.mark.parametrize("profile", ["homogeneous", "heterogeneous"])
    def test_failure_rate_within_three_standard_errors(self, lab, T, delta, profile):
        if profile == "homogeneous":
            spec = HeterogeneousBernoulliSpec.homogeneous(0.3, T)
        else:
            spec = HeterogeneousBernoulliSpec(means=[i / T for i in range(T)])
        report = lab.coverage_simulation(spec, delta, trials=2000, seed=20240917)
        assert report.failure_rate <= delta + 3 * math.sqrt(delta * (1 - delta) / 2000)

    @pytest.mark.parametrize("trials", [0, -5, 2.5])
    def test_rejects_trial_count(self, lab, trials):
        with pytest.raises(ValidationError):
            lab.coverage_simulation(TWO_POINT, 0.05, trials=trials, seed=0)


class TestEstimatorCoverage:
    def test_small_run(self, lab):
        spec = SyntheticPosteriorSpec.constant(0.3, 20)
        report = lab.estimator_coverage(EstimatorMethod.FRESH, spec, n=2, delta=0.1, trials=40, seed=3)
        assert report.method == EstimatorMethod.FRESH
        assert report.T == 40
        assert report.true_mean == pytest.approx(0.3)
        assert report.within_tolerance

    def test_subsampled_defaults_to_full_budget(self, lab):
        spec = SyntheticPosteriorSpec.constant(0.3, 10)
        report = lab.estimator_coverage(
            EstimatorMethod.SUBSAMPLED, spec, n=3, delta=0.1, trials=10, seed=3
        )
        assert report.T == 30

    def test_reproducible(self, lab):
        spec = SyntheticPosteriorSpec.constant(0.2, 10)
        first = lab.estimator_coverage(EstimatorMethod.TESTSET, spec, 2, 0.05, 30, seed=8)
        second = lab.estimator_coverage(EstimatorMethod.TESTSET, spec, 2, 0.05, 30, seed=8)
        assert first == second

    @pytest.mark.slow
    @pytest.mark.parametrize("gibbs_risk", [0.05, 0.3, 0.7])
    def test_fresh_coverage(self, lab, gibbs_risk):
        spec = SyntheticPosteriorSpec.constant(gibbs_risk, 100)
        report = lab.estimator_coverage(
            EstimatorMethod.FRESH, spec, n=5, delta=0.1, trials=2000, seed=17
        )
        assert report.within_tolerance

    @pytest.mark.slow
    @pytest.mark.parametrize("method", [EstimatorMethod.TESTSET, EstimatorMethod.SUBSAMPLED])
    def test_other_estimators_coverage(self, lab, method):
        spec = SyntheticPosteriorSpec.constant(0.3, 100)
        report = lab.estimator_coverage(method, spec, n=5, delta=0.1, trials=2000, seed=17)
        assert report.within_tolerance


class TestBudgetCompare:
    def test_fresh_slack_is_m_times_smaller(self, lab):
        comparison = lab.budget_compare(m=50000, n_classic=150000, delta=0.025, q=0.1)
        assert comparison.total_evaluations == 150000 * 50000
        assert comparison.pass_ratio == 50000
        assert comparison.slack_classic / comparison.slack_fresh_equal_budget == pytest.approx(
            50000, rel=1e-14
        )
        assert comparison.fresh_passes_for_equal_slack == 3
        assert comparison.bound_fresh < comparison.bound_classic

    def test_single_example_is_identical(self, lab):
        comparison = lab.budget_compare(m=1, n_classic=100, delta=0.05, q=0.2)
        assert comparison.slack_classic == comparison.slack_fresh_equal_budget
        assert comparison.bound_classic == comparison.bound_fresh
        assert comparison.fresh_passes_for_equal_slack == 100
