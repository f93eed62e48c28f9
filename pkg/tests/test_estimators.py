import math
import threading
from datetime import datetime, timezone
from math import fsum

import pytest

from gibbscert.config import Settings
from gibbscert.exceptions import ErrorCode, IntegrityError, ValidationError
from gibbscert.kl_core import kl_inverse_upper, slack_budget
from gibbscert.models import EstimatorMethod, SyntheticKind, SyntheticPosteriorSpec
from gibbscert.repositories import (ArtifactRepository, InMemoryDataset,
                                    LossOracle, RescaledLossOracle,
                                    build_synthetic)
from gibbscert.services import EstimatorService, passes_for_slack

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class ConstantOracle(LossOracle):
    def __init__(self, value):
        super().__init__()
        self.value = value

    @property
    def repository_name(self) -> str:
        return "ConstantOracle"

    def loss(self, hypothesis, example):
        return self.value


class FailingOracle(LossOracle):
    @property
    def repository_name(self) -> str:
        return "FailingOracle"

    def loss(self, hypothesis, example):
        return 1 / 0


class ThreadRecordingOracle(LossOracle):
    """Serial oracle remembering which threads called it."""

    def __init__(self):
        super().__init__()
        self.threads = set()

    @property
    def repository_name(self) -> str:
        return "ThreadRecordingOracle"

    def loss(self, hypothesis, example):
        self.threads.add(threading.get_ident())
        return 0.5


@pytest.fixture
def service(settings):
    return EstimatorService(settings)


def bernoulli(means, seed):
    spec = SyntheticPosteriorSpec(kind=SyntheticKind.BERNOULLI_PER_EXAMPLE, means=list(means))
    return build_synthetic(spec, seed)


class TestClassic:
    def test_zero_loss_single_draw(self, service, point_mass):
        data, sampler, oracle = point_mass([0.0] * 5)
        cert = service.estimate_classic(sampler, data, oracle, n=1, delta=0.05)
        assert cert.method == EstimatorMethod.CLASSIC
        assert cert.empirical_mean == 0.0
        assert cert.T == 1
        assert 0.95 <= cert.bound <= 0.95 + 1e-10
        assert cert.n_evaluations == 5

    def test_constant_loss(self, service, point_mass):
        data, sampler, oracle = point_mass([0.5] * 7)
        cert = service.estimate_classic(sampler, data, oracle, n=4, delta=0.1)
        assert cert.empirical_mean == 0.5
        assert cert.T == 4
        assert cert.slack == pytest.approx(math.log(10.0) / 4, rel=1e-15)

    def test_reference_pass_count(self, service, point_mass):
        data, sampler, oracle = point_mass([0.1])
        cert = service.estimate_classic(sampler, data, oracle, n=150000, delta=0.025)
        assert cert.slack == pytest.approx(2.459e-5, rel=1e-3)
        assert cert.bound == kl_inverse_upper(0.1, cert.slack)


class TestFresh:
    def test_zero_loss_closed_form(self, service, point_mass):
        data, sampler, oracle = point_mass([0.0] * 10)
        cert = service.estimate_fresh(sampler, data, oracle, n=1, delta=0.05)
        assert cert.T == 10
        expected = 1.0 - 20.0 ** -0.1
        assert expected <= cert.bound <= expected + 1e-10
        assert cert.bound == pytest.approx(0.2589, abs=1e-4)

    def test_point_mass_matches_classic_exactly(self, service, point_mass):
        means = [0.1, 0.7, 0.3, 0.9, 0.0, 0.35]
        classic = service.estimate_classic(*_order(point_mass(means, seed=3)), n=3, delta=0.05)
        fresh = service.estimate_fresh(*_order(point_mass(means, seed=11)), n=3, delta=0.05)
        assert classic.empirical_mean == fresh.empirical_mean
        assert classic.empirical_mean == pytest.approx(fsum(means) / len(means), abs=1e-15)

    def test_slack_is_classic_slack_over_m(self, service, point_mass):
        means = [0.2] * 25
        classic = service.estimate_classic(*_order(point_mass(means)), n=4, delta=0.05)
        fresh = service.estimate_fresh(*_order(point_mass(means)), n=4, delta=0.05)
        assert math.isclose(classic.slack / fresh.slack, 25, rel_tol=1e-15)
        assert fresh.bound <= classic.bound

    def test_same_seed_is_bit_identical(self, service, bernoulli_spec):
        first = service.estimate_fresh(*_order(build_synthetic(bernoulli_spec, 42)), 3, 0.05, created_at=EPOCH)
        second = service.estimate_fresh(*_order(build_synthetic(bernoulli_spec, 42)), 3, 0.05, created_at=EPOCH)
        assert first == second

    def test_worker_count_does_not_change_certificate(self, bernoulli_spec):
        serial = EstimatorService(Settings(max_workers=1))
        pooled = EstimatorService(Settings(max_workers=8))
        args = _order(build_synthetic(bernoulli_spec, 7))
        assert serial.estimate_fresh(*args, 40, 0.05, created_at=EPOCH) == pooled.estimate_fresh(
            *args, 40, 0.05, created_at=EPOCH
        )

    def test_different_seeds_differ(self, service, bernoulli_spec):
        a = service.estimate_fresh(*_order(build_synthetic(bernoulli_spec, 1)), 20, 0.05)
        b = service.estimate_fresh(*_order(build_synthetic(bernoulli_spec, 2)), 20, 0.05)
        assert a.empirical_mean != b.empirical_mean

    @pytest.mark.slow
    def test_mean_is_unbiased(self, serial_settings):
        means = [0.05, 0.2, 0.4, 0.6, 0.9, 0.1, 0.3, 0.5, 0.7, 0.8]
        service = EstimatorService(serial_settings)
        runs = 10_000
        estimates = [
            service.estimate_fresh(*_order(bernoulli(means, seed)), 1, 0.05, created_at=EPOCH).empirical_mean
            for seed in range(runs)
        ]
        truth = fsum(means) / len(means)
        variance = fsum(p * (1 - p) for p in means) / len(means) ** 2
        standard_error = math.sqrt(variance / runs)
        assert abs(fsum(estimates) / runs - truth) <= 3 * standard_error


class TestTestset:
    def test_all_ones(self, service):
        stream = InMemoryDataset(["a", "b", "c"])
        cert = service.estimate_testset(_Sampler(), stream, ConstantOracle(1.0), n=2, delta=0.05)
        assert cert.empirical_mean == 1.0
        assert cert.bound == 1.0
        assert cert.held_out is True
        assert cert.T == 6

    def test_degenerate_stream(self, service):
        cert = service.estimate_testset(_Sampler(), InMemoryDataset([0]), ConstantOracle(0.25), n=1, delta=0.05)
        assert cert.T == 1
        assert cert.slack == pytest.approx(-math.log(0.05), rel=1e-15)

    def test_opaque_dataset_has_no_digest(self, service):
        cert = service.estimate_testset(_Sampler(), InMemoryDataset([0, 1]), ConstantOracle(0.5), n=1, delta=0.05)
        assert cert.data_digest is None

    def test_plain_sequence_stream(self, service):
        wrapped = service.estimate_testset(
            _Sampler(), InMemoryDataset(["x", "y"]), ConstantOracle(0.25), n=3, delta=0.05, created_at=EPOCH
        )
        plain = service.estimate_testset(
            _Sampler(), ["x", "y"], ConstantOracle(0.25), n=3, delta=0.05, created_at=EPOCH
        )
        assert plain == wrapped


class TestSubsampled:
    def test_single_summand(self, service, point_mass):
        data, sampler, oracle = point_mass([0.3, 0.3])
        cert = service.estimate_subsampled(sampler, data, oracle, T=1, delta=0.05, subsample_seed=9)
        assert cert.slack == pytest.approx(-math.log(0.05), rel=1e-15)
        assert cert.bound == kl_inverse_upper(0.3, cert.slack)
        assert cert.subsample_seed == 9
        assert cert.n_evaluations == 1

    def test_constant_loss(self, service, point_mass):
        data, sampler, oracle = point_mass([0.5] * 1000)
        cert = service.estimate_subsampled(sampler, data, oracle, T=3000, delta=0.05, subsample_seed=1)
        assert cert.empirical_mean == 0.5
        assert cert.T == 3000

    def test_reproducible(self, service, bernoulli_spec):
        args = _order(build_synthetic(bernoulli_spec, 5))
        a = service.estimate_subsampled(*args, 2500, 0.05, 77, created_at=EPOCH)
        b = service.estimate_subsampled(*args, 2500, 0.05, 77, created_at=EPOCH)
        c = service.estimate_subsampled(*args, 2500, 0.05, 78, created_at=EPOCH)
        assert a == b
        assert a.empirical_mean != c.empirical_mean


class TestAudit:
    def test_recompute_own_bound(self, service, bernoulli_spec):
        cert = service.estimate_fresh(*_order(build_synthetic(bernoulli_spec, 3)), 2, 0.05)
        assert service.recompute_bound(cert) == cert.bound
        assert service.verify_certificate(cert) == cert.bound

    def test_tampered_mean_is_detected(self, service):
        cert = service.estimate_fresh(*_order(bernoulli([0.3] * 50, 3)), 2, 0.05)
        tampered = cert.model_copy(update={"empirical_mean": 0.1})
        with pytest.raises(IntegrityError) as excinfo:
            service.recompute_bound(tampered)
        assert excinfo.value.error_code == ErrorCode.BOUND_MISMATCH

    def test_inconsistent_summand_count(self, service, point_mass):
        cert = service.estimate_fresh(*_order(point_mass([0.2] * 4)), 2, 0.05)
        with pytest.raises(IntegrityError) as excinfo:
            service.verify_certificate(cert.model_copy(update={"T": 2}))
        assert excinfo.value.error_code == ErrorCode.CERTIFICATE_INCONSISTENT

    def test_unknown_schema_version(self, service, point_mass):
        cert = service.estimate_fresh(*_order(point_mass([0.2] * 4)), 1, 0.05)
        with pytest.raises(IntegrityError) as excinfo:
            service.verify_certificate(cert.model_copy(update={"schema_version": "0"}))
        assert excinfo.value.error_code == ErrorCode.SCHEMA_MISMATCH

    def test_golden_certificate(self, service, golden_certificate_path):
        golden = ArtifactRepository().read_certificate(golden_certificate_path)
        assert service.recompute_bound(golden) == golden.bound
        assert service.verify_certificate(golden) == golden.bound
        assert golden.bound < 1.0


class TestValidation:
    def test_out_of_range_loss(self, service):
        with pytest.raises(ValidationError) as excinfo:
            service.estimate_fresh(_Sampler(), InMemoryDataset([0, 1]), ConstantOracle(1.5), 1, 0.05)
        assert excinfo.value.error_code == ErrorCode.LOSS_OUT_OF_RANGE
        assert excinfo.value.details["draw_index"] == 0
        assert excinfo.value.details["example_index"] == 0

    @pytest.mark.parametrize("delta", [0.0, 1.0, 1.5])
    def test_delta(self, service, point_mass, delta):
        with pytest.raises(ValidationError) as excinfo:
            service.estimate_classic(*_order(point_mass([0.1])), 1, delta)
        assert excinfo.value.error_code == ErrorCode.DELTA_OUT_OF_RANGE

    @pytest.mark.parametrize("n", [0, -1, 1.5, True])
    def test_pass_count(self, service, point_mass, n):
        with pytest.raises(ValidationError):
            service.estimate_fresh(*_order(point_mass([0.1])), n, 0.05)

    def test_serial_oracle_stays_on_calling_thread(self):
        oracle = ThreadRecordingOracle()
        service = EstimatorService(Settings(max_workers=8))
        service.estimate_fresh(_Sampler(), InMemoryDataset(list(range(10))), oracle, 20, 0.05)
        assert oracle.threads == {threading.get_ident()}

    def test_rescaled_oracle(self, service):
        oracle = RescaledLossOracle(ConstantOracle(5.0), 0.0, 10.0)
        cert = service.estimate_fresh(_Sampler(), InMemoryDataset([0, 1]), oracle, 1, 0.05)
        assert cert.empirical_mean == 0.5

    @pytest.mark.parametrize("method", ["classic", "fresh", "subsampled"])
    def test_oracle_failure_is_wrapped(self, service, method):
        arguments = (_Sampler(), InMemoryDataset([0, 1, 2]), FailingOracle(), 2, 0.05)
        with pytest.raises(IntegrityError) as excinfo:
            if method == "subsampled":
                service.estimate_subsampled(*arguments, subsample_seed=3)
            else:
                getattr(service, f"estimate_{method}")(*arguments)
        error = excinfo.value
        assert error.error_code == ErrorCode.EVALUATION_FAILED
        assert error.details["operation"] == f"estimate_{method}"
        assert error.details["error_type"] == "ZeroDivisionError"
        assert isinstance(error.__cause__, ZeroDivisionError)


class TestPassPlanning:
    def test_reference_reduction(self):
        target = slack_budget(0.025, 150000)
        assert passes_for_slack(50000, target, 0.025) == 3

    def test_single_example_needs_same_passes(self):
        assert passes_for_slack(1, slack_budget(0.05, 17), 0.05) == 17

    def test_rounds_up(self):
        target = slack_budget(0.05, 1000)
        assert passes_for_slack(300, target, 0.05) == 4

    def test_rejects_nonpositive_target(self):
        with pytest.raises(ValidationError):
            passes_for_slack(10, 0.0, 0.05)


class _Sampler:
    """Unbounded sampler whose draws are just their indices."""

    seed = 0
    thread_safe = True
    available_draws = None

    def draw(self, t):
        return t


def _order(triple):
    """build_synthetic order (data, sampler, oracle) to estimator order (sampler, data, oracle)."""
    data, sampler, oracle = triple
    return sampler, data, oracle
