"""
Dispatch of one validated RunConfig to the estimator and lab services.

Every artifact is computed in full before anything is written, and the
write itself is atomic, so a failed command leaves no output file behind.
"""

import logging
from datetime import datetime
from typing import Any, List, Optional, Tuple

from .checks import CheckRunner
from .config import Settings, get_settings
from .exceptions import (EXIT_INTERNAL, EXIT_OK, ErrorCode, ValidationError,
                         handle_cli_exception)
from .kl_core import kl_inverse_upper, pinsker_relaxation
from .models import (Certificate, EstimatorMethod, HeterogeneousBernoulliSpec,
                     KlInverseResult, OutputFormat, RunCommand, RunConfig)
from .repositories import (ArtifactRepository, DatasetHandle, LossOracle,
                           PosteriorSampler, build_synthetic,
                           ingest_loss_matrix)
from .services import EstimatorService, TailLabService
from .utils.parsing import parse_created_at

logger = logging.getLogger(__name__)


class Harness:
    """Runs one CLI command end to end."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.estimators = EstimatorService(self.settings)
        self.lab = TailLabService(self.settings)
        self.artifacts = ArtifactRepository()

    def run(self, config: RunConfig) -> int:
        """
        Execute config and emit its artifact.

        Returns:
            0 on success, 2 for validation errors, 3 for I/O errors,
            4 for integrity failures (including failed lab checks)
        """
        logger.info(
            f"Running {config.subcommand.value}",
            extra={"subcommand": config.subcommand.value},
        )
        try:
            text, passed = self.render(config)
            self.artifacts.write_text(text, config.output)
        except Exception as e:
            return handle_cli_exception(e)
        return EXIT_OK if passed else EXIT_INTERNAL

    def render(self, config: RunConfig) -> Tuple[str, bool]:
        """Compute the artifact text for config and whether its checks passed."""
        command = config.subcommand
        if config.method is not None:
            certificate = self.certify(config)
            return self._emit(config, [certificate]), True
        if command == RunCommand.VERIFY_CERTIFICATE:
            certificate = self.artifacts.read_certificate(config.input)
            bound = self.estimators.verify_certificate(certificate)
            payload = {"verified": True, "bound": float(bound), "method": certificate.method}
            return self.artifacts.to_json(payload), True
        if command == RunCommand.KLINV:
            result = KlInverseResult(
                q=config.q,
                c=config.c,
                bound=kl_inverse_upper(config.q, config.c),
                pinsker_bound=pinsker_relaxation(config.q, config.c),
                tolerance=self.settings.inversion_tolerance,
            )
            return self._emit(config, [result]), True
        if command == RunCommand.BUDGET_COMPARE:
            comparison = self.lab.budget_compare(config.m, config.n, config.delta, config.q)
            return self._emit(config, [comparison]), True
        if command == RunCommand.VERIFY_THEOREM3:
            spec = HeterogeneousBernoulliSpec(means=config.spec_means)
            reports = self.lab.verify_tail_bound(spec, config.grid)
            return self._emit(config, reports), all(report.satisfied for report in reports)
        if command == RunCommand.SIMULATE_COVERAGE:
            report = self.simulate(config)
            return self._emit(config, [report]), report.within_tolerance
        if command == RunCommand.LAB:
            summary = CheckRunner(self.settings).run_all_checks(skip_slow=config.quick)
            return self.artifacts.to_json(summary), summary["overall_status"] == "passed"
        raise ValidationError(
            message=f"unsupported subcommand {command.value}",
            field_name="subcommand",
            provided_value=command.value,
        )

    def certify(self, config: RunConfig) -> Certificate:
        created_at = config.created_at or parse_created_at(None, self.settings.source_date_epoch)
        dataset, sampler, oracle = self._inputs(config)
        method = config.method
        if method == EstimatorMethod.CLASSIC:
            return self.estimators.estimate_classic(
                sampler, dataset, oracle, config.n, config.delta, created_at=created_at
            )
        if method == EstimatorMethod.FRESH:
            return self.estimators.estimate_fresh(
                sampler, dataset, oracle, config.n, config.delta, created_at=created_at
            )
        if method == EstimatorMethod.TESTSET:
            stream = dataset
            if config.synthetic is not None:
                stream = dataset.sample_stream(config.m or dataset.size, sampler.seed)
            return self.estimators.estimate_testset(
                sampler, stream, oracle, config.n, config.delta,
                held_out=config.held_out, created_at=created_at,
            )
        subsample_seed = config.subsample_seed
        if subsample_seed is None:
            subsample_seed = sampler.seed
        return self.estimators.estimate_subsampled(
            sampler, dataset, oracle, config.T, config.delta, subsample_seed,
            created_at=created_at,
        )

    def simulate(self, config: RunConfig):
        seed = self._require_seed(config)
        trials = config.trials or self.settings.default_trials
        if config.estimator is not None:
            return self.lab.estimator_coverage(
                config.estimator, config.synthetic, config.n, config.delta, trials, seed,
                T=config.T,
            )
        spec = HeterogeneousBernoulliSpec(means=config.spec_means)
        return self.lab.coverage_simulation(spec, config.delta, trials, seed)

    def _inputs(self, config: RunConfig) -> Tuple[DatasetHandle, PosteriorSampler, LossOracle]:
        if config.input is not None:
            bundle = ingest_loss_matrix(config.input, seed=config.seed or 0)
            if config.m is not None and config.m != bundle.dataset.size:
                raise ValidationError(
                    message=f"--m {config.m} does not match the loss matrix header "
                    f"m={bundle.dataset.size}",
                    error_code=ErrorCode.DIMENSION_MISMATCH,
                    field_name="m",
                    provided_value=config.m,
                )
            return bundle.dataset, bundle.sampler, bundle.oracle
        return build_synthetic(config.synthetic, self._require_seed(config))

    def _require_seed(self, config: RunConfig) -> int:
        seed = config.seed if config.seed is not None else self.settings.default_seed
        if seed is None:
            raise ValidationError(
                message="a seed is required for simulated randomness",
                error_code=ErrorCode.SEED_MISSING,
                field_name="seed",
                remediation="Pass --seed or set GIBBSCERT_DEFAULT_SEED",
            )
        return seed

    def _emit(self, config: RunConfig, records: List[Any]) -> str:
        if config.format == OutputFormat.CSV:
            return self.artifacts.reports_to_csv(records)
        if len(records) == 1 and config.subcommand != RunCommand.VERIFY_THEOREM3:
            return self.artifacts.to_json(records[0].model_dump(mode="json"))
        return self.artifacts.reports_to_json(records)


def run(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """Execute one CLI command; returns the process exit code."""
    return Harness(settings).run(config)


def resolve_created_at(text: Optional[str], settings: Optional[Settings] = None) -> Optional[datetime]:
    """--created-at value to timestamp; None keeps the SOURCE_DATE_EPOCH default."""
    if text is None:
        return None
    return parse_created_at(text, (settings or get_settings()).source_date_epoch)
