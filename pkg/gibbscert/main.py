import logging
import sys
from pathlib import Path
from typing import Any, Optional

import typer

from .config import get_settings
from .exceptions import handle_cli_exception
from .harness import resolve_created_at, run
from .models import (EstimatorMethod, OutputFormat, RunCommand, RunConfig,
                     SyntheticKind, SyntheticPosteriorSpec)
from .utils.parsing import parse_probability_list

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="gibbscert",
    help="Certified upper bounds on the Gibbs risk of a posterior.",
    no_args_is_help=True,
    add_completion=False,
)

# Shared option declarations.
DELTA = typer.Option(None, "--delta", help="Failure probability in (0, 1).")
SEED = typer.Option(None, "--seed", help="64-bit master seed.")
INPUT = typer.Option(None, "--input", help="Loss-matrix CSV (first line m=<int>).")
OUTPUT = typer.Option(None, "--output", "--out", help="Artifact path; stdout when omitted.")
FORMAT = typer.Option(OutputFormat.JSON, "--format", help="Artifact format.")
SYNTHETIC = typer.Option(None, "--synthetic", help="Simulate a posterior of this kind.")
MEANS = typer.Option(None, "--means", help="Per-example mean losses p1,p2,...")
MEAN = typer.Option(None, "--mean", help="Constant mean loss (with --m).")
M = typer.Option(None, "--m", help="Dataset size.")
CONCENTRATION = typer.Option(10.0, "--concentration", help="Beta-loss concentration k.")
CREATED_AT = typer.Option(
    None, "--created-at", help="ISO-8601 timestamp or 'now'; defaults to SOURCE_DATE_EPOCH."
)


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Logging level."),
):
    settings = get_settings()
    logging.basicConfig(
        level=(log_level or settings.log_level).upper(),
        format=settings.log_format,
        stream=sys.stderr,
    )


def _synthetic_spec(
    kind: Optional[SyntheticKind],
    means: Optional[str],
    mean: Optional[float],
    m: Optional[int],
    concentration: float,
) -> Optional[SyntheticPosteriorSpec]:
    if kind is None:
        return None
    if means is not None:
        values = parse_probability_list(means, "--means")
    elif mean is not None and m is not None:
        values = [mean] * m
    else:
        raise typer.BadParameter("--synthetic needs --means, or --mean together with --m")
    return SyntheticPosteriorSpec(kind=kind, means=values, concentration=concentration)


def _execute(command: RunCommand, build: Any) -> None:
    """Validate a RunConfig built by `build` and run it, exiting with its code."""
    settings = get_settings()
    try:
        fields = build()
        if fields.get("delta") is None:
            fields["delta"] = settings.default_delta
        fields["created_at"] = resolve_created_at(fields.get("created_at"), settings)
        config = RunConfig(subcommand=command, **fields)
    except typer.BadParameter:
        raise
    except Exception as e:
        raise typer.Exit(handle_cli_exception(e))
    raise typer.Exit(run(config, settings))


def _certify(command: RunCommand, **options: Any) -> None:
    def build():
        synthetic = _synthetic_spec(
            options.pop("synthetic"),
            options.pop("means"),
            options.pop("mean"),
            options.get("m"),
            options.pop("concentration"),
        )
        return {**options, "synthetic": synthetic}

    _execute(command, build)


@app.command("certify-classic")
def certify_classic(
    n: Optional[int] = typer.Option(None, "--n", help="Posterior draws (full passes)."),
    delta: Optional[float] = DELTA,
    seed: Optional[int] = SEED,
    input: Optional[Path] = INPUT,
    synthetic: Optional[SyntheticKind] = SYNTHETIC,
    means: Optional[str] = MEANS,
    mean: Optional[float] = MEAN,
    m: Optional[int] = M,
    concentration: float = CONCENTRATION,
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
    created_at: Optional[str] = CREATED_AT,
):
    """Classic estimator: n draws, each scored on every example (T = n)."""
    _certify(RunCommand.CERTIFY_CLASSIC, **locals())


@app.command("certify-fresh")
def certify_fresh(
    n: Optional[int] = typer.Option(None, "--n", help="Passes over the dataset."),
    delta: Optional[float] = DELTA,
    seed: Optional[int] = SEED,
    input: Optional[Path] = INPUT,
    synthetic: Optional[SyntheticKind] = SYNTHETIC,
    means: Optional[str] = MEANS,
    mean: Optional[float] = MEAN,
    m: Optional[int] = M,
    concentration: float = CONCENTRATION,
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
    created_at: Optional[str] = CREATED_AT,
):
    """Fresh estimator: a new draw for every (pass, example) pair (T = n*m)."""
    _certify(RunCommand.CERTIFY_FRESH, **locals())


@app.command("certify-testset")
def certify_testset(
    n: Optional[int] = typer.Option(None, "--n", help="Passes over the held-out stream."),
    delta: Optional[float] = DELTA,
    seed: Optional[int] = SEED,
    input: Optional[Path] = INPUT,
    synthetic: Optional[SyntheticKind] = SYNTHETIC,
    means: Optional[str] = MEANS,
    mean: Optional[float] = MEAN,
    m: Optional[int] = M,
    concentration: float = CONCENTRATION,
    held_out: bool = typer.Option(
        True, "--held-out/--not-held-out", help="Assert the examples are unseen by the posterior."
    ),
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
    created_at: Optional[str] = CREATED_AT,
):
    """Test-set bound on the out-of-sample Gibbs risk (T = n*m)."""
    _certify(RunCommand.CERTIFY_TESTSET, **locals())


@app.command("certify-subsampled")
def certify_subsampled(
    T: Optional[int] = typer.Option(None, "--T", help="Number of sub-sampled evaluations."),
    delta: Optional[float] = DELTA,
    seed: Optional[int] = SEED,
    subsample_seed: Optional[int] = typer.Option(
        None, "--subsample-seed", help="Seed of the example indices; defaults to --seed."
    ),
    input: Optional[Path] = INPUT,
    synthetic: Optional[SyntheticKind] = SYNTHETIC,
    means: Optional[str] = MEANS,
    mean: Optional[float] = MEAN,
    m: Optional[int] = M,
    concentration: float = CONCENTRATION,
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
    created_at: Optional[str] = CREATED_AT,
):
    """Sub-sampled bound: T draws, each on one example picked with replacement."""
    _certify(RunCommand.CERTIFY_SUBSAMPLED, **locals())


@app.command("simulate-coverage")
def simulate_coverage(
    spec: Optional[str] = typer.Option(None, "--spec", help="Bernoulli means p1,...,pT."),
    method: Optional[EstimatorMethod] = typer.Option(
        None, "--method", help="Measure an estimator end to end instead."
    ),
    n: Optional[int] = typer.Option(None, "--n", help="Passes (estimator coverage)."),
    T: Optional[int] = typer.Option(None, "--T", help="Sub-sampled evaluations."),
    delta: Optional[float] = DELTA,
    trials: Optional[int] = typer.Option(None, "--trials", help="Simulated trials."),
    seed: Optional[int] = SEED,
    synthetic: Optional[SyntheticKind] = SYNTHETIC,
    means: Optional[str] = MEANS,
    mean: Optional[float] = MEAN,
    m: Optional[int] = M,
    concentration: float = CONCENTRATION,
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
):
    """Frequency with which the certified bound falls below the true mean."""

    def build():
        return {
            "spec_means": parse_probability_list(spec, "--spec") if spec is not None else None,
            "estimator": method,
            "synthetic": _synthetic_spec(synthetic, means, mean, m, concentration),
            "n": n,
            "T": T,
            "m": m,
            "delta": delta,
            "trials": trials,
            "seed": seed,
            "output": output,
            "format": format,
        }

    _execute(RunCommand.SIMULATE_COVERAGE, build)


@app.command("verify-theorem3")
def verify_theorem3(
    spec: str = typer.Option(..., "--spec", help="Bernoulli means p1,...,pT."),
    grid: str = typer.Option(..., "--grid", help="Thresholds t1,t2,... each <= mean(p)."),
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
):
    """Exact lower tails against the Chernoff-kl bound exp(-T kl(t, p))."""
    _execute(
        RunCommand.VERIFY_THEOREM3,
        lambda: {
            "spec_means": parse_probability_list(spec, "--spec"),
            "grid": parse_probability_list(grid, "--grid"),
            "output": output,
            "format": format,
        },
    )


@app.command("budget-compare")
def budget_compare(
    m: int = typer.Option(..., "--m", help="Dataset size."),
    n: int = typer.Option(..., "--n", help="Classic passes."),
    q: float = typer.Option(..., "--q", help="Common empirical mean."),
    delta: Optional[float] = DELTA,
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
):
    """Classic versus fresh slack and bound at an equal evaluation budget."""
    fields = dict(locals())
    _execute(RunCommand.BUDGET_COMPARE, lambda: dict(fields))


@app.command("klinv")
def klinv(
    q: float = typer.Option(..., "--q", help="Empirical mean in [0, 1]."),
    c: float = typer.Option(..., "--c", help="Slack in nats."),
    output: Optional[Path] = OUTPUT,
    format: OutputFormat = FORMAT,
):
    """Certified upper inverse sup{p : kl(q, p) <= c}."""
    _execute(RunCommand.KLINV, lambda: {"q": q, "c": c, "output": output, "format": format})


@app.command("verify-certificate")
def verify_certificate(
    input: Path = typer.Option(..., "--input", help="Certificate JSON file."),
    output: Optional[Path] = OUTPUT,
):
    """Audit a certificate; exits 4 when its bound does not recompute."""
    _execute(RunCommand.VERIFY_CERTIFICATE, lambda: {"input": input, "output": output})


@app.command("lab")
def lab(
    quick: bool = typer.Option(False, "--quick", help="Skip the Monte-Carlo coverage checks."),
    output: Optional[Path] = OUTPUT,
):
    """Run the verification suite; exits 4 when any check fails."""
    _execute(RunCommand.LAB, lambda: {"quick": quick, "output": output})
