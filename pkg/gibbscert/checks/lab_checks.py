"""
Named verification checks over kl_core and the tail lab.

Every check draws its random inputs from a fixed counter stream, so a lab
report is reproducible run to run.
"""

import math
from typing import Any, Dict, List

from ..config import Settings
from ..kl_core import (kl, kl_inverse_upper, pinsker_relaxation,
                       round_trip_tolerance)
from ..models import EstimatorMethod, HeterogeneousBernoulliSpec, SyntheticPosteriorSpec
from ..services.tail_lab_service import (TailLabService, enumerate_lower_tail,
                                         exact_lower_tail, poisson_binomial_pmf)
from ..utils.seeding import counter_stream
from .base_check import BaseCheck

LAB_SEED = 20240917


def random_inversion_pairs(count: int, seed: int = LAB_SEED):
    """`count` pairs with q in [0, 0.99] and c in (0, 5]."""
    rng = counter_stream(seed, 0, 0, 10)
    qs = 0.99 * rng.random(count)
    cs = 5.0 * (1.0 - rng.random(count))
    return [(float(q), float(c)) for q, c in zip(qs, cs)]


def random_bernoulli_specs(count: int, max_T: int, seed: int = LAB_SEED) -> List[HeterogeneousBernoulliSpec]:
    rng = counter_stream(seed, 0, 0, 11)
    specs = []
    for _ in range(count):
        T = int(rng.integers(1, max_T + 1))
        specs.append(HeterogeneousBernoulliSpec(means=[float(p) for p in rng.random(T)]))
    return specs


class _LabCheck(BaseCheck):
    def __init__(self, settings: Settings):
        super().__init__()
        self.settings = settings
        self.lab = TailLabService(settings)


class KlInversionCheck(_LabCheck):
    @property
    def check_name(self) -> str:
        return "kl inversion round trip"

    @property
    def check_description(self) -> str:
        return "kl_inverse_upper(q, c) is within tol of the supremum on the conservative side"

    def run_check(self) -> Dict[str, Any]:
        pairs = random_inversion_pairs(1000)
        tol = self.settings.inversion_tolerance
        bad = []
        for q, c in pairs:
            bound = kl_inverse_upper(q, c, tol=tol)
            if bound < 1.0 and not c <= kl(q, bound) <= c + round_trip_tolerance(q, bound):
                bad.append({"q": q, "c": c, "bound": float(bound)})
            if kl(q, max(q, bound - 2 * tol)) >= c:
                bad.append({"q": q, "c": c, "bound": float(bound), "loose": True})
            if kl_inverse_upper(q, 0.0) != q:
                bad.append({"q": q, "c": 0.0})
            closed_form = -math.expm1(-c)
            if abs(kl_inverse_upper(0.0, c) - closed_form) > 1e-10:
                bad.append({"q": 0.0, "c": c, "expected": closed_form})
        return {
            "success": not bad,
            "message": f"{len(pairs)} pairs, {len(bad)} violations",
            "details": {"pairs": len(pairs), "violations": bad[:10]},
        }


class PinskerDominanceCheck(_LabCheck):
    @property
    def check_name(self) -> str:
        return "pinsker dominance"

    @property
    def check_description(self) -> str:
        return "kl_inverse_upper(q, c) never exceeds q + sqrt(c/2)"

    def run_check(self) -> Dict[str, Any]:
        pairs = random_inversion_pairs(1000)
        bad = [
            {"q": q, "c": c}
            for q, c in pairs
            if kl_inverse_upper(q, c) > pinsker_relaxation(q, c) + 1e-12
        ]
        return {
            "success": not bad,
            "message": f"{len(pairs)} pairs, {len(bad)} violations",
            "details": {"violations": bad[:10]},
        }


class TailBoundCheck(_LabCheck):
    @property
    def check_name(self) -> str:
        return "chernoff-kl tail soundness"

    @property
    def check_description(self) -> str:
        return "exact Poisson-binomial lower tails never exceed exp(-T kl(t, p))"

    @property
    def depends_on(self) -> List[str]:
        return ["tailoracle"]

    def run_check(self) -> Dict[str, Any]:
        specs = random_bernoulli_specs(200, 14)
        violations = 0
        for spec in specs:
            p = math.fsum(spec.means) / spec.T
            grid = [p * (k / 14) for k in range(15)]
            violations += sum(
                not report.satisfied for report in self.lab.verify_tail_bound(spec, grid)
            )
        return {
            "success": violations == 0,
            "message": f"{len(specs)} specs x 15 thresholds, {violations} violations",
            "details": {"specs": len(specs), "violations": violations},
        }


class TailOracleCheck(_LabCheck):
    @property
    def check_name(self) -> str:
        return "tail oracle agreement"

    @property
    def check_description(self) -> str:
        return "the O(T^2) recursion matches 2^T enumeration and its mass sums to 1"

    def run_check(self) -> Dict[str, Any]:
        specs = random_bernoulli_specs(100, 10, seed=LAB_SEED + 1)
        worst = 0.0
        mass_errors = []
        for spec in specs:
            mass = math.fsum(poisson_binomial_pmf(spec.means))
            if abs(mass - 1.0) > spec.T * 1e-15:
                mass_errors.append({"T": spec.T, "mass": mass})
            for k in range(spec.T + 1):
                t = k / spec.T
                worst = max(worst, abs(exact_lower_tail(spec, t) - enumerate_lower_tail(spec, t)))
        return {
            "success": worst <= 1e-12 and not mass_errors,
            "message": f"largest disagreement {worst:.3e}",
            "details": {"max_abs_difference": worst, "mass_errors": mass_errors[:10]},
        }


class CoverageCheck(_LabCheck):
    @property
    def check_name(self) -> str:
        return "kl-inverse coverage"

    @property
    def check_description(self) -> str:
        return "the kl-inverse bound fails at most delta + 3 standard errors of the time"

    @property
    def is_slow(self) -> bool:
        return True

    def run_check(self) -> Dict[str, Any]:
        trials = self.settings.default_trials
        runs = []
        for T, delta in ((100, 0.05), (500, 0.1), (1000, 0.01)):
            profiles = {
                "homogeneous": HeterogeneousBernoulliSpec.homogeneous(0.3, T),
                "heterogeneous": HeterogeneousBernoulliSpec(means=[i / T for i in range(1, T + 1)]),
            }
            for profile, spec in profiles.items():
                report = self.lab.coverage_simulation(spec, delta, trials, LAB_SEED + T)
                runs.append(
                    {
                        "T": T,
                        "delta": delta,
                        "profile": profile,
                        "failure_rate": report.failure_rate,
                        "threshold": report.acceptance_threshold,
                        "passed": report.within_tolerance,
                    }
                )
        return {
            "success": all(run["passed"] for run in runs),
            "message": f"{sum(run['passed'] for run in runs)}/{len(runs)} runs within tolerance",
            "details": {"trials": trials, "runs": runs},
        }


class EstimatorCoverageCheck(_LabCheck):
    @property
    def check_name(self) -> str:
        return "estimator coverage"

    @property
    def check_description(self) -> str:
        return "certificates on synthetic posteriors cover the known Gibbs risk"

    @property
    def is_slow(self) -> bool:
        return True

    @property
    def depends_on(self) -> List[str]:
        return ["coverage"]

    @property
    def timeout_seconds(self) -> int:
        return 1800

    def run_check(self) -> Dict[str, Any]:
        trials = self.settings.default_trials
        cases = [(EstimatorMethod.FRESH, risk) for risk in (0.05, 0.3, 0.7)]
        cases += [(EstimatorMethod.TESTSET, 0.3), (EstimatorMethod.SUBSAMPLED, 0.3)]
        runs = []
        for method, risk in cases:
            spec = SyntheticPosteriorSpec.constant(risk, 100)
            report = self.lab.estimator_coverage(method, spec, 5, 0.1, trials, LAB_SEED)
            runs.append(
                {
                    "method": method.value,
                    "gibbs_risk": risk,
                    "failure_rate": report.failure_rate,
                    "threshold": report.acceptance_threshold,
                    "passed": report.within_tolerance,
                }
            )
        return {
            "success": all(run["passed"] for run in runs),
            "message": f"{sum(run['passed'] for run in runs)}/{len(runs)} runs within tolerance",
            "details": {"trials": trials, "runs": runs},
        }


class BudgetSavingsCheck(_LabCheck):
    @property
    def check_name(self) -> str:
        return "equal-budget savings"

    @property
    def check_description(self) -> str:
        return "fresh slack is classic slack / m and 150000 classic passes need 3 fresh passes at m=50000"

    def run_check(self) -> Dict[str, Any]:
        ratios = {}
        for m in (1, 10, 50000):
            comparison = self.lab.budget_compare(m, 150000, 0.025, 0.1)
            ratio = comparison.slack_classic / comparison.slack_fresh_equal_budget
            ratios[str(m)] = ratio
            # Three roundings separate the two slacks.
            if abs(ratio - m) > 4 * m * 2.0**-52:
                return {"success": False, "message": f"slack ratio {ratio!r} != m={m}", "details": ratios}
        passes = self.lab.budget_compare(50000, 150000, 0.025, 0.1).fresh_passes_for_equal_slack
        return {
            "success": passes == 3,
            "message": f"fresh passes for equal slack at m=50000: {passes}",
            "details": {"ratios": ratios, "fresh_passes": passes},
        }


def all_checks(settings: Settings) -> List[BaseCheck]:
    return [
        KlInversionCheck(settings),
        PinskerDominanceCheck(settings),
        TailOracleCheck(settings),
        TailBoundCheck(settings),
        CoverageCheck(settings),
        EstimatorCoverageCheck(settings),
        BudgetSavingsCheck(settings),
    ]
