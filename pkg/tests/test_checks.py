import logging
from typing import Any, Dict, List

import pytest

from gibbscert.checks import BaseCheck, CheckRunner, CheckSuite
from gibbscert.checks.lab_checks import (random_bernoulli_specs,
                                         random_inversion_pairs)
from gibbscert.exceptions import ValidationError
from gibbscert.models import CheckStatus


class StubCheck(BaseCheck):
    def __init__(self, check_id: str, outcome: Any = True, depends_on: List[str] = (),
                 is_slow: bool = False):
        super().__init__()
        self._id = check_id
        self._outcome = outcome
        self._depends_on = list(depends_on)
        self._is_slow = is_slow
        self.calls = 0

    @property
    def check_id(self) -> str:
        return self._id

    @property
    def check_name(self) -> str:
        return f"Stub {self._id}"

    @property
    def check_description(self) -> str:
        return "stub"

    @property
    def depends_on(self) -> List[str]:
        return self._depends_on

    @property
    def is_slow(self) -> bool:
        return self._is_slow

    def run_check(self) -> Dict[str, Any]:
        self.calls += 1
        if isinstance(self._outcome, Exception):
            raise self._outcome
        return {"success": self._outcome, "message": "done", "details": {"id": self._id}}


def suite_of(*checks):
    suite = CheckSuite()
    for check in checks:
        suite.register_check(check)
    return suite


class TestCheckSuite:
    def test_statuses(self):
        suite = suite_of(
            StubCheck("ok"),
            StubCheck("bad", outcome=False),
            StubCheck("boom", outcome=ValidationError("broken", remediation="fix it")),
        )
        results = suite.run_all_checks()
        assert results["ok"].status == CheckStatus.PASSED
        assert results["ok"].details == {"id": "ok"}
        assert results["bad"].status == CheckStatus.FAILED
        assert results["boom"].status == CheckStatus.ERROR
        assert results["boom"].error_type == "ValidationError"
        assert results["boom"].remediation == "fix it"

    def test_failed_dependency_skips_dependents(self):
        dependent = StubCheck("child", depends_on=["parent"])
        results = suite_of(StubCheck("parent", outcome=False), dependent).run_all_checks()
        assert results["child"].status == CheckStatus.SKIPPED
        assert dependent.calls == 0

    def test_dependency_order(self):
        results = suite_of(StubCheck("child", depends_on=["parent"]), StubCheck("parent")).run_all_checks()
        assert list(results) == ["child", "parent"]
        assert results["child"].status == CheckStatus.PASSED

    def test_skip_slow(self):
        slow = StubCheck("slow", is_slow=True)
        results = suite_of(StubCheck("fast"), slow).run_all_checks(skip_slow=True)
        assert results["slow"].status == CheckStatus.SKIPPED
        assert slow.calls == 0

    def test_report_has_no_timings(self):
        result = suite_of(StubCheck("ok")).run_all_checks()["ok"]
        assert result.duration_seconds is not None
        assert "duration_seconds" not in result.to_dict()

    def test_durations_are_logged(self, caplog):
        with caplog.at_level(logging.INFO):
            StubCheck("ok").execute()
        record = next(r for r in caplog.records if r.getMessage().startswith("Completed Stub ok"))
        assert record.check_id == "ok"
        assert record.duration_seconds >= 0.0

    def test_list_checks(self):
        listing = suite_of(StubCheck("a", depends_on=["b"]), StubCheck("b")).list_checks()
        assert [entry["id"] for entry in listing] == ["a", "b"]
        assert listing[0]["depends_on"] == ["b"]


class TestLabInputs:
    def test_inversion_pairs_are_reproducible(self):
        assert random_inversion_pairs(20) == random_inversion_pairs(20)
        for q, c in random_inversion_pairs(50):
            assert 0.0 <= q <= 0.99
            assert 0.0 < c <= 5.0

    def test_bernoulli_specs(self):
        specs = random_bernoulli_specs(30, max_T=10)
        assert len(specs) == 30
        assert all(1 <= spec.T <= 10 for spec in specs)


class TestCheckRunner:
    def test_registered_checks(self, settings):
        ids = [entry["id"] for entry in CheckRunner(settings).suite.list_checks()]
        assert ids == [
            "klinversion", "pinskerdominance", "tailoracle", "tailbound",
            "coverage", "estimatorcoverage", "budgetsavings",
        ]

    def test_quick_run_passes(self, settings):
        summary = CheckRunner(settings).run_all_checks(skip_slow=True)
        assert summary["overall_status"] == "passed", summary
        assert summary["skipped_count"] == 2
        assert summary["results"]["coverage"]["status"] == "skipped"
        assert summary["results"]["tailbound"]["status"] == "passed"

    @pytest.mark.slow
    def test_full_run_passes(self, settings):
        summary = CheckRunner(settings).run_all_checks()
        assert summary["overall_status"] == "passed", summary
        assert summary["failed_count"] == 0
