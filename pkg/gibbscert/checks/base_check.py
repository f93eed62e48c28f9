import logging
import traceback
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeoutError, as_completed
from datetime import datetime, timezone
from typing import Any, Dict, List

from ..exceptions import CertificationError
from ..models import CheckStatus


class CheckResult:
    """Standardized check result structure"""

    def __init__(self, check_name: str):
        self.check_name = check_name
        self.start_time = datetime.now(timezone.utc)
        self.end_time = None
        self.duration_seconds = None
        self.status = CheckStatus.PENDING
        self.message = ""
        self.details = {}
        self.error = None
        self.error_type = None
        self.traceback = None
        self.remediation = None

    @property
    def success(self) -> bool:
        return self.status == CheckStatus.PASSED

    def start(self):
        self.start_time = datetime.now(timezone.utc)
        self.status = CheckStatus.RUNNING

    def _finish(self, status: CheckStatus, message: str):
        self.end_time = datetime.now(timezone.utc)
        self.duration_seconds = (self.end_time - self.start_time).total_seconds()
        self.status = status
        self.message = message

    def complete(self, success: bool, message: str, details: Dict[str, Any] = None):
        self._finish(CheckStatus.PASSED if success else CheckStatus.FAILED, message)
        if details:
            self.details.update(details)

    def fail(self, message: str, error: Exception = None, remediation: str = None):
        self._finish(CheckStatus.ERROR if error else CheckStatus.FAILED, message)
        if error:
            self.error = str(error)
            self.error_type = type(error).__name__
            self.traceback = traceback.format_exc()
            if isinstance(error, CertificationError):
                remediation = remediation or error.remediation
        self.remediation = remediation

    def skip(self, message: str):
        self._finish(CheckStatus.SKIPPED, message)

    def to_dict(self) -> Dict[str, Any]:
        # Timings and tracebacks are left out so reports stay reproducible.
        return {
            "check_name": self.check_name,
            "status": self.status.value,
            "message": self.message,
            "details": self.details,
            "error": self.error,
            "error_type": self.error_type,
            "remediation": self.remediation,
        }


class BaseCheck(ABC):
    """Base class for lab verification checks"""

    def __init__(self):
        self.logger = logging.getLogger(
            f"{self.__class__.__module__}.{self.__class__.__name__}"
        )

    @property
    @abstractmethod
    def check_name(self) -> str:
        """Human-readable name of the check"""
        pass

    @property
    @abstractmethod
    def check_description(self) -> str:
        """Brief description of the property being checked"""
        pass

    @property
    def check_id(self) -> str:
        return self.__class__.__name__.lower().replace("check", "")

    @property
    def is_slow(self) -> bool:
        """Monte-Carlo checks that take minutes rather than seconds"""
        return False

    @property
    def depends_on(self) -> List[str]:
        return []

    @property
    def timeout_seconds(self) -> int:
        return 300

    @abstractmethod
    def run_check(self) -> Dict[str, Any]:
        """Run the check; return {"success", "message", "details"}"""
        pass

    def execute(self) -> CheckResult:
        """Execute the check with timeout enforcement and error handling"""
        result = CheckResult(self.check_name)
        result.start()
        self.logger.info(f"Starting {self.check_name}")

        try:
            with ThreadPoolExecutor(max_workers=1) as executor:
                future = executor.submit(self.run_check)
                outcome = future.result(timeout=self.timeout_seconds)
            result.complete(
                outcome.get("success", False),
                outcome.get("message", "Check completed"),
                outcome.get("details", {}),
            )
        except FutureTimeoutError:
            result.fail(
                f"Check timed out after {self.timeout_seconds} seconds",
                remediation="Reduce the number of trials or raise the timeout",
            )
            self.logger.error(f"{self.check_name} timed out")
        except Exception as e:
            result.fail(f"Check failed with error: {str(e)}", error=e)
            self.logger.error(f"{self.check_name} failed: {str(e)}")

        self.logger.info(
            f"Completed {self.check_name} with status {result.status.value} "
            f"in {result.duration_seconds:.3f}s",
            extra={"check_id": self.check_id, "duration_seconds": result.duration_seconds},
        )
        return result


class CheckSuite:
    """Manages and executes multiple checks"""

    def __init__(self):
        self.checks: Dict[str, BaseCheck] = {}
        self.logger = logging.getLogger(__name__)

    def register_check(self, check: BaseCheck):
        self.checks[check.check_id] = check
        self.logger.debug(f"Registered check: {check.check_name} ({check.check_id})")

    def list_checks(self) -> List[Dict[str, Any]]:
        return [
            {
                "id": check.check_id,
                "name": check.check_name,
                "description": check.check_description,
                "is_slow": check.is_slow,
                "depends_on": check.depends_on,
            }
            for check in self.checks.values()
        ]

    def run_all_checks(self, skip_slow: bool = False, max_workers: int = 4) -> Dict[str, CheckResult]:
        """Run all checks, parallelizing those whose dependencies have passed"""
        results: Dict[str, CheckResult] = {}
        remaining = self._resolve_dependencies()

        while remaining:
            ready = []
            deferred = []
            for check_id in remaining:
                check = self.checks[check_id]
                if skip_slow and check.is_slow:
                    skipped = CheckResult(check.check_name)
                    skipped.skip("Slow check skipped")
                    results[check_id] = skipped
                    continue
                if not self._dependencies_met(check, results):
                    deps_failed = any(
                        dep_id in results and results[dep_id].status != CheckStatus.PASSED
                        for dep_id in check.depends_on
                    )
                    if deps_failed:
                        skipped = CheckResult(check.check_name)
                        skipped.skip("Dependencies not met")
                        results[check_id] = skipped
                    else:
                        deferred.append(check_id)
                    continue
                ready.append(check_id)

            if not ready:
                for check_id in deferred:
                    skipped = CheckResult(self.checks[check_id].check_name)
                    skipped.skip("Dependencies not met")
                    results[check_id] = skipped
                break

            with ThreadPoolExecutor(max_workers=max(1, min(len(ready), max_workers))) as executor:
                future_to_id = {executor.submit(self.checks[cid].execute): cid for cid in ready}
                for future in as_completed(future_to_id):
                    check_id = future_to_id[future]
                    try:
                        results[check_id] = future.result()
                    except Exception as e:
                        result = CheckResult(self.checks[check_id].check_name)
                        result.fail(f"Unexpected error: {str(e)}", error=e)
                        results[check_id] = result

            remaining = deferred

        # Registration order, independent of completion order.
        return {check_id: results[check_id] for check_id in self.checks if check_id in results}

    def _resolve_dependencies(self) -> List[str]:
        visited = set()
        order = []

        def visit(check_id: str):
            if check_id in visited:
                return
            visited.add(check_id)
            check = self.checks.get(check_id)
            if check:
                for dep in check.depends_on:
                    if dep in self.checks:
                        visit(dep)
                order.append(check_id)

        for check_id in self.checks:
            visit(check_id)
        return order

    def _dependencies_met(self, check: BaseCheck, results: Dict[str, CheckResult]) -> bool:
        return all(
            dep_id in results and results[dep_id].status == CheckStatus.PASSED
            for dep_id in check.depends_on
        )
