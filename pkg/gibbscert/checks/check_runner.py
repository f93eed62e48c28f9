import logging
from typing import Any, Dict, Optional

from ..config import Settings, get_settings
from ..models import CheckStatus
from .base_check import CheckSuite
from .lab_checks import all_checks


class CheckRunner:
    """Builds the lab suite and summarizes a run"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)
        self.suite = CheckSuite()
        for check in all_checks(self.settings):
            self.suite.register_check(check)
        self.logger.info(f"Registered {len(self.suite.checks)} lab checks")

    def run_all_checks(self, skip_slow: bool = False) -> Dict[str, Any]:
        results = self.suite.run_all_checks(
            skip_slow=skip_slow, max_workers=self.settings.max_workers
        )
        all_passed = all(
            r.status == CheckStatus.PASSED
            for r in results.values()
            if r.status != CheckStatus.SKIPPED
        )
        summary = {
            "overall_status": "passed" if all_passed else "failed",
            "check_count": len(results),
            "passed_count": sum(r.status == CheckStatus.PASSED for r in results.values()),
            "failed_count": sum(
                r.status in (CheckStatus.FAILED, CheckStatus.ERROR) for r in results.values()
            ),
            "skipped_count": sum(r.status == CheckStatus.SKIPPED for r in results.values()),
            "results": {check_id: result.to_dict() for check_id, result in results.items()},
        }
        self.logger.info(
            f"Lab finished: {summary['overall_status']}",
            extra={k: v for k, v in summary.items() if k != "results"},
        )
        return summary
