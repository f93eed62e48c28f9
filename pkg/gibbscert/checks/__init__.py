from .base_check import BaseCheck, CheckResult, CheckSuite
from .check_runner import CheckRunner

__all__ = ["BaseCheck", "CheckResult", "CheckSuite", "CheckRunner"]
