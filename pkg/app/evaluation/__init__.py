"""Oracle-equivalence suites behind `verify`."""

from .equivalence import (
    SUITES,
    Check,
    SuiteReport,
    central_differences,
    failing_cases,
    run_suite,
)

__all__ = [
    "SUITES",
    "Check",
    "SuiteReport",
    "central_differences",
    "failing_cases",
    "run_suite",
]
