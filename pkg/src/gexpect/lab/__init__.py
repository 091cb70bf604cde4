"""Experiment runner: suite configs, reports and the suites themselves."""

from .config import SUITES, ConfigError, SuiteConfig, Tolerances, all_defaults, default_config, load_config
from .report import COLUMNS, Row, SuiteReport, emit_report, format_report, read_report
from .suites import (
    rotation_reduction_check,
    run_compare,
    run_divergence_suite,
    run_equivalence_suite,
    run_suite,
    shrinks,
)

__all__ = [
    "SUITES", "ConfigError", "SuiteConfig", "Tolerances", "all_defaults", "default_config", "load_config",
    "COLUMNS", "Row", "SuiteReport", "emit_report", "format_report", "read_report",
    "rotation_reduction_check", "run_compare", "run_divergence_suite", "run_equivalence_suite",
    "run_suite", "shrinks",
]
