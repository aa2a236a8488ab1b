"""Offline evaluation: metrics, benchmark suite, ablations, failure taxonomy."""

from .metrics import MetricsError, UnknownRowId, detection_metrics, ranking_metrics
from .suite import CASE_CLASSES, UNSAFE_CLASSES, BenchmarkCase, build_default_suite
from .bench import (
    ABLATION_TOGGLES,
    AblationReport,
    BenchmarkReport,
    EvalError,
    SuiteTooSmall,
    SystemUnderTest,
    UnknownToggle,
    ablate,
    negative_case_classify,
    run_offline_benchmark,
)

__all__ = [
    "ABLATION_TOGGLES",
    "AblationReport",
    "BenchmarkCase",
    "BenchmarkReport",
    "CASE_CLASSES",
    "EvalError",
    "MetricsError",
    "SuiteTooSmall",
    "SystemUnderTest",
    "UNSAFE_CLASSES",
    "UnknownRowId",
    "UnknownToggle",
    "ablate",
    "build_default_suite",
    "detection_metrics",
    "negative_case_classify",
    "ranking_metrics",
    "run_offline_benchmark",
]
