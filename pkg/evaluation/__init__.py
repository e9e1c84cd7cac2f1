from .metrics import (
    EvalReport,
    PRFScores,
    Setting,
    assign_labels,
    average_precision,
    evaluate,
    mean_average_precision,
    prf_suite,
)
from .report import parse_report, read_report, render_report, write_report

__all__ = [
    "EvalReport",
    "PRFScores",
    "Setting",
    "assign_labels",
    "average_precision",
    "evaluate",
    "mean_average_precision",
    "parse_report",
    "prf_suite",
    "read_report",
    "render_report",
    "write_report",
]
