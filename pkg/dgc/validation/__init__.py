"""
Validation measures for filled grids.
"""

from dgc.validation.metrics import (
    AGGREGATE_COLUMNS,
    METRIC_COLUMNS,
    AggregateReport,
    MetricReport,
    aggregate,
    aggregate_frame,
    empirical_cdf,
    interpolation_metrics,
    local_errors,
    metrics_frame,
    misclassification,
)

__all__ = [
    "AGGREGATE_COLUMNS",
    "METRIC_COLUMNS",
    "AggregateReport",
    "MetricReport",
    "aggregate",
    "aggregate_frame",
    "empirical_cdf",
    "interpolation_metrics",
    "local_errors",
    "metrics_frame",
    "misclassification",
]
