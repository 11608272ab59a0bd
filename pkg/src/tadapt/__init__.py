"""Post-hoc temporal adaptation metrics for accuracy matrices."""

__version__ = "0.1.0"

from .config import ConfigError, MetricConfig
from .kernels import (
    HorizonResult,
    NotEvaluableError,
    PreconditionError,
    TasResult,
    TtrMatrix,
    adaptation_scores,
    compute_ttr,
    drift_horizon,
    drift_horizons,
    drift_statistic,
    evaluate_model,
    stability_horizon,
    stability_horizons,
    temporal_adaptation_score,
)
from .matrix import AccuracyMatrix, MatrixFormatError, TimeAxis, eval_row, parse_matrix, serialize_matrix
from .report import ReportError, comparison_table, heatmap_data, timeline_series
from .result import MetricReport, TrainTimeRecord
from .synth import ScenarioSpec, generate, scenario_suite

__all__ = [
    "AccuracyMatrix",
    "ConfigError",
    "HorizonResult",
    "MatrixFormatError",
    "MetricConfig",
    "MetricReport",
    "NotEvaluableError",
    "PreconditionError",
    "ReportError",
    "ScenarioSpec",
    "TasResult",
    "TimeAxis",
    "TrainTimeRecord",
    "TtrMatrix",
    "adaptation_scores",
    "comparison_table",
    "compute_ttr",
    "drift_horizon",
    "drift_horizons",
    "drift_statistic",
    "eval_row",
    "evaluate_model",
    "generate",
    "heatmap_data",
    "parse_matrix",
    "scenario_suite",
    "serialize_matrix",
    "stability_horizon",
    "stability_horizons",
    "temporal_adaptation_score",
    "timeline_series",
]
