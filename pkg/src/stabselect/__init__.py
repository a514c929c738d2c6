"""Stability-aware model selection for multi-cohort tabular classification."""

__version__ = "0.1.0"

from .data_model import (
    CohortPlan,
    FeatureTable,
    FoldMetrics,
    PipelineSpec,
    RotationRecord,
    ScoreCard,
    validate_table,
)
from .ingestion import CsvSchema, SyntheticConfig, generate_synthetic, read_csv, write_csv
from .harness import compare_top, grid_search, run_rotation, run_sweep, stratified_folds
from .metrics import compute_metrics
from .preprocessing import fit_minmax, transform_minmax
from .reduction import apply_reducer, fit_reducer
from .classification import fit_classifier, predict_label, predict_score
from .scoring import final_score, normalize_scores, rank_pipelines

__all__ = [
    "CohortPlan",
    "CsvSchema",
    "FeatureTable",
    "FoldMetrics",
    "PipelineSpec",
    "RotationRecord",
    "ScoreCard",
    "SyntheticConfig",
    "apply_reducer",
    "compare_top",
    "compute_metrics",
    "final_score",
    "fit_classifier",
    "fit_minmax",
    "fit_reducer",
    "generate_synthetic",
    "grid_search",
    "normalize_scores",
    "predict_label",
    "predict_score",
    "rank_pipelines",
    "read_csv",
    "run_rotation",
    "run_sweep",
    "stratified_folds",
    "transform_minmax",
    "validate_table",
    "write_csv",
]
