"""Shared domain types: feature tables, cohort plans, pipeline specs, results.

All types are immutable after construction and safe to share across worker
processes. ``FeatureTable`` construction is permissive (shape coherence only)
so that malformed tables can be inspected; ``validate_table`` enumerates every
invariant violation as data rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

METRIC_NAMES = ("accuracy", "f1", "precision", "recall", "roc_auc")


class TableValidationError(ValueError):
    """Raised when an operation requires a valid FeatureTable and gets violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid feature table: " + "; ".join(self.violations))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FeatureTable:
    """Subjects x features matrix with subject ids, cohort ids and binary labels."""

    subject_ids: tuple[str, ...]
    cohort_ids: tuple[str, ...]
    labels: tuple[int, ...]
    feature_names: tuple[str, ...]
    values: np.ndarray  # (n_subjects, n_features), read-only

    def __init__(self, subject_ids, cohort_ids, labels, feature_names, values):
        object.__setattr__(self, "subject_ids", tuple(str(s) for s in subject_ids))
        object.__setattr__(self, "cohort_ids", tuple(str(c) for c in cohort_ids))
        object.__setattr__(self, "labels", tuple(int(v) for v in labels))
        object.__setattr__(self, "feature_names", tuple(str(f) for f in feature_names))
        values = np.atleast_2d(np.asarray(values, dtype=float))
        object.__setattr__(self, "values", _readonly(values))

    @property
    def n_subjects(self) -> int:
        return len(self.subject_ids)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def cohort_names(self) -> tuple[str, ...]:
        """Distinct cohort names in order of first appearance."""
        seen: dict[str, None] = {}
        for c in self.cohort_ids:
            seen.setdefault(c)
        return tuple(seen)

    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=int)

    def rows_for_cohorts(self, cohorts) -> np.ndarray:
        """Row indices whose cohort id is in ``cohorts``, in table order."""
        wanted = set(cohorts)
        return np.asarray(
            [i for i, c in enumerate(self.cohort_ids) if c in wanted], dtype=int
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureTable):
            return NotImplemented
        return (
            self.subject_ids == other.subject_ids
            and self.cohort_ids == other.cohort_ids
            and self.labels == other.labels
            and self.feature_names == other.feature_names
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_table(table: FeatureTable) -> ValidationReport:
    """Check every FeatureTable invariant; idempotent and side-effect free."""
    v: list[str] = []
    n = len(table.subject_ids)
    if n < 1:
        v.append("table has no subjects")
    if len(table.cohort_ids) != n:
        v.append(f"cohort_ids length {len(table.cohort_ids)} != n_subjects {n}")
    if len(table.labels) != n:
        v.append(f"labels length {len(table.labels)} != n_subjects {n}")
    if table.values.shape[0] != n:
        v.append(f"values has {table.values.shape[0]} rows, expected {n}")
    if table.values.shape[1] != len(table.feature_names):
        v.append(
            f"values has {table.values.shape[1]} columns, "
            f"expected {len(table.feature_names)} feature names"
        )

    seen_ids: set[str] = set()
    for i, sid in enumerate(table.subject_ids):
        if sid in seen_ids:
            v.append(f"duplicate subject_id '{sid}' at row {i}")
        seen_ids.add(sid)
    seen_feats: set[str] = set()
    for j, name in enumerate(table.feature_names):
        if name in seen_feats:
            v.append(f"duplicate feature name '{name}' at column {j}")
        seen_feats.add(name)

    for i, lab in enumerate(table.labels[:n]):
        if lab not in (0, 1):
            v.append(f"label not in {{0,1}} at row {i} (got {lab})")
    for i, coh in enumerate(table.cohort_ids[:n]):
        if not coh:
            v.append(f"empty cohort id at row {i}")

    if table.values.size and not np.all(np.isfinite(table.values)):
        bad = np.argwhere(~np.isfinite(table.values))
        for i, j in bad[:20]:  # cap the report, not the check
            v.append(f"non-finite value at row {i}, column {j}")
        if len(bad) > 20:
            v.append(f"... and {len(bad) - 20} more non-finite values")

    return ValidationReport(ok=not v, violations=tuple(v))


def require_valid(table: FeatureTable) -> FeatureTable:
    """Return the table unchanged, raising TableValidationError on violations."""
    report = validate_table(table)
    if not report.ok:
        raise TableValidationError(list(report.violations))
    return table


@dataclass(frozen=True)
class Rotation:
    """One train/test split: every cohort except ``test_cohort`` trains."""

    index: int  # 1-based
    test_cohort: str
    train_cohorts: tuple[str, ...]


@dataclass(frozen=True)
class CohortPlan:
    """Rotational partitioning: each non-cv-only cohort serves once as the
    external test set; cv-only cohorts train in every rotation."""

    cohort_names: tuple[str, ...]
    cv_only: frozenset[str]
    rotations: tuple[Rotation, ...] = field(init=False)

    def __init__(self, cohort_names, cv_only=()):
        names = tuple(str(c) for c in cohort_names)
        if len(set(names)) != len(names):
            raise ValueError("cohort names must be unique")
        cv = frozenset(str(c) for c in cv_only)
        unknown = cv - set(names)
        if unknown:
            raise ValueError(f"cv_only cohorts not in plan: {sorted(unknown)}")
        rotations = tuple(
            Rotation(
                index=r + 1,
                test_cohort=name,
                train_cohorts=tuple(c for c in names if c != name),
            )
            for r, name in enumerate(c for c in names if c not in cv)
        )
        if not rotations:
            raise ValueError("plan needs at least one non-cv-only cohort")
        object.__setattr__(self, "cohort_names", names)
        object.__setattr__(self, "cv_only", cv)
        object.__setattr__(self, "rotations", rotations)

    @property
    def n_rotations(self) -> int:
        return len(self.rotations)


@dataclass(frozen=True)
class PipelineSpec:
    """One (dimension reducer, classifier) combination with its parameters."""

    reducer_id: str
    classifier_id: str
    reducer_params: Mapping[str, object] = field(default_factory=dict)
    classifier_params: Mapping[str, object] = field(default_factory=dict)
    target_dim: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError("target_dim must be >= 1")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "reducer_params", dict(self.reducer_params))
        object.__setattr__(self, "classifier_params", dict(self.classifier_params))

    @property
    def label(self) -> str:
        """Human id used in reports and tie-breaking, e.g. 'MI+ETr'."""
        return f"{self.reducer_id}+{self.classifier_id}"


@dataclass(frozen=True)
class FoldMetrics:
    """The five evaluation metrics for one fold or one external evaluation."""

    accuracy: float
    f1: float
    precision: float
    recall: float
    roc_auc: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.accuracy, self.f1, self.precision, self.recall, self.roc_auc]
        )

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class FoldDetail:
    """Per-fold evaluation record kept for dumps and leakage assertions."""

    fold: int
    cv: FoldMetrics
    ext: FoldMetrics
    selected_features: tuple[str, ...] | None  # None for attribute extractors
    minmax_fingerprint: str
    grid_params: dict | None = None  # params chosen by grid search, if enabled


@dataclass(frozen=True)
class RotationRecord:
    """Per-(pipeline, rotation) means and SDs for CV and external evaluation.

    ``cv_mean``/``cv_sd`` etc. are 5-tuples in METRIC_NAMES order; the SD is
    the population SD across the k fold models. External values are recorded
    for reporting only and never enter scoring.
    """

    pipeline: PipelineSpec
    rotation: int  # 1-based
    test_cohort: str
    cv_mean: tuple[float, ...]
    cv_sd: tuple[float, ...]
    ext_mean: tuple[float, ...]
    ext_sd: tuple[float, ...]
    folds: tuple[FoldDetail, ...] = ()

    def __post_init__(self):
        for name in ("cv_mean", "cv_sd", "ext_mean", "ext_sd"):
            vals = tuple(float(x) for x in getattr(self, name))
            if len(vals) != len(METRIC_NAMES):
                raise ValueError(f"{name} must have {len(METRIC_NAMES)} entries")
            object.__setattr__(self, name, vals)
        if any(s < 0 for s in self.cv_sd) or any(s < 0 for s in self.ext_sd):
            raise ValueError("standard deviations must be non-negative")


@dataclass(frozen=True)
class ScoreCard:
    """Normalized scores and final rank for one pipeline.

    ``norm_means``, ``norm_sds`` and ``stability`` are (5, R) read-only arrays
    indexed by (metric, rotation); ``stability = 1 - norm_sds``.
    """

    pipeline: PipelineSpec
    norm_means: np.ndarray
    norm_sds: np.ndarray
    stability: np.ndarray
    final_score: float
    rank: int

    @property
    def label(self) -> str:
        return self.pipeline.label
