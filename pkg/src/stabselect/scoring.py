"""Cross-model score normalization, stability conversion, and ranking.

For each (metric i, rotation j) cell the CV mean and CV SD are min-max
normalized across all successfully evaluated pipelines; stability is one
minus the normalized SD. The final score is the arithmetic mean of all
2 * 5 * R normalized terms, so it lies in [0, 1] and weights performance
and stability equally. Only cross-validation values enter; external test
metrics are never read here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .data_model import METRIC_NAMES, PipelineSpec, ScoreCard

if TYPE_CHECKING:  # pragma: no cover
    from .harness import SweepResult


@dataclass(frozen=True)
class ScoreMatrix:
    """Raw and normalized per-(metric, rotation) CV statistics, one slice per
    pipeline. Arrays have shape (n_pipelines, 5, R)."""

    pipelines: tuple[PipelineSpec, ...]
    raw_means: np.ndarray
    raw_sds: np.ndarray
    norm_means: np.ndarray
    norm_sds: np.ndarray
    stability: np.ndarray

    @property
    def n_rotations(self) -> int:
        return self.raw_means.shape[2]

    def index_of(self, pipeline: PipelineSpec) -> int:
        for i, spec in enumerate(self.pipelines):
            if spec == pipeline:
                return i
        raise KeyError(f"pipeline {pipeline.label} not in score matrix")


def normalize_scores(sweep: "SweepResult") -> ScoreMatrix:
    """Min-max normalize CV means and SDs per (metric, rotation) cell across
    pipelines (the cross-model normalization step).

    Zero-range cells tie every pipeline at the best value: normalized mean
    1.0 and normalized SD 0.0.
    """
    entries = [r for r in sweep.results if r.records is not None]
    if not entries:
        raise ValueError("sweep contains no successfully evaluated pipeline")

    n = len(entries)
    n_rot = len(entries[0].records)
    n_met = len(METRIC_NAMES)
    means = np.empty((n, n_met, n_rot))
    sds = np.empty((n, n_met, n_rot))
    for pi, entry in enumerate(entries):
        for rj, record in enumerate(entry.records):
            means[pi, :, rj] = record.cv_mean
            sds[pi, :, rj] = record.cv_sd

    def _minmax(block: np.ndarray, tied_value: float) -> np.ndarray:
        lo = block.min(axis=0)
        span = block.max(axis=0) - lo
        out = np.full_like(block, tied_value)
        nz = span > 0
        out[:, nz] = (block[:, nz] - lo[nz]) / span[nz]
        return out

    norm_means = _minmax(means, tied_value=1.0)
    norm_sds = _minmax(sds, tied_value=0.0)

    for a in (means, sds, norm_means, norm_sds):
        a.setflags(write=False)
    stability = 1.0 - norm_sds
    stability.setflags(write=False)
    return ScoreMatrix(
        pipelines=tuple(e.spec for e in entries),
        raw_means=means,
        raw_sds=sds,
        norm_means=norm_means,
        norm_sds=norm_sds,
        stability=stability,
    )


def final_score(matrix: ScoreMatrix, pipeline: PipelineSpec | int) -> float:
    """Mean of the normalized means and stability terms over all metrics and
    rotations; in [0, 1] by construction."""
    idx = pipeline if isinstance(pipeline, int) else matrix.index_of(pipeline)
    terms = np.concatenate(
        [matrix.norm_means[idx].ravel(), matrix.stability[idx].ravel()]
    )
    return float(terms.mean())


def rank_pipelines(matrix: ScoreMatrix) -> tuple[ScoreCard, ...]:
    """Order pipelines by descending final score; ties broken by higher mean
    CV accuracy over rotations, then lexicographic pipeline label."""
    n = len(matrix.pipelines)
    scores = [final_score(matrix, i) for i in range(n)]
    mean_accuracy = matrix.raw_means[:, 0, :].mean(axis=1)  # metric 0 = accuracy
    order = sorted(
        range(n),
        key=lambda i: (-scores[i], -mean_accuracy[i], matrix.pipelines[i].label),
    )
    cards = []
    for rank, i in enumerate(order, start=1):
        cards.append(
            ScoreCard(
                pipeline=matrix.pipelines[i],
                norm_means=matrix.norm_means[i],
                norm_sds=matrix.norm_sds[i],
                stability=matrix.stability[i],
                final_score=scores[i],
                rank=rank,
            )
        )
    return tuple(cards)
