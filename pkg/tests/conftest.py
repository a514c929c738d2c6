"""Shared helpers and fixtures for the test suite."""

import numpy as np
import pytest

from stabselect.data_model import FeatureTable


def make_table(values, labels, cohorts=None, feature_names=None, ids=None):
    """Build a FeatureTable from plain arrays with generated ids/names."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, p = values.shape
    if cohorts is None:
        cohorts = ["X"] * n
    if feature_names is None:
        feature_names = [f"f{j}" for j in range(p)]
    if ids is None:
        ids = [f"s{i}" for i in range(n)]
    return FeatureTable(
        subject_ids=ids,
        cohort_ids=cohorts,
        labels=labels,
        feature_names=feature_names,
        values=values,
    )


def tweak_value(table, row, col, delta=1.0):
    """Copy of the table with a single cell changed."""
    values = table.values.copy()
    values[row, col] += delta
    return FeatureTable(
        subject_ids=table.subject_ids,
        cohort_ids=table.cohort_ids,
        labels=table.labels,
        feature_names=table.feature_names,
        values=values,
    )


def brute_force_auc(y_true, y_score):
    """Pairwise positive-negative comparison with 0.5 credit for ties."""
    y_true = np.asarray(y_true)
    y_score = np.asarray(y_score)
    pos = y_score[y_true == 1]
    neg = y_score[y_true == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def two_cohort_table(rng, n_per=30, p=6, informative=3, cohorts=("X", "Y")):
    """Random separable-ish table spanning two cohorts, both classes in each."""
    n = n_per * len(cohorts)
    labels = np.tile([0, 1], n // 2)
    values = rng.normal(size=(n, p))
    values[:, :informative] += (2 * labels[:, None] - 1)
    cohort_ids = [cohorts[i // n_per] for i in range(n)]
    return make_table(values, labels, cohorts=cohort_ids)


def build_sweep_from_stats(means, sds, ext_means=None, ext_sds=None, labels=None):
    """Hand-built SweepResult from (n_pipelines, 5, R) mean/SD arrays."""
    from stabselect.data_model import CohortPlan, PipelineSpec, RotationRecord
    from stabselect.harness import PipelineResult, SweepResult

    means = np.asarray(means, dtype=float)
    sds = np.asarray(sds, dtype=float)
    n, n_metrics, n_rot = means.shape
    assert n_metrics == 5
    if ext_means is None:
        ext_means = means
    if ext_sds is None:
        ext_sds = sds
    if labels is None:
        labels = [f"R{i}" for i in range(n)]
    cohorts = [chr(ord("A") + j) for j in range(n_rot)] + ["Z"]
    plan = CohortPlan(cohorts, cv_only=["Z"])
    results = []
    for i in range(n):
        spec = PipelineSpec(labels[i], "DT", seed=1)
        records = tuple(
            RotationRecord(
                pipeline=spec,
                rotation=r + 1,
                test_cohort=cohorts[r],
                cv_mean=tuple(means[i, :, r]),
                cv_sd=tuple(sds[i, :, r]),
                ext_mean=tuple(ext_means[i, :, r]),
                ext_sd=tuple(ext_sds[i, :, r]),
            )
            for r in range(n_rot)
        )
        results.append(PipelineResult(spec=spec, records=records))
    return SweepResult(plan=plan, k=5, mode="weighted", results=tuple(results))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
