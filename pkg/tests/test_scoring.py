import numpy as np
import pytest

from conftest import build_sweep_from_stats
from stabselect.scoring import final_score, normalize_scores, rank_pipelines


def uniform_stats(n, n_rot, mean=0.9, sd=0.05):
    means = np.full((n, 5, n_rot), mean)
    sds = np.full((n, 5, n_rot), sd)
    return means, sds


def test_endpoint_normalization_of_means():
    means, sds = uniform_stats(2, 1)
    means[0, 0, 0] = 0.9
    means[1, 0, 0] = 0.8
    matrix = normalize_scores(build_sweep_from_stats(means, sds))
    assert matrix.norm_means[0, 0, 0] == 1.0
    assert matrix.norm_means[1, 0, 0] == 0.0


def test_endpoint_normalization_of_sds_and_stability():
    means, sds = uniform_stats(2, 1)
    sds[0, 0, 0] = 0.1
    sds[1, 0, 0] = 0.3
    matrix = normalize_scores(build_sweep_from_stats(means, sds))
    assert matrix.norm_sds[0, 0, 0] == 0.0
    assert matrix.norm_sds[1, 0, 0] == 1.0
    assert matrix.stability[0, 0, 0] == 1.0
    assert matrix.stability[1, 0, 0] == 0.0


def test_zero_range_cell_awards_best_to_all():
    means, sds = uniform_stats(3, 2, mean=0.94, sd=0.02)
    matrix = normalize_scores(build_sweep_from_stats(means, sds))
    assert np.all(matrix.norm_means == 1.0)
    assert np.all(matrix.norm_sds == 0.0)
    assert np.all(matrix.stability == 1.0)


def test_hand_two_pipeline_chain():
    # A dominates in every cell: all its normalized terms are 1, B's are 0
    means = np.stack([np.full((5, 1), 0.9), np.full((5, 1), 0.8)])
    sds = np.stack([np.full((5, 1), 0.1), np.full((5, 1), 0.3)])
    matrix = normalize_scores(build_sweep_from_stats(means, sds))
    assert final_score(matrix, 0) == 1.0
    assert final_score(matrix, 1) == 0.0
    cards = rank_pipelines(matrix)
    assert [c.rank for c in cards] == [1, 2]
    assert cards[0].final_score == 1.0


def test_single_pipeline_scores_one():
    means, sds = uniform_stats(1, 3, mean=0.7, sd=0.1)
    matrix = normalize_scores(build_sweep_from_stats(means, sds))
    cards = rank_pipelines(matrix)
    assert len(cards) == 1
    assert cards[0].rank == 1
    assert cards[0].final_score == 1.0


def test_midpoint_final_score():
    # three pipelines at min / mid / max in every cell
    means = np.stack(
        [np.full((5, 2), 0.8), np.full((5, 2), 0.85), np.full((5, 2), 0.9)]
    )
    sds = np.stack(
        [np.full((5, 2), 0.3), np.full((5, 2), 0.2), np.full((5, 2), 0.1)]
    )
    matrix = normalize_scores(build_sweep_from_stats(means, sds))
    assert abs(final_score(matrix, 1) - 0.5) <= 1e-12
    assert final_score(matrix, 2) == 1.0
    assert final_score(matrix, 0) == 0.0


def test_ranks_form_permutation_and_normalized_ranges(rng):
    n, n_rot = 7, 3
    means = rng.uniform(0.5, 1.0, size=(n, 5, n_rot))
    sds = rng.uniform(0.0, 0.2, size=(n, 5, n_rot))
    matrix = normalize_scores(build_sweep_from_stats(means, sds))
    assert matrix.norm_means.min() >= 0.0 and matrix.norm_means.max() <= 1.0
    assert matrix.norm_sds.min() >= 0.0 and matrix.norm_sds.max() <= 1.0
    cards = rank_pipelines(matrix)
    assert sorted(c.rank for c in cards) == list(range(1, n + 1))
    scores = [c.final_score for c in cards]
    assert scores == sorted(scores, reverse=True)
    assert all(0.0 <= s <= 1.0 for s in scores)


def test_affine_invariance_of_one_metric(rng):
    n, n_rot = 5, 2
    means = rng.uniform(0.5, 1.0, size=(n, 5, n_rot))
    sds = rng.uniform(0.01, 0.2, size=(n, 5, n_rot))
    base_matrix = normalize_scores(build_sweep_from_stats(means, sds))
    base_ranks = [c.label for c in rank_pipelines(base_matrix)]
    for _ in range(20):
        metric = int(rng.integers(5))
        a = float(rng.uniform(0.1, 5.0))
        b = float(rng.normal())
        shifted = means.copy()
        shifted[:, metric, :] = a * shifted[:, metric, :] + b
        matrix = normalize_scores(build_sweep_from_stats(shifted, sds))
        assert np.allclose(matrix.norm_means, base_matrix.norm_means, atol=1e-12)
        for i in range(n):
            assert abs(final_score(matrix, i) - final_score(base_matrix, i)) <= 1e-12
        assert [c.label for c in rank_pipelines(matrix)] == base_ranks


def test_monotonicity_in_a_single_cell(rng):
    n, n_rot = 4, 2
    means = rng.uniform(0.5, 0.9, size=(n, 5, n_rot))
    sds = rng.uniform(0.01, 0.2, size=(n, 5, n_rot))
    base = normalize_scores(build_sweep_from_stats(means, sds))
    target = 1  # not at the cell max by construction below
    means2 = means.copy()
    cell_max = means[:, 2, 0].max()
    means2[target, 2, 0] = min(means2[target, 2, 0] + 0.02, cell_max)
    bumped = normalize_scores(build_sweep_from_stats(means2, sds))
    assert final_score(bumped, target) >= final_score(base, target) - 1e-15


def test_stability_penalty_strictly_orders_equal_means():
    means = np.full((2, 5, 3), 0.94)
    sds = np.stack([np.full((5, 3), 0.02), np.full((5, 3), 0.10)])
    matrix = normalize_scores(build_sweep_from_stats(means, sds, labels=["LOW", "HIGH"]))
    cards = rank_pipelines(matrix)
    assert final_score(matrix, 0) > final_score(matrix, 1)
    assert cards[0].label == "LOW+DT"
    assert cards[0].rank == 1


def test_external_metrics_never_affect_scores(rng):
    n, n_rot = 4, 2
    means = rng.uniform(0.5, 1.0, size=(n, 5, n_rot))
    sds = rng.uniform(0.0, 0.2, size=(n, 5, n_rot))
    ext_a = rng.uniform(0.0, 1.0, size=(n, 5, n_rot))
    ext_b = rng.uniform(0.0, 1.0, size=(n, 5, n_rot))
    m1 = normalize_scores(build_sweep_from_stats(means, sds, ext_means=ext_a))
    m2 = normalize_scores(build_sweep_from_stats(means, sds, ext_means=ext_b))
    assert np.array_equal(m1.norm_means, m2.norm_means)
    assert np.array_equal(m1.norm_sds, m2.norm_sds)
    for i in range(n):
        assert final_score(m1, i) == final_score(m2, i)


def test_tie_breaks_accuracy_then_label():
    # equal final scores; A has higher raw accuracy
    means = np.full((2, 5, 1), 0.9)
    sds = np.zeros((2, 5, 1))
    means[0, 0, 0], means[1, 0, 0] = 0.9, 0.8  # accuracy: A normalized 1, B 0
    means[0, 1, 0], means[1, 1, 0] = 0.7, 0.8  # f1 compensates exactly
    matrix = normalize_scores(build_sweep_from_stats(means, sds, labels=["B", "A"]))
    assert final_score(matrix, 0) == final_score(matrix, 1)
    cards = rank_pipelines(matrix)
    assert cards[0].label == "B+DT"  # index 0 holds the higher accuracy

    # fully tied pipelines fall back to lexicographic label
    means2 = np.full((2, 5, 1), 0.9)
    matrix2 = normalize_scores(build_sweep_from_stats(means2, sds, labels=["ZZ", "AA"]))
    cards2 = rank_pipelines(matrix2)
    assert [c.label for c in cards2] == ["AA+DT", "ZZ+DT"]


def test_empty_sweep_rejected():
    from stabselect.data_model import CohortPlan
    from stabselect.harness import SweepResult

    empty = SweepResult(
        plan=CohortPlan(["A", "B"]), k=5, mode="weighted", results=()
    )
    with pytest.raises(ValueError, match="no successfully evaluated"):
        normalize_scores(empty)
