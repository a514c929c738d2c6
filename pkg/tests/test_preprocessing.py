import numpy as np
import pytest

from conftest import make_table, tweak_value
from stabselect.data_model import FeatureTable
from stabselect.preprocessing import fit_minmax, transform_minmax


def column_table(values):
    return make_table(np.asarray(values, dtype=float).reshape(-1, 1),
                      labels=[i % 2 for i in range(len(values))])


def test_fit_full_column():
    model = fit_minmax(column_table([2.0, 4.0, 6.0]), [0, 1, 2])
    assert model.mins[0] == 2.0
    assert model.maxs[0] == 6.0


def test_fit_uses_training_subset_only():
    model = fit_minmax(column_table([2.0, 4.0, 6.0]), [0, 1])
    assert model.mins[0] == 2.0
    assert model.maxs[0] == 4.0


def test_constant_training_column():
    model = fit_minmax(column_table([5.0, 5.0]), [0, 1])
    assert model.mins[0] == model.maxs[0] == 5.0


def test_transform_midpoint():
    table = column_table([2.0, 4.0, 6.0])
    model = fit_minmax(table, [0, 2])
    out = transform_minmax(model, table, [1])
    assert out[0, 0] == 0.5


def test_zero_range_maps_to_zero():
    table = column_table([5.0, 5.0, 7.0])
    model = fit_minmax(table, [0, 1])
    out = transform_minmax(model, table)
    assert np.all(out == 0.0)


def test_out_of_range_not_clamped():
    table = column_table([2.0, 4.0, 6.0])
    model = fit_minmax(table, [0, 1])  # min=2, max=4
    out = transform_minmax(model, table, [2])
    assert out[0, 0] == 2.0


def test_empty_train_rows_rejected():
    with pytest.raises(ValueError):
        fit_minmax(column_table([1.0, 2.0]), [])


def test_bad_row_index_rejected():
    with pytest.raises(IndexError):
        fit_minmax(column_table([1.0, 2.0]), [5])


def test_feature_name_mismatch_rejected():
    table = column_table([1.0, 2.0])
    model = fit_minmax(table, [0, 1])
    other = make_table(table.values, labels=list(table.labels), feature_names=["g0"])
    with pytest.raises(ValueError):
        transform_minmax(model, other)


def test_training_rows_map_into_unit_interval(rng):
    table = make_table(rng.normal(size=(20, 5)) * 10, labels=rng.integers(0, 2, 20))
    train = [0, 3, 4, 7, 11, 15, 19]
    model = fit_minmax(table, train)
    out = transform_minmax(model, table, train)
    assert out.min() >= 0.0
    assert out.max() <= 1.0


def test_leakage_canary_non_training_rows_do_not_touch_model(rng):
    table = make_table(rng.normal(size=(10, 4)), labels=rng.integers(0, 2, 10))
    train = [0, 1, 2, 3, 4]
    base = fit_minmax(table, train)
    for row in range(5, 10):
        refit = fit_minmax(tweak_value(table, row, col=2, delta=123.0), train)
        assert refit.fingerprint == base.fingerprint
        assert np.array_equal(refit.mins, base.mins)
        assert np.array_equal(refit.maxs, base.maxs)


def test_fingerprint_changes_when_any_training_row_changes(rng):
    table = make_table(rng.normal(size=(8, 3)), labels=rng.integers(0, 2, 8))
    train = [0, 2, 4, 6]
    base = fit_minmax(table, train)
    for row in train:
        refit = fit_minmax(tweak_value(table, row, col=1, delta=1e-6), train)
        assert refit.fingerprint != base.fingerprint


def test_transform_is_affine_exact(rng):
    table = make_table(rng.normal(size=(15, 4)), labels=rng.integers(0, 2, 15))
    train = [1, 2, 5, 8, 9, 12]
    scale = rng.uniform(0.5, 3.0, size=4)
    shift = rng.normal(size=4)
    shifted = FeatureTable(
        subject_ids=table.subject_ids,
        cohort_ids=table.cohort_ids,
        labels=table.labels,
        feature_names=table.feature_names,
        values=table.values * scale + shift,
    )
    out = transform_minmax(fit_minmax(table, train), table)
    out_shifted = transform_minmax(fit_minmax(shifted, train), shifted)
    assert np.max(np.abs(out - out_shifted)) <= 1e-12
