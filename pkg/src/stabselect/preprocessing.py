"""Leakage-safe min-max normalization fitted on training rows only.

The fitted model fingerprints both the training row ids and the training
values it saw, so any change to a training row is detectable while changes
to non-training rows provably leave the model bit-identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .data_model import FeatureTable


@dataclass(frozen=True)
class MinMaxModel:
    feature_names: tuple[str, ...]
    mins: np.ndarray  # read-only, one per feature
    maxs: np.ndarray
    train_row_ids: tuple[str, ...]  # subject ids of fitted rows, table order
    fingerprint: str  # sha256 over row ids + training values


def fit_minmax(table: FeatureTable, train_rows) -> MinMaxModel:
    """Fit per-feature min/max over ``train_rows`` only.

    train_rows: iterable of row indices into the table. Duplicates are
    dropped; indices are used in ascending order.
    """
    rows = np.unique(np.asarray(list(train_rows), dtype=int))
    if rows.size == 0:
        raise ValueError("train_rows must be non-empty")
    if rows.min() < 0 or rows.max() >= table.n_subjects:
        raise IndexError(f"train row index out of range 0..{table.n_subjects - 1}")

    sub = table.values[rows]
    mins = sub.min(axis=0)
    maxs = sub.max(axis=0)
    mins.setflags(write=False)
    maxs.setflags(write=False)

    ids = tuple(table.subject_ids[i] for i in rows)
    h = hashlib.sha256()
    h.update("\x1f".join(ids).encode())
    h.update(np.ascontiguousarray(sub).tobytes())
    return MinMaxModel(
        feature_names=table.feature_names,
        mins=mins,
        maxs=maxs,
        train_row_ids=ids,
        fingerprint=h.hexdigest(),
    )


def transform_minmax(model: MinMaxModel, table: FeatureTable, rows=None) -> np.ndarray:
    """Scale rows to x' = (x - min) / (max - min).

    Zero-range features map to 0.0; out-of-range values are not clamped, so
    test rows may fall outside [0, 1].
    """
    if table.feature_names != model.feature_names:
        raise ValueError("feature names do not match the fitted model")
    if rows is None:
        sub = table.values
    else:
        sub = table.values[np.asarray(list(rows), dtype=int)]
    span = model.maxs - model.mins
    out = np.zeros_like(sub, dtype=float)
    nz = span > 0
    out[:, nz] = (sub[:, nz] - model.mins[nz]) / span[nz]
    return out
