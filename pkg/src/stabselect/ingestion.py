"""CSV ingestion and seeded synthetic multi-cohort data generation.

CSV format: comma-separated, UTF-8, "." decimal, header row
``subject_id,cohort,label,<feature...>`` (column names configurable via
``CsvSchema``); one row per subject, label in {0,1}.
"""

from __future__ import annotations

import csv
import itertools
import string
from dataclasses import dataclass

import numpy as np

from .data_model import FeatureTable, require_valid


class CsvSchemaError(ValueError):
    pass


class CsvParseError(ValueError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    id_col: str = "subject_id"
    cohort_col: str = "cohort"
    label_col: str = "label"


def read_csv(path, schema: CsvSchema = CsvSchema()) -> FeatureTable:
    """Read a feature table; all non-schema columns become features in header order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path}: empty file, header row required") from None

        cols = {name: i for i, name in enumerate(header)}
        for role, name in (
            ("id_col", schema.id_col),
            ("cohort_col", schema.cohort_col),
            ("label_col", schema.label_col),
        ):
            if name not in cols:
                raise CsvSchemaError(f"{role} '{name}' not found in header {header}")
        id_i, coh_i, lab_i = (
            cols[schema.id_col],
            cols[schema.cohort_col],
            cols[schema.label_col],
        )
        special = {id_i, coh_i, lab_i}
        feat_cols = [(i, name) for i, name in enumerate(header) if i not in special]

        subject_ids: list[str] = []
        cohort_ids: list[str] = []
        labels: list[int] = []
        rows: list[list[float]] = []
        for rownum, rec in enumerate(reader, start=2):  # 1-based incl. header
            if len(rec) != len(header):
                raise CsvParseError(
                    f"{path}: row {rownum} has {len(rec)} cells, expected {len(header)}"
                )
            subject_ids.append(rec[id_i])
            cohort_ids.append(rec[coh_i])
            try:
                lab = float(rec[lab_i])
            except ValueError:
                raise CsvParseError(
                    f"{path}: row {rownum}, column '{schema.label_col}': "
                    f"could not parse label {rec[lab_i]!r}"
                ) from None
            labels.append(int(lab))
            vals = []
            for i, name in feat_cols:
                try:
                    vals.append(float(rec[i]))
                except ValueError:
                    raise CsvParseError(
                        f"{path}: row {rownum}, column '{name}': "
                        f"could not parse {rec[i]!r}"
                    ) from None
            rows.append(vals)

    table = FeatureTable(
        subject_ids=subject_ids,
        cohort_ids=cohort_ids,
        labels=labels,
        feature_names=[name for _, name in feat_cols],
        values=np.array(rows, dtype=float).reshape(len(rows), len(feat_cols)),
    )
    return require_valid(table)


def write_csv(table: FeatureTable, path, schema: CsvSchema = CsvSchema()) -> None:
    """Write a table back to CSV; float cells use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [schema.id_col, schema.cohort_col, schema.label_col, *table.feature_names]
        )
        for i in range(table.n_subjects):
            writer.writerow(
                [
                    table.subject_ids[i],
                    table.cohort_ids[i],
                    table.labels[i],
                    *[repr(float(v)) for v in table.values[i]],
                ]
            )


def cohort_letters(n: int) -> tuple[str, ...]:
    """Spreadsheet-style cohort names: A..Z, AA, AB, ..."""
    names = []
    for size in itertools.count(1):
        for combo in itertools.product(string.ascii_uppercase, repeat=size):
            names.append("".join(combo))
            if len(names) == n:
                return tuple(names)


@dataclass(frozen=True)
class SyntheticConfig:
    n_cohorts: int = 4
    subjects_per_cohort: int = 100
    n_features: int = 30
    n_informative: int = 8
    class_balance: float = 0.5
    cohort_shift: float = 0.3  # SD of the per-cohort offset on informative features
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_cohorts < 1 or self.subjects_per_cohort < 1 or self.n_features < 1:
            raise ValueError("cohort/subject/feature counts must be >= 1")
        if not 0 <= self.n_informative <= self.n_features:
            raise ValueError("n_informative must be in [0, n_features]")
        if not 0.0 < self.class_balance < 1.0:
            raise ValueError("class_balance must be in (0, 1)")
        if self.cohort_shift < 0:
            raise ValueError("cohort_shift must be >= 0")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be > 0")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must be an unsigned 64-bit integer")


def generate_synthetic(cfg: SyntheticConfig) -> FeatureTable:
    """Generate a seeded multi-cohort table for desk-scale verification.

    Labels ~ Bernoulli(class_balance). Informative features carry a +/-1
    label-dependent mean plus a per-cohort offset ~ N(0, cohort_shift^2) plus
    N(0, noise_sd^2) noise; remaining features are pure N(0, noise_sd^2) noise.

    PRNG: numpy PCG64 with one SeedSequence stream per cohort (offsets) and
    per (cohort, subject) (labels and noise), so growing subjects_per_cohort
    or n_cohorts never reshuffles previously generated rows.
    """
    names = cohort_letters(cfg.n_cohorts)
    n_inf = cfg.n_informative

    subject_ids = []
    cohort_ids = []
    labels = []
    rows = []
    for c_idx, cohort in enumerate(names):
        offset_rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([cfg.seed, c_idx]))
        )
        offsets = offset_rng.normal(0.0, cfg.cohort_shift, size=n_inf)
        for s_idx in range(cfg.subjects_per_cohort):
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence([cfg.seed, c_idx, s_idx]))
            )
            label = int(rng.random() < cfg.class_balance)
            noise = rng.normal(0.0, cfg.noise_sd, size=cfg.n_features)
            row = noise
            row[:n_inf] += (2.0 * label - 1.0) + offsets
            subject_ids.append(f"{cohort}-{s_idx + 1:04d}")
            cohort_ids.append(cohort)
            labels.append(label)
            rows.append(row)

    return FeatureTable(
        subject_ids=subject_ids,
        cohort_ids=cohort_ids,
        labels=labels,
        feature_names=[f"f{j + 1:03d}" for j in range(cfg.n_features)],
        values=np.vstack(rows),
    )
