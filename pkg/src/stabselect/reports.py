"""Run configuration and report emission.

A run writes five artifacts into its output directory:

* ``ranking.csv``      — every scored pipeline, rank order, CV "mean ± sd"
* ``external.csv``     — the top-n pipelines' external-test aggregates
* ``rotation_<r>_<cohort>.csv`` — per-rotation CV and external blocks, top-n
* ``full_dump.json``   — every fold-level value at full precision
* ``manifest.json``    — config echo, config hash, seed, quarantined pipelines

Human tables round to 2 decimals; the JSON dump is the source of truth and
every CSV number is recomputable from it.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import classification, reduction
from .data_model import METRIC_NAMES, CohortPlan, PipelineSpec, ScoreCard
from .harness import (
    ComparisonReport,
    ParamGrid,
    SweepResult,
    compare_fold_accuracies,
    population_mean_sd,
    run_sweep,
)
from .ingestion import CsvSchema, SyntheticConfig, generate_synthetic, read_csv, write_csv
from .scoring import normalize_scores, rank_pipelines

METRIC_TITLES = ("Accuracy", "F1 Score", "Precision", "Recall", "ROC-AUC")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    input_csv: str
    out_dir: str
    cv_only: list[str] = field(default_factory=list)
    cohort_order: list[str] | None = None  # default: first appearance in the CSV
    id_col: str = "subject_id"
    cohort_col: str = "cohort"
    label_col: str = "label"
    k: int = 5
    target_dim: int = 10
    reducers: list = field(default_factory=lambda: list(reduction.DEFAULT_REDUCERS))
    classifiers: list = field(
        default_factory=lambda: list(classification.DEFAULT_CLASSIFIERS)
    )
    metric_mode: str = "weighted"
    grid_search: bool = False
    reducer_grid: dict = field(default_factory=dict)
    classifier_grid: dict = field(default_factory=dict)
    top_n: int = 10
    alpha: float = 0.05
    seed: int = 0


def _entry_id_params(entry) -> tuple[str, dict]:
    if isinstance(entry, str):
        return entry, {}
    if isinstance(entry, dict) and "id" in entry:
        return str(entry["id"]), dict(entry.get("params", {}))
    raise ConfigError(f"list entries must be an id string or {{id, params}}: {entry!r}")


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for required in ("input_csv", "out_dir"):
        if required not in raw:
            raise ConfigError(f"config key '{required}' is required")
    cfg = RunConfig(**raw)

    for entry in cfg.reducers:
        rid, _ = _entry_id_params(entry)
        if rid not in reduction.REDUCER_IDS:
            raise ConfigError(
                f"unknown reducer id {rid!r}; registry: {reduction.REDUCER_IDS}"
            )
    for entry in cfg.classifiers:
        cid, _ = _entry_id_params(entry)
        if cid not in classification.CLASSIFIER_IDS:
            raise ConfigError(
                f"unknown classifier id {cid!r}; registry: {classification.CLASSIFIER_IDS}"
            )
    if cfg.metric_mode not in ("binary", "weighted"):
        raise ConfigError("metric_mode must be 'binary' or 'weighted'")
    return cfg


def build_specs(cfg: RunConfig) -> list[PipelineSpec]:
    """Cartesian reducer x classifier grid, reducer-major order."""
    specs = []
    for rentry in cfg.reducers:
        rid, rparams = _entry_id_params(rentry)
        for centry in cfg.classifiers:
            cid, cparams = _entry_id_params(centry)
            specs.append(
                PipelineSpec(
                    reducer_id=rid,
                    classifier_id=cid,
                    reducer_params=rparams,
                    classifier_params=cparams,
                    target_dim=cfg.target_dim,
                    seed=cfg.seed,
                )
            )
    return specs


def _fmt_pm(mean: float, sd: float) -> str:
    return f"{mean:.2f} ± {sd:.2f}"


def _aggregate(records, attr: str) -> list[tuple[float, float]]:
    """Per metric: mean over rotation means and population SD across them."""
    block = np.array([getattr(rec, f"{attr}_mean") for rec in records])  # (R, 5)
    return [population_mean_sd(block[:, i]) for i in range(block.shape[1])]


def _result_for(sweep: SweepResult, spec: PipelineSpec):
    for result in sweep.successful():
        if result.spec == spec:
            return result
    raise KeyError(spec.label)


def write_ranking_csv(path, cards, sweep: SweepResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["DRA+CA", "Rank", "Score", *METRIC_TITLES])
        for card in cards:
            stats = _aggregate(_result_for(sweep, card.pipeline).records, "cv")
            writer.writerow(
                [card.label, card.rank, f"{card.final_score:.6f}"]
                + [_fmt_pm(m, s) for m, s in stats]
            )


def write_external_csv(path, cards, sweep: SweepResult, top_n: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["DRA+CA", "Rank", "Score", *METRIC_TITLES])
        for card in cards[:top_n]:
            stats = _aggregate(_result_for(sweep, card.pipeline).records, "ext")
            writer.writerow(
                [card.label, card.rank, f"{card.final_score:.6f}"]
                + [_fmt_pm(m, s) for m, s in stats]
            )


def write_rotation_csv(path, cards, sweep: SweepResult, rotation: int, top_n: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["DRA+CA", "Rank", "Score"]
            + [f"CV {t}" for t in METRIC_TITLES]
            + [f"Ext {t}" for t in METRIC_TITLES]
        )
        for card in cards[:top_n]:
            record = _result_for(sweep, card.pipeline).records[rotation - 1]
            writer.writerow(
                [card.label, card.rank, f"{card.final_score:.6f}"]
                + [_fmt_pm(m, s) for m, s in zip(record.cv_mean, record.cv_sd)]
                + [_fmt_pm(m, s) for m, s in zip(record.ext_mean, record.ext_sd)]
            )


def _metric_dict(values) -> dict[str, float]:
    return dict(zip(METRIC_NAMES, [float(v) for v in values]))


def build_dump(sweep: SweepResult, cards, seed: int) -> dict:
    by_spec: dict[int, ScoreCard] = {}
    for card in cards:
        for i, result in enumerate(sweep.results):
            if result.spec == card.pipeline:
                by_spec[i] = card
                break

    pipelines = []
    for i, result in enumerate(sweep.results):
        spec = result.spec
        card = by_spec.get(i)
        entry = {
            "label": spec.label,
            "reducer_id": spec.reducer_id,
            "classifier_id": spec.classifier_id,
            "target_dim": spec.target_dim,
            "seed": spec.seed,
            "hyperparameters": {
                "reducer": reduction.effective_params(
                    spec.reducer_id, spec.reducer_params
                ),
                "classifier": classification.effective_params(
                    spec.classifier_id, spec.classifier_params
                ),
            },
            "failed": result.failed,
            "error": result.error,
            "final_score": card.final_score if card else None,
            "rank": card.rank if card else None,
            "rotations": [],
        }
        if result.records:
            for record in result.records:
                entry["rotations"].append(
                    {
                        "rotation": record.rotation,
                        "test_cohort": record.test_cohort,
                        "cv_mean": _metric_dict(record.cv_mean),
                        "cv_sd": _metric_dict(record.cv_sd),
                        "ext_mean": _metric_dict(record.ext_mean),
                        "ext_sd": _metric_dict(record.ext_sd),
                        "folds": [
                            {
                                "fold": d.fold,
                                "cv": d.cv.as_dict(),
                                "ext": d.ext.as_dict(),
                                "selected_features": (
                                    list(d.selected_features)
                                    if d.selected_features is not None
                                    else None
                                ),
                                "minmax_fingerprint": d.minmax_fingerprint,
                                "grid_params": d.grid_params,
                            }
                            for d in record.folds
                        ],
                    }
                )
        pipelines.append(entry)

    return {
        "seed": seed,
        "k": sweep.k,
        "metric_mode": sweep.mode,
        "plan": {
            "cohorts": list(sweep.plan.cohort_names),
            "cv_only": sorted(sweep.plan.cv_only),
        },
        "rotations": [
            {
                "rotation": lay.rotation,
                "test_cohort": lay.test_cohort,
                "train_cohorts": list(lay.train_cohorts),
                "train_subjects": list(lay.train_subjects),
                "external_subjects": list(lay.external_subjects),
                "fold_of": list(lay.fold_of),
            }
            for lay in sweep.layouts
        ],
        "pipelines": pipelines,
    }


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(asdict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()


def cmd_run(cfg: RunConfig, workers: int = 1, allow_failures: bool = False) -> int:
    """Execute ingestion -> sweep -> scoring -> reports; returns the exit code."""
    schema = CsvSchema(cfg.id_col, cfg.cohort_col, cfg.label_col)
    table = read_csv(cfg.input_csv, schema)
    cohort_order = cfg.cohort_order or list(table.cohort_names)
    plan = CohortPlan(cohort_order, cv_only=cfg.cv_only)
    specs = build_specs(cfg)
    grid = None
    if cfg.grid_search:
        grid = ParamGrid(reducer=cfg.reducer_grid, classifier=cfg.classifier_grid)

    sweep = run_sweep(
        table, plan, specs, k=cfg.k, mode=cfg.metric_mode, workers=workers, grid=grid
    )
    cards = rank_pipelines(normalize_scores(sweep))

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_ranking_csv(out / "ranking.csv", cards, sweep)
    write_external_csv(out / "external.csv", cards, sweep, cfg.top_n)
    for lay in sweep.layouts:
        write_rotation_csv(
            out / f"rotation_{lay.rotation}_{lay.test_cohort}.csv",
            cards,
            sweep,
            lay.rotation,
            cfg.top_n,
        )
    dump = build_dump(sweep, cards, cfg.seed)
    with open(out / "full_dump.json", "w", encoding="utf-8") as fh:
        json.dump(dump, fh, sort_keys=True, indent=1)

    quarantined = [
        {"label": r.spec.label, "error": r.error} for r in sweep.quarantined()
    ]
    manifest = {
        "config": asdict(cfg),
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "n_pipelines": len(specs),
        "n_rotations": plan.n_rotations,
        "quarantined": quarantined,
        "workers": workers,
        "allow_failures": allow_failures,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)

    if quarantined and not allow_failures:
        return 1
    return 0


def cmd_gen_synth(cfg: SyntheticConfig, out_path) -> None:
    """Generate a synthetic table and write it as CSV."""
    write_csv(generate_synthetic(cfg), out_path)


def compare_from_dump(dump: dict, top_n: int, alpha: float) -> ComparisonReport:
    ranked = sorted(
        (p for p in dump["pipelines"] if not p["failed"]), key=lambda p: p["rank"]
    )
    entries = []
    for p in ranked[:top_n]:
        accs = [
            fold["cv"]["accuracy"]
            for rotation in p["rotations"]
            for fold in rotation["folds"]
        ]
        entries.append((p["label"], p["rank"], np.asarray(accs)))
    if len(entries) < 2:
        raise ValueError("need at least two scored pipelines to compare")
    return compare_fold_accuracies(entries, alpha)


def cmd_compare(run_dir, top_n: int = 10, alpha: float = 0.05) -> ComparisonReport:
    """Pairwise significance report for a finished run directory.

    Reads full_dump.json, writes compare.csv next to it, and returns the
    report.
    """
    dump_path = Path(run_dir) / "full_dump.json"
    if not dump_path.exists():
        raise FileNotFoundError(f"no full_dump.json under {run_dir}")
    with open(dump_path, encoding="utf-8") as fh:
        dump = json.load(fh)
    report = compare_from_dump(dump, top_n, alpha)
    with open(Path(run_dir) / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["Pipeline A", "Pipeline B", "Rank A", "Rank B", "t", "p", "p (BH)", "Significant"]
        )
        for pair in report.pairs:
            writer.writerow(
                [
                    pair.label_a,
                    pair.label_b,
                    pair.rank_a,
                    pair.rank_b,
                    repr(pair.t_stat),
                    repr(pair.p_raw),
                    repr(pair.p_adjusted),
                    int(pair.reject),
                ]
            )
    return report
