"""Orchestration: stratified CV inside each rotation, external testing,
deterministic parallel sweeps, optional nested grid search, and paired
significance tests among top-ranked pipelines.

Determinism contract: every fit seed derives from (pipeline seed, fold) via a
stable hash, fold assignments derive from (pipeline seed, rotation) only, and
sweep results are independent of worker count and execution order.
"""

from __future__ import annotations

import hashlib
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import t as t_dist

from .classification import fit_classifier, predict_score
from .data_model import (
    CohortPlan,
    FeatureTable,
    FoldDetail,
    FoldMetrics,
    PipelineSpec,
    RotationRecord,
)
from .metrics import compute_metrics
from .preprocessing import MinMaxModel, fit_minmax, transform_minmax
from .reduction import ReducerModel, apply_reducer, fit_reducer
from .scoring import normalize_scores, rank_pipelines

_MASK64 = (1 << 64) - 1


def stable_hash64(*parts) -> int:
    """Platform-stable 64-bit hash of the string forms of ``parts``."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(str(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big")


def _fold_fit_seed(seed: int, fold: int) -> int:
    return (int(seed) ^ stable_hash64(fold)) & _MASK64


def population_mean_sd(values) -> tuple[float, float]:
    """Mean and population SD; exactly (v, 0.0) when all values are equal."""
    v = np.asarray(values, dtype=float)
    d = v - v[0]
    m = d.mean()
    sd = float(np.sqrt(np.mean((d - m) ** 2)))
    return float(v[0] + m), sd


# ---------------------------------------------------------------------------
# stratified folds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: np.ndarray  # per-subject fold index 0..k-1, read-only
    class_counts: dict[int, tuple[int, ...]]  # class -> per-fold counts
    seed: int


def stratified_folds(labels, k: int, seed: int) -> FoldAssignment:
    """Assign each subject to one of k folds, stratified by class.

    Members of each class are shuffled by the seed and dealt round-robin,
    carrying the fold offset across classes so fold sizes stay balanced.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k} (a single fold cannot validate)")
    labels = np.asarray(labels, dtype=int)
    fold_of = np.full(len(labels), -1, dtype=int)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    offset = 0
    class_counts: dict[int, tuple[int, ...]] = {}
    for cls in sorted(np.unique(labels).tolist()):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < k:
            raise ValueError(
                f"class {cls} has {len(idx)} members, fewer than k={k}"
            )
        perm = rng.permutation(len(idx))
        folds = (offset + np.arange(len(idx))) % k
        fold_of[idx[perm]] = folds
        counts = np.bincount(folds, minlength=k)
        class_counts[int(cls)] = tuple(int(c) for c in counts)
        offset = (offset + len(idx)) % k
    fold_of.setflags(write=False)
    return FoldAssignment(k=k, fold_of=fold_of, class_counts=class_counts, seed=int(seed))


# ---------------------------------------------------------------------------
# per-fold model fitting (exposed for leakage assertions)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldModels:
    minmax: MinMaxModel
    reducer: ReducerModel
    classifier: object  # ClassifierModel
    fit_seed: int


def fit_fold_models(
    table: FeatureTable, fit_rows: np.ndarray, spec: PipelineSpec, fold: int
) -> FoldModels:
    """Fit min-max, reducer and classifier on ``fit_rows`` only.

    The fit seed is the pipeline seed XOR a stable hash of the fold index, so
    each fold's ensembles are independent yet reproducible.
    """
    fit_seed = _fold_fit_seed(spec.seed, fold)
    fold_spec = replace(spec, seed=fit_seed)
    labels = table.label_array()
    mm = fit_minmax(table, fit_rows)
    X = transform_minmax(mm, table, fit_rows)
    y = labels[fit_rows]
    red = fit_reducer(fold_spec, X, y)
    clf = fit_classifier(fold_spec, apply_reducer(red, X), y)
    return FoldModels(minmax=mm, reducer=red, classifier=clf, fit_seed=fit_seed)


def evaluate_fold_models(
    models: FoldModels, table: FeatureTable, rows: np.ndarray, mode: str
) -> FoldMetrics:
    X = transform_minmax(models.minmax, table, rows)
    scores = predict_score(models.classifier, apply_reducer(models.reducer, X))
    preds = (scores >= 0.5).astype(int)
    y = table.label_array()[rows]
    return compute_metrics(y, preds, scores, mode).to_fold_metrics()


# ---------------------------------------------------------------------------
# rotations and sweeps
# ---------------------------------------------------------------------------

def _rotation_rows(
    table: FeatureTable, plan: CohortPlan, rotation: int
) -> tuple:
    if not 1 <= rotation <= plan.n_rotations:
        raise ValueError(f"rotation must be in 1..{plan.n_rotations}, got {rotation}")
    present = set(table.cohort_names)
    missing = [c for c in plan.cohort_names if c not in present]
    if missing:
        raise ValueError(f"plan cohorts not present in table: {missing}")
    rot = plan.rotations[rotation - 1]
    train_rows = table.rows_for_cohorts(rot.train_cohorts)
    ext_rows = table.rows_for_cohorts([rot.test_cohort])
    return rot, train_rows, ext_rows


def run_rotation(
    table: FeatureTable,
    plan: CohortPlan,
    rotation: int,
    spec: PipelineSpec,
    k: int = 5,
    mode: str = "weighted",
    grid: "ParamGrid | None" = None,
) -> RotationRecord:
    """Evaluate one pipeline in one rotation (1-based index).

    For each of the k folds, min-max / reducer / classifier are fitted on the
    other k-1 folds of the rotation's training cohorts only, then evaluated
    on the held-out fold (CV) and on the full external cohort. Means and SDs
    are taken over the k fold models; the SD is the population SD.
    """
    rot, train_rows, ext_rows = _rotation_rows(table, plan, rotation)
    labels = table.label_array()
    folds = stratified_folds(
        labels[train_rows], k, seed=stable_hash64("folds", spec.seed, rotation)
    )

    details = []
    for f in range(k):
        fit_rows = train_rows[folds.fold_of != f]
        val_rows = train_rows[folds.fold_of == f]
        eff_spec = spec
        grid_params = None
        if grid is not None:
            eff_spec = grid_search(table, fit_rows, expand_grid(spec, grid))
            grid_params = {
                "reducer": dict(eff_spec.reducer_params),
                "classifier": dict(eff_spec.classifier_params),
            }
        models = fit_fold_models(table, fit_rows, eff_spec, f)
        cv = evaluate_fold_models(models, table, val_rows, mode)
        ext = evaluate_fold_models(models, table, ext_rows, mode)
        selected = None
        if models.reducer.is_selector:
            selected = tuple(table.feature_names[i] for i in models.reducer.selected)
        details.append(
            FoldDetail(
                fold=f,
                cv=cv,
                ext=ext,
                selected_features=selected,
                minmax_fingerprint=models.minmax.fingerprint,
                grid_params=grid_params,
            )
        )

    cv_block = np.array([d.cv.as_array() for d in details])
    ext_block = np.array([d.ext.as_array() for d in details])
    cv_stats = [population_mean_sd(cv_block[:, i]) for i in range(cv_block.shape[1])]
    ext_stats = [population_mean_sd(ext_block[:, i]) for i in range(ext_block.shape[1])]
    return RotationRecord(
        pipeline=spec,
        rotation=rotation,
        test_cohort=rot.test_cohort,
        cv_mean=tuple(m for m, _ in cv_stats),
        cv_sd=tuple(s for _, s in cv_stats),
        ext_mean=tuple(m for m, _ in ext_stats),
        ext_sd=tuple(s for _, s in ext_stats),
        folds=tuple(details),
    )


@dataclass(frozen=True)
class PipelineResult:
    spec: PipelineSpec
    records: tuple[RotationRecord, ...] | None  # None when quarantined
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.records is None


@dataclass(frozen=True)
class RotationLayout:
    """Row membership of one rotation, for dumps and audits."""

    rotation: int
    test_cohort: str
    train_cohorts: tuple[str, ...]
    train_subjects: tuple[str, ...]
    external_subjects: tuple[str, ...]
    fold_of: tuple[int, ...]  # aligned with train_subjects


@dataclass(frozen=True)
class SweepResult:
    plan: CohortPlan
    k: int
    mode: str
    results: tuple[PipelineResult, ...]
    layouts: tuple[RotationLayout, ...] = ()

    def successful(self) -> tuple[PipelineResult, ...]:
        return tuple(r for r in self.results if not r.failed)

    def quarantined(self) -> tuple[PipelineResult, ...]:
        return tuple(r for r in self.results if r.failed)


def _sweep_task(args):
    table, plan, rotation, spec, k, mode, grid = args
    try:
        return ("ok", run_rotation(table, plan, rotation, spec, k=k, mode=mode, grid=grid))
    except Exception as exc:  # quarantine, never abort the sweep
        return ("err", f"{type(exc).__name__}: {exc}")


def run_sweep(
    table: FeatureTable,
    plan: CohortPlan,
    specs,
    k: int = 5,
    mode: str = "weighted",
    workers: int = 1,
    grid: "ParamGrid | None" = None,
) -> SweepResult:
    """Run every spec over every rotation.

    Pipelines that raise anywhere are quarantined as failed entries instead
    of aborting the sweep. Results are bit-identical for any worker count.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("specs must be non-empty")
    tasks = [
        (table, plan, rot.index, spec, k, mode, grid)
        for spec in specs
        for rot in plan.rotations
    ]
    if workers <= 1:
        outcomes = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_task, tasks))

    n_rot = plan.n_rotations
    results = []
    for si, spec in enumerate(specs):
        chunk = outcomes[si * n_rot : (si + 1) * n_rot]
        errors = [payload for status, payload in chunk if status == "err"]
        if errors:
            results.append(PipelineResult(spec=spec, records=None, error=errors[0]))
        else:
            results.append(
                PipelineResult(spec=spec, records=tuple(p for _, p in chunk))
            )

    layouts = []
    labels = table.label_array()
    for rot in plan.rotations:
        _, train_rows, ext_rows = _rotation_rows(table, plan, rot.index)
        folds = stratified_folds(
            labels[train_rows], k, seed=stable_hash64("folds", specs[0].seed, rot.index)
        )
        layouts.append(
            RotationLayout(
                rotation=rot.index,
                test_cohort=rot.test_cohort,
                train_cohorts=rot.train_cohorts,
                train_subjects=tuple(table.subject_ids[i] for i in train_rows),
                external_subjects=tuple(table.subject_ids[i] for i in ext_rows),
                fold_of=tuple(int(f) for f in folds.fold_of),
            )
        )
    return SweepResult(
        plan=plan, k=k, mode=mode, results=tuple(results), layouts=tuple(layouts)
    )


# ---------------------------------------------------------------------------
# grid search (off by default; nested inside the training rows)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamGrid:
    """Per-side parameter grids; values are tried in declaration order."""

    reducer: dict[str, list] = None
    classifier: dict[str, list] = None

    def __post_init__(self):
        object.__setattr__(self, "reducer", dict(self.reducer or {}))
        object.__setattr__(self, "classifier", dict(self.classifier or {}))


def expand_grid(spec: PipelineSpec, grid: ParamGrid) -> list[PipelineSpec]:
    """All grid points as concrete specs, in declaration order (earlier keys
    vary slower)."""
    r_keys = list(grid.reducer)
    c_keys = list(grid.classifier)
    candidates = []
    for combo in itertools.product(
        *[grid.reducer[k] for k in r_keys], *[grid.classifier[k] for k in c_keys]
    ):
        r_vals = combo[: len(r_keys)]
        c_vals = combo[len(r_keys):]
        candidates.append(
            replace(
                spec,
                reducer_params={**spec.reducer_params, **dict(zip(r_keys, r_vals))},
                classifier_params={**spec.classifier_params, **dict(zip(c_keys, c_vals))},
            )
        )
    return candidates


def grid_search(
    table: FeatureTable,
    train_rows: np.ndarray,
    candidates,
    inner_k: int = 3,
    mode: str = "weighted",
) -> PipelineSpec:
    """Pick the candidate with the highest mean inner-CV accuracy.

    Inner stratified folds are built on the given training rows only; ties
    keep the earliest declared candidate.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidate grid must be non-empty")
    train_rows = np.asarray(train_rows, dtype=int)
    labels = table.label_array()
    folds = stratified_folds(
        labels[train_rows], inner_k, seed=stable_hash64("grid", candidates[0].seed)
    )
    best_spec = None
    best_acc = -np.inf
    for cand in candidates:
        accs = []
        for f in range(inner_k):
            fit_rows = train_rows[folds.fold_of != f]
            val_rows = train_rows[folds.fold_of == f]
            models = fit_fold_models(table, fit_rows, cand, f)
            accs.append(evaluate_fold_models(models, table, val_rows, mode).accuracy)
        acc = float(np.mean(accs))
        if acc > best_acc:
            best_acc, best_spec = acc, cand
    return best_spec


# ---------------------------------------------------------------------------
# paired comparison of top models
# ---------------------------------------------------------------------------

def paired_ttest(a, b) -> tuple[float, float]:
    """Two-sided paired t-test; a zero-variance difference yields p = 1.0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("paired samples must share a length >= 2")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        return 0.0, 1.0
    t = float(np.mean(d) / (sd / np.sqrt(len(d))))
    p = float(2.0 * t_dist.sf(abs(t), len(d) - 1))
    return t, p


def benjamini_hochberg(pvalues, alpha: float = 0.05) -> tuple[np.ndarray, np.ndarray]:
    """BH step-up: returns (adjusted p-values, reject flags at ``alpha``)."""
    p = np.asarray(pvalues, dtype=float)
    m = len(p)
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj_sorted = np.minimum(np.minimum.accumulate(scaled[::-1])[::-1], 1.0)
    adjusted = np.empty(m)
    adjusted[order] = adj_sorted
    return adjusted, adjusted <= alpha


@dataclass(frozen=True)
class PairComparison:
    label_a: str
    label_b: str
    rank_a: int
    rank_b: int
    t_stat: float
    p_raw: float
    p_adjusted: float
    reject: bool


@dataclass(frozen=True)
class ComparisonReport:
    alpha: float
    pairs: tuple[PairComparison, ...]

    @property
    def n_significant(self) -> int:
        return sum(p.reject for p in self.pairs)


def compare_fold_accuracies(entries, alpha: float = 0.05) -> ComparisonReport:
    """Pairwise paired t-tests over (label, rank, fold-accuracy vector)
    entries, BH-corrected across all pairs."""
    rows = []
    raw = []
    for (la, ra, va), (lb, rb, vb) in itertools.combinations(entries, 2):
        t, p = paired_ttest(va, vb)
        rows.append((la, lb, ra, rb, t, p))
        raw.append(p)
    adjusted, reject = benjamini_hochberg(raw, alpha)
    pairs = tuple(
        PairComparison(
            label_a=la,
            label_b=lb,
            rank_a=ra,
            rank_b=rb,
            t_stat=t,
            p_raw=p,
            p_adjusted=float(adj),
            reject=bool(rej),
        )
        for (la, lb, ra, rb, t, p), adj, rej in zip(rows, adjusted, reject)
    )
    return ComparisonReport(alpha=alpha, pairs=pairs)


def compare_top(sweep: SweepResult, top_n: int = 10, alpha: float = 0.05) -> ComparisonReport:
    """Paired t-tests on per-fold CV accuracies (pooled over rotations) for
    every pair among the ``top_n`` ranked pipelines, BH-corrected.

    Pairing is by (rotation, fold); fold assignments are shared across
    pipelines with a common seed, so the folds line up.
    """
    cards = rank_pipelines(normalize_scores(sweep))
    if len(cards) < 2:
        raise ValueError("need at least two scored pipelines to compare")
    spec_results = list(sweep.successful())

    def _result_for(spec):
        for r in spec_results:
            if r.spec == spec:
                return r
        raise KeyError(spec.label)

    entries = []
    for card in cards[:top_n]:
        result = _result_for(card.pipeline)
        accs = [
            fold.cv.accuracy for record in result.records for fold in record.folds
        ]
        if not accs:
            raise ValueError(
                f"pipeline {card.label} has no per-fold records to compare"
            )
        entries.append((card.label, card.rank, np.asarray(accs)))
    return compare_fold_accuracies(entries, alpha)
