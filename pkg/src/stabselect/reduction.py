"""Registry of dimension-reduction algorithms with fit-on-train semantics.

Two families share one model type:

* feature selectors score the original features and keep the top k
  (MI, AFT, APT, VT, CC, CST, UFS, ETIm, FIRF, RFE);
* attribute extractors learn a k x p projection (PCA, TSVD, SRP).

Ranking ties are always broken by ascending feature index so selections are
reproducible across platforms. All fits are deterministic for a fixed
(data, seed) pair; forest-based importances run single-threaded.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import f as f_dist
from sklearn.ensemble import ExtraTreesClassifier, RandomForestClassifier

from .data_model import PipelineSpec

SELECTOR_IDS = ("MI", "AFT", "APT", "VT", "CC", "CST", "UFS", "ETIm", "FIRF", "RFE")
EXTRACTOR_IDS = ("PCA", "TSVD", "SRP")
REDUCER_IDS = SELECTOR_IDS + EXTRACTOR_IDS

# UFS ranks identically to AFT (top-k by the ANOVA F statistic), so default
# sweeps use the 12 distinct rankings; UFS stays addressable by id.
DEFAULT_REDUCERS = tuple(r for r in REDUCER_IDS if r != "UFS")

SUPERVISED = frozenset(SELECTOR_IDS) - {"VT"}

_FOREST_BASED = ("ETIm", "FIRF", "RFE")
DEFAULT_PARAMS = {rid: ({"n_estimators": 100} if rid in _FOREST_BASED else {})
                  for rid in REDUCER_IDS}


def effective_params(reducer_id: str, params) -> dict:
    """Defaults merged with per-spec overrides, as used at fit time."""
    return {**DEFAULT_PARAMS[reducer_id], **dict(params)}


_F_VARIANCE_FLOOR = 1e-12  # guard against /0 on perfectly separated features


@dataclass(frozen=True)
class ReducerModel:
    reducer_id: str
    k: int  # effective output dimension
    seed: int
    n_features_in: int
    # selectors: original column indices ordered by descending score
    selected: tuple[int, ...] | None = None
    scores: tuple[float, ...] | None = None  # per original feature
    # extractors: optional centering vector and (k, p) projection rows
    mean: np.ndarray | None = None
    components: np.ndarray | None = None

    @property
    def is_selector(self) -> bool:
        return self.selected is not None


def _seed32(seed: int) -> int:
    return int(seed) & 0xFFFFFFFF


def _top_k(scores: np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the k best scores, descending score, ties by ascending index."""
    order = np.lexsort((np.arange(scores.size), -scores))
    return tuple(int(i) for i in order[:k])


# ---------------------------------------------------------------------------
# univariate scorers
# ---------------------------------------------------------------------------

def mutual_information_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Plug-in mutual information (nats) between each binned feature and the label.

    Each feature is discretized by equal-frequency binning into
    min(10, #distinct) bins fitted on the given (training) column; values
    equal to a bin edge fall into the lower bin.
    """
    n = len(y)
    out = np.empty(X.shape[1])
    y = np.asarray(y, dtype=int)
    for j in range(X.shape[1]):
        col = X[:, j]
        n_bins = min(10, len(np.unique(col)))
        if n_bins < 2:
            out[j] = 0.0
            continue
        edges = np.quantile(col, np.linspace(0.0, 1.0, n_bins + 1))[1:-1]
        bins = np.searchsorted(edges, col, side="left")
        joint = np.zeros((n_bins, 2))
        np.add.at(joint, (bins, y), 1.0)
        joint /= n
        px = joint.sum(axis=1)
        py = joint.sum(axis=0)
        nz = joint > 0
        outer = np.outer(px, py)
        out[j] = float(np.sum(joint[nz] * np.log(joint[nz] / outer[nz])))
    return out


def anova_f_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """One-way ANOVA F statistic of each feature against the binary label."""
    y = np.asarray(y, dtype=int)
    n = len(y)
    classes = np.unique(y)
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        sub = X[y == c]
        mean_c = sub.mean(axis=0)
        ss_between += len(sub) * (mean_c - grand) ** 2
        ss_within += ((sub - mean_c) ** 2).sum(axis=0)
    ms_between = ss_between / (len(classes) - 1)
    ms_within = ss_within / max(n - len(classes), 1)
    return ms_between / np.maximum(ms_within, _F_VARIANCE_FLOOR)


def neg_anova_p_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Negated ANOVA p-values, so the generic descending-score rule ranks
    ascending p first."""
    n = len(y)
    f_stats = anova_f_scores(X, y)
    dfd = max(n - 2, 1)
    return -f_dist.sf(f_stats, 1, dfd)


def variance_scores(X: np.ndarray, y=None) -> np.ndarray:
    return np.var(X, axis=0)


def abs_pearson_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """|Pearson r| between each feature and the label; zero-variance -> 0."""
    y = np.asarray(y, dtype=float)
    yc = y - y.mean()
    denom_y = np.sqrt(np.sum(yc**2))
    Xc = X - X.mean(axis=0)
    denom_x = np.sqrt(np.sum(Xc**2, axis=0))
    out = np.zeros(X.shape[1])
    ok = (denom_x > 0) & (denom_y > 0)
    out[ok] = np.abs(Xc[:, ok].T @ yc) / (denom_x[ok] * denom_y)
    return out


def chi_square_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Chi-square statistic of class-wise feature sums vs. label-independence.

    Requires non-negative features; all-zero features score 0.
    """
    if np.any(X < 0):
        raise ValueError("chi-square scoring requires non-negative feature values")
    y = np.asarray(y, dtype=int)
    n = len(y)
    observed = np.vstack([X[y == c].sum(axis=0) for c in (0, 1)])  # (2, p)
    totals = observed.sum(axis=0)
    priors = np.array([np.sum(y == c) / n for c in (0, 1)])
    expected = np.outer(priors, totals)
    out = np.zeros(X.shape[1])
    nz = totals > 0
    out[nz] = (((observed - expected) ** 2)[:, nz] / expected[:, nz]).sum(axis=0)
    return out


# ---------------------------------------------------------------------------
# forest importances
# ---------------------------------------------------------------------------

def extra_trees_importance(
    X: np.ndarray, y: np.ndarray, seed: int, n_estimators: int = 100
) -> np.ndarray:
    forest = ExtraTreesClassifier(
        n_estimators=n_estimators, random_state=_seed32(seed), n_jobs=1
    )
    forest.fit(X, y)
    return forest.feature_importances_


def random_forest_importance(
    X: np.ndarray, y: np.ndarray, seed: int, n_estimators: int = 100
) -> np.ndarray:
    forest = RandomForestClassifier(
        n_estimators=n_estimators, random_state=_seed32(seed), n_jobs=1
    )
    forest.fit(X, y)
    return forest.feature_importances_


def _rfe_select(
    X: np.ndarray, y: np.ndarray, k: int, seed: int, n_estimators: int = 100
) -> tuple[tuple[int, ...], np.ndarray]:
    """Iteratively drop the worst 10% of surviving features by extra-trees
    importance until k remain; returns (ordered survivors, final importances
    aligned to original indices, zero for eliminated features)."""
    surviving = list(range(X.shape[1]))
    imp = extra_trees_importance(X, y, seed, n_estimators)
    while len(surviving) > k:
        n_drop = min(max(1, int(0.1 * len(surviving))), len(surviving) - k)
        # worst first; among equal importances the larger index is dropped,
        # keeping the ascending-index preference for survivors
        order = np.lexsort((-np.asarray(surviving), imp))
        dropped = {surviving[i] for i in order[:n_drop]}
        surviving = [i for i in surviving if i not in dropped]
        imp = extra_trees_importance(X[:, surviving], y, seed, n_estimators)
    full = np.zeros(X.shape[1])
    full[surviving] = imp
    order = np.lexsort((surviving, -imp))
    return tuple(surviving[i] for i in order), full


# ---------------------------------------------------------------------------
# extractors
# ---------------------------------------------------------------------------

def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-|loading| entry is positive."""
    out = components.copy()
    for r in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[r])))
        if out[r, j] < 0:
            out[r] = -out[r]
    return out


def _fit_pca(X: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    eigvals, eigvecs = np.linalg.eigh(cov)
    components = eigvecs[:, ::-1][:, :k].T  # descending eigenvalue order
    return mean, _fix_signs(components)


def _fit_tsvd(X: np.ndarray, k: int) -> np.ndarray:
    _, _, vt = np.linalg.svd(X, full_matrices=False)
    return _fix_signs(vt[:k])


def _fit_srp(p: int, k: int, seed: int) -> np.ndarray:
    """Sparse random projection (Achlioptas/Li): density 1/sqrt(p), entries
    +/- sqrt(1/(density*k)) with probability density/2 each, else 0."""
    density = 1.0 / np.sqrt(p)
    scale = np.sqrt(1.0 / (density * k))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(_seed32(seed))))
    u = rng.random((k, p))
    components = np.zeros((k, p))
    components[u < density / 2.0] = scale
    components[u > 1.0 - density / 2.0] = -scale
    return components


# ---------------------------------------------------------------------------
# registry front door
# ---------------------------------------------------------------------------

_UNIVARIATE = {
    "MI": mutual_information_scores,
    "AFT": anova_f_scores,
    "APT": neg_anova_p_scores,
    "VT": variance_scores,
    "CC": abs_pearson_scores,
    "CST": chi_square_scores,
    "UFS": anova_f_scores,
}

_FOREST = {"ETIm": extra_trees_importance, "FIRF": random_forest_importance}


def _effective_k(reducer_id: str, k: int, limit: int) -> int:
    if k > limit:
        warnings.warn(
            f"{reducer_id}: target_dim {k} clamped to {limit} available dimensions"
        )
        return limit
    return k


def fit_reducer(spec: PipelineSpec, X_train: np.ndarray, y_train) -> ReducerModel:
    """Fit the reducer named by ``spec.reducer_id`` on training data only."""
    rid = spec.reducer_id
    if rid not in REDUCER_IDS:
        raise ValueError(f"unknown reducer id {rid!r}; registry: {REDUCER_IDS}")
    X = np.asarray(X_train, dtype=float)
    y = np.asarray(y_train, dtype=int)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X_train must be 2-D with at least 2 rows")
    if rid in SUPERVISED and len(np.unique(y)) < 2:
        raise ValueError(f"{rid} requires both classes in y_train")

    p = X.shape[1]
    params = dict(spec.reducer_params)
    n_estimators = 100
    if rid in _FOREST_BASED:
        n_estimators = int(params.pop("n_estimators", 100))
    if params:
        raise ValueError(f"unknown reducer params for {rid}: {sorted(params)}")

    if rid in SELECTOR_IDS:
        k = _effective_k(rid, spec.target_dim, p)
        if rid == "RFE":
            selected, scores = _rfe_select(X, y, k, spec.seed, n_estimators)
        else:
            if rid in _FOREST:
                scores = _FOREST[rid](X, y, spec.seed, n_estimators)
            else:
                scores = _UNIVARIATE[rid](X, y)
            selected = _top_k(np.asarray(scores, dtype=float), k)
        return ReducerModel(
            reducer_id=rid,
            k=k,
            seed=spec.seed,
            n_features_in=p,
            selected=selected,
            scores=tuple(float(s) for s in scores),
        )

    if rid == "PCA":
        k = _effective_k(rid, spec.target_dim, p)
        mean, components = _fit_pca(X, k)
    elif rid == "TSVD":
        k = _effective_k(rid, spec.target_dim, min(p, X.shape[0]))
        mean, components = None, _fit_tsvd(X, k)
    else:  # SRP
        k = _effective_k(rid, spec.target_dim, p)
        mean, components = None, _fit_srp(p, k, spec.seed)
    components = np.ascontiguousarray(components)
    components.setflags(write=False)
    if mean is not None:
        mean.setflags(write=False)
    return ReducerModel(
        reducer_id=rid,
        k=k,
        seed=spec.seed,
        n_features_in=p,
        mean=mean,
        components=components,
    )


def apply_reducer(model: ReducerModel, X: np.ndarray) -> np.ndarray:
    """Project rows into the reduced space: column gather for selectors,
    (X - mean) @ components.T for extractors (TSVD/SRP skip centering)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features_in:
        raise ValueError(
            f"expected {model.n_features_in} columns, got {X.shape[1] if X.ndim == 2 else X.shape}"
        )
    if model.is_selector:
        return X[:, list(model.selected)]
    centered = X - model.mean if model.mean is not None else X
    return centered @ model.components.T
