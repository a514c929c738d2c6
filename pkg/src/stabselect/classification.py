"""Registry of binary classifiers with a uniform fit/score/label interface.

Every model exposes ``predict_score`` (monotone class-1 evidence in [0, 1])
and ``predict_label`` defined as score >= 0.5 — the fixed decision threshold.
Standard estimators (trees, forests, boosting, KNN, Gaussian NB) are backed
by scikit-learn, fitted single-threaded with the spec seed; the remaining
algorithms are implemented here.
"""

from __future__ import annotations

import pickle
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import (
    ExtraTreesClassifier,
    GradientBoostingClassifier,
    RandomForestClassifier,
)
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from .data_model import PipelineSpec

CLASSIFIER_IDS = ("ETr", "RandF", "DT", "GB", "KNN", "GNB", "LOGIT", "NC", "DUMMY")
DEFAULT_CLASSIFIERS = CLASSIFIER_IDS

DEFAULT_PARAMS = {
    "ETr": {"n_estimators": 100, "criterion": "gini", "max_features": "sqrt",
            "bootstrap": False},
    "RandF": {"n_estimators": 100, "criterion": "gini", "max_features": "sqrt",
              "bootstrap": True},
    "DT": {"criterion": "gini"},
    "GB": {"n_estimators": 100, "max_depth": 3, "learning_rate": 0.1},
    "KNN": {"n_neighbors": 5, "p": 2},
    "GNB": {"var_smoothing": 1e-9},
    "LOGIT": {"l2": 1e-4, "iterations": 1000, "step": 0.1},
    "NC": {},
    "DUMMY": {},
}


def effective_params(classifier_id: str, params) -> dict:
    """Defaults merged with per-spec overrides, as used at fit time."""
    return {**DEFAULT_PARAMS[classifier_id], **dict(params)}


def _seed32(seed: int) -> int:
    return int(seed) & 0xFFFFFFFF


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class _LogisticGD:
    """Full-batch gradient descent on L2-regularized logistic loss.

    loss = mean cross-entropy + 0.5 * l2 * ||w||^2 (bias unpenalized),
    constant step size, weights initialized to zero.
    """

    def __init__(self, l2: float = 1e-4, iterations: int = 1000, step: float = 0.1):
        self.l2 = float(l2)
        self.iterations = int(iterations)
        self.step = float(step)
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "_LogisticGD":
        n, p = X.shape
        w = np.zeros(p)
        b = 0.0
        yf = y.astype(float)
        for _ in range(self.iterations):
            r = _sigmoid(X @ w + b) - yf
            w -= self.step * (X.T @ r / n + self.l2 * w)
            b -= self.step * float(r.mean())
        self.w, self.b = w, b
        return self

    def score(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(X @ self.w + self.b)


class _NearestCentroid:
    """Nearest class centroid; score = sigmoid(d0 - d1) with Euclidean d."""

    def fit(self, X: np.ndarray, y: np.ndarray) -> "_NearestCentroid":
        self.c0 = X[y == 0].mean(axis=0)
        self.c1 = X[y == 1].mean(axis=0)
        return self

    def score(self, X: np.ndarray) -> np.ndarray:
        d0 = np.linalg.norm(X - self.c0, axis=1)
        d1 = np.linalg.norm(X - self.c1, axis=1)
        return _sigmoid(d0 - d1)


class _Dummy:
    """Majority-class baseline; score is the training class-1 prior."""

    def fit(self, X: np.ndarray, y: np.ndarray) -> "_Dummy":
        self.prior = float(np.mean(y))
        return self

    def score(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.prior)


def _sklearn_factory(classifier_id: str, params: dict, seed: int):
    kwargs = {**DEFAULT_PARAMS[classifier_id], **params}
    cls = {
        "ETr": ExtraTreesClassifier,
        "RandF": RandomForestClassifier,
        "DT": DecisionTreeClassifier,
        "GB": GradientBoostingClassifier,
        "KNN": KNeighborsClassifier,
        "GNB": GaussianNB,
    }[classifier_id]
    if classifier_id in ("ETr", "RandF"):
        kwargs.update(random_state=_seed32(seed), n_jobs=1)
    elif classifier_id in ("DT", "GB"):
        kwargs.update(random_state=_seed32(seed))
    return cls(**kwargs)


@dataclass(frozen=True)
class ClassifierModel:
    classifier_id: str
    seed: int
    train_prior: float  # class-1 fraction of the training labels
    n_features_in: int
    impl: object  # fitted estimator

    def digest(self) -> bytes:
        """Serialized fitted state, for bit-identity assertions in tests."""
        return pickle.dumps(self.impl)


def fit_classifier(spec: PipelineSpec, X_train: np.ndarray, y_train) -> ClassifierModel:
    """Fit the classifier named by ``spec.classifier_id``; deterministic for
    a fixed (data, seed)."""
    cid = spec.classifier_id
    if cid not in CLASSIFIER_IDS:
        raise ValueError(f"unknown classifier id {cid!r}; registry: {CLASSIFIER_IDS}")
    X = np.asarray(X_train, dtype=float)
    y = np.asarray(y_train, dtype=int)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError("X_train must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("X_train must be finite")
    if len(np.unique(y)) < 2:
        raise ValueError(f"{cid} requires both classes in y_train")

    params = dict(spec.classifier_params)
    if cid == "LOGIT":
        impl = _LogisticGD(**params).fit(X, y)
    elif cid == "NC":
        if params:
            raise ValueError(f"NC takes no params, got {sorted(params)}")
        impl = _NearestCentroid().fit(X, y)
    elif cid == "DUMMY":
        if params:
            raise ValueError(f"DUMMY takes no params, got {sorted(params)}")
        impl = _Dummy().fit(X, y)
    else:
        impl = _sklearn_factory(cid, params, spec.seed).fit(X, y)

    return ClassifierModel(
        classifier_id=cid,
        seed=spec.seed,
        train_prior=float(np.mean(y)),
        n_features_in=X.shape[1],
        impl=impl,
    )


def predict_score(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    """Class-1 evidence in [0, 1]: mean leaf class-1 fraction for tree
    ensembles, sigmoid of the margin for GB/LOGIT."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features_in:
        raise ValueError(f"expected {model.n_features_in} columns")
    impl = model.impl
    if hasattr(impl, "predict_proba"):
        proba = impl.predict_proba(X)
        col = list(impl.classes_).index(1)
        return proba[:, col]
    return impl.score(X)


def predict_label(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    """Thresholded prediction: 1 iff predict_score >= 0.5."""
    return (predict_score(model, X) >= 0.5).astype(int)
