"""The five evaluation metrics: accuracy, F1, precision, recall, ROC-AUC.

Precision/recall/F1 use the 0/0 -> 0 convention per class. ``mode`` selects
between class-1 values ("binary") and support-weighted means over both
classes ("weighted"). ROC-AUC is the Mann-Whitney statistic with 0.5 credit
for score ties; a single-class truth vector yields 0.5 with a degeneracy flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data_model import METRIC_NAMES, FoldMetrics

MODES = ("binary", "weighted")


@dataclass(frozen=True)
class MetricVector:
    accuracy: float
    f1: float
    precision: float
    recall: float
    roc_auc: float
    mode: str
    auc_degenerate: bool = False  # true when y_true had a single class

    def to_fold_metrics(self) -> FoldMetrics:
        return FoldMetrics(
            self.accuracy, self.f1, self.precision, self.recall, self.roc_auc
        )

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def roc_auc(y_true: np.ndarray, y_score: np.ndarray) -> tuple[float, bool]:
    """Mann-Whitney ROC-AUC: (#{s+ > s-} + 0.5 * #{s+ = s-}) / (n+ * n-).

    Returns (auc, degenerate); degenerate means y_true had one class and the
    value defaults to 0.5.
    """
    y_true = np.asarray(y_true, dtype=int)
    y_score = np.asarray(y_score, dtype=float)
    n_pos = int(np.sum(y_true == 1))
    n_neg = int(np.sum(y_true == 0))
    if n_pos == 0 or n_neg == 0:
        return 0.5, True
    ranks = rankdata(y_score)  # average ranks handle ties with 0.5 credit
    rank_sum_pos = float(np.sum(ranks[y_true == 1]))
    auc = (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return auc, False


def compute_metrics(y_true, y_pred, y_score, mode: str = "weighted") -> MetricVector:
    """Compute the five-metric vector for one evaluation.

    mode="binary" reports class-1 precision/recall/F1; mode="weighted"
    reports the support-weighted mean over both classes.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    y_score = np.asarray(y_score, dtype=float)
    n = len(y_true)
    if n < 1:
        raise ValueError("empty inputs")
    if len(y_pred) != n or len(y_score) != n:
        raise ValueError(
            f"length mismatch: y_true={n}, y_pred={len(y_pred)}, y_score={len(y_score)}"
        )
    if not np.all(np.isin(y_true, (0, 1))) or not np.all(np.isin(y_pred, (0, 1))):
        raise ValueError("y_true and y_pred must be binary (0/1)")
    if not np.all(np.isfinite(y_score)) or np.any(y_score < 0) or np.any(y_score > 1):
        raise ValueError("y_score values must lie in [0, 1]")

    accuracy = float(np.mean(y_true == y_pred))

    prec = {}
    rec = {}
    f1 = {}
    support = {}
    for c in (0, 1):
        tp = float(np.sum((y_pred == c) & (y_true == c)))
        pred_c = float(np.sum(y_pred == c))
        true_c = float(np.sum(y_true == c))
        prec[c] = _safe_div(tp, pred_c)
        rec[c] = _safe_div(tp, true_c)
        f1[c] = _safe_div(2.0 * prec[c] * rec[c], prec[c] + rec[c])
        support[c] = true_c

    if mode == "binary":
        precision, recall, f1_val = prec[1], rec[1], f1[1]
    else:
        w = {c: support[c] / n for c in (0, 1)}
        precision = w[0] * prec[0] + w[1] * prec[1]
        recall = w[0] * rec[0] + w[1] * rec[1]
        f1_val = w[0] * f1[0] + w[1] * f1[1]

    auc, degenerate = roc_auc(y_true, y_score)
    return MetricVector(
        accuracy=accuracy,
        f1=f1_val,
        precision=precision,
        recall=recall,
        roc_auc=auc,
        mode=mode,
        auc_degenerate=degenerate,
    )
