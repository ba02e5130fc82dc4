"""Regression and binary-classification metrics with pinned tie conventions.

These are hand-rolled on purpose: the tie handling is part of the contract
(Mann-Whitney ties count one half; the PR curve is an interpolation-free
step integral over descending-score groups; thresholding treats a score of
exactly 0 as positive) and must not drift with an external library.
"""

from __future__ import annotations

import numpy as np
import scipy.stats

__all__ = ["mse", "f1_at_zero", "auroc", "auprc"]


def _check_pair(y_true, other, other_name: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(y_true, dtype=float)
    b = np.asarray(other, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError(f"y_true and {other_name} must be 1-dimensional")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"y_true has {a.shape[0]} entries, {other_name} has {b.shape[0]}")
    if a.shape[0] == 0:
        raise ValueError("inputs must be nonempty")
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        raise ValueError("inputs must be finite everywhere")
    return a, b


def _check_labels(y_true, scores) -> tuple[np.ndarray, np.ndarray]:
    labels, scores = _check_pair(y_true, scores, "scores")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    return labels, scores


def mse(y_true, y_pred) -> float:
    """Mean squared difference."""
    a, b = _check_pair(y_true, y_pred, "y_pred")
    d = a - b
    return float(np.mean(d * d))


def f1_at_zero(y_true, scores) -> float:
    """F1 of the classifier sign(score), with sign(0) = +1.

    Returns 0 when there are no true or predicted positives at all
    (2TP + FP + FN = 0).
    """
    labels, scores = _check_labels(y_true, scores)
    preds = np.where(scores >= 0.0, 1.0, -1.0)
    tp = int(np.sum((preds == 1.0) & (labels == 1.0)))
    fp = int(np.sum((preds == 1.0) & (labels == -1.0)))
    fn = int(np.sum((preds == -1.0) & (labels == 1.0)))
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2.0 * tp / denom


def auroc(y_true, scores) -> float:
    """Probability a random positive outscores a random negative; ties count half.

    Computed in the Mann-Whitney form from midranks, so equal scores
    contribute exactly one half regardless of input order.
    """
    labels, scores = _check_labels(y_true, scores)
    n_pos = int(np.sum(labels == 1.0))
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auroc needs both classes present")
    ranks = scipy.stats.rankdata(scores, method="average")
    u = float(ranks[labels == 1.0].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auprc(y_true, scores) -> float:
    """Area under the precision-recall step curve, interpolation-free.

    Sweeps thresholds downward through the distinct score values, treating
    every group of tied scores as a single cut, and accumulates
    (recall_k - recall_{k-1}) * precision_k.
    """
    labels, scores = _check_labels(y_true, scores)
    n_pos = int(np.sum(labels == 1.0))
    if n_pos == 0:
        raise ValueError("auprc needs at least one positive")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]

    area = 0.0
    recall_prev = 0.0
    tp = 0
    seen = 0
    i = 0
    n = labels.shape[0]
    while i < n:
        j = i
        while j < n and sorted_scores[j] == sorted_scores[i]:
            j += 1
        tp += int(np.sum(sorted_labels[i:j] == 1.0))
        seen += j - i
        recall = tp / n_pos
        precision = tp / seen
        area += (recall - recall_prev) * precision
        recall_prev = recall
        i = j
    return area
