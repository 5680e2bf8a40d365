"""Scalar evaluation metrics: AUC, MAE, score merging, Gini index."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, MetricError


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def auc(scores, labels) -> float:
    """Rank-based AUC with average ranks on ties, over all samples."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise MetricError(f"auc: {s.shape} scores vs {y.shape} labels")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos + n_neg != y.size:
        raise MetricError("auc labels must be 0 or 1")
    if n_pos == 0 or n_neg == 0:
        raise MetricError(
            f"auc needs both classes, got {n_pos} positives / {n_neg} negatives")
    uniq, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts)
    avg_rank = (cum - counts + 1 + cum) / 2.0
    ranks = avg_rank[inverse]
    pos_rank_sum = ranks[y == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def mae(preds, targets) -> float:
    """Mean absolute error."""
    p = np.asarray(preds, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.size == 0:
        raise MetricError("mae of an empty vector")
    if p.shape != t.shape:
        raise MetricError(f"mae: {p.shape} preds vs {t.shape} targets")
    return float(np.abs(p - t).mean())


def merge_scores(preds: dict, weights: dict, tasks) -> np.ndarray:
    """Weighted combination of task outputs into one ranking score.

    Binary task outputs pass through a sigmoid first; regression outputs
    enter as they are.  weights must cover exactly the task names.
    """
    names = [t[0] for t in tasks]
    if sorted(weights) != sorted(names):
        raise ConfigError(
            f"merge weights {sorted(weights)} do not match tasks {sorted(names)}")
    total = None
    for name, kind in tasks:
        p = np.asarray(preds[name], dtype=np.float64)
        g = _sigmoid(p) if kind == "binary" else p
        term = weights[name] * g
        total = term if total is None else total + term
    return total


def gini(exposure_counts: dict) -> float:
    """Gini index of exposure counts, 0 when perfectly uniform.

    Sorted-counts form: G = sum_i (2i - n - 1) x_i / (n sum x), x
    ascending, i counted from 1.
    """
    if not exposure_counts:
        raise MetricError("gini of an empty exposure map")
    x = np.sort(np.asarray(list(exposure_counts.values()), dtype=np.float64))
    if (x < 0).any():
        raise MetricError("gini counts must be non-negative")
    total = x.sum()
    if total <= 0:
        raise MetricError("gini needs a positive total count")
    n = x.size
    i = np.arange(1, n + 1)
    return float(((2 * i - n - 1) * x).sum() / (n * total))
