"""Clustering, classification and ranking metrics."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import rankdata

from ..errors import ValidationError


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost assignment of rows to columns (``rows <= cols``).

    Shortest augmenting path with dual potentials, O(r^2 c). Returns
    ``col_of_row``. Ties resolve to the lowest column index.
    """
    cost = np.asarray(cost, dtype=np.float64)
    r, c = cost.shape
    if r > c:
        raise ValidationError("hungarian() needs rows <= cols; transpose the input")
    inf = math.inf
    u = np.zeros(r + 1)
    v = np.zeros(c + 1)
    row_of_col = np.zeros(c + 1, dtype=np.int64)  # 1-based rows, 0 = free
    way = np.zeros(c + 1, dtype=np.int64)
    for i in range(1, r + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(c + 1, inf)
        used = np.zeros(c + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            delta = inf
            j1 = 0
            for j in range(1, c + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(c + 1):
                if used[j]:
                    u[row_of_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while True:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
            if j0 == 0:
                break
    col_of_row = np.full(r, -1, dtype=np.int64)
    for j in range(1, c + 1):
        if row_of_col[j]:
            col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row


def contingency(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValidationError("pred and truth must have equal length")
    p_vals, p_idx = np.unique(pred, return_inverse=True)
    t_vals, t_idx = np.unique(truth, return_inverse=True)
    table = np.zeros((p_vals.size, t_vals.size), dtype=np.int64)
    np.add.at(table, (p_idx, t_idx), 1)
    return table, p_idx, t_idx


def cluster_to_class_map(pred, truth) -> np.ndarray:
    """Per-node mapped class (in ``truth``'s ids) after the optimal one-to-one
    cluster-to-class matching; unmatched clusters map to -1."""
    table, p_idx, _ = contingency(pred, truth)
    t_vals = np.unique(truth)
    if table.shape[0] <= table.shape[1]:
        col = hungarian(-table)
        mapping = t_vals[col]
    else:
        row = hungarian(-table.T)
        mapping = np.full(table.shape[0], -1, dtype=np.int64)
        mapping[row] = t_vals
    return mapping[p_idx]


def clustering_accuracy(pred, truth) -> float:
    mapped = cluster_to_class_map(pred, truth)
    return float(np.mean(mapped == np.asarray(truth)))


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies."""
    table, _, _ = contingency(pred, truth)
    n = table.sum()
    h_p = _entropy(table.sum(axis=1))
    h_t = _entropy(table.sum(axis=0))
    if h_p == 0 and h_t == 0:
        return 1.0
    nz = table > 0
    pij = table[nz] / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())
    return max(0.0, mi / ((h_p + h_t) / 2.0))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2.0


def ari(pred, truth) -> float:
    table, _, _ = contingency(pred, truth)
    n = table.sum()
    index = _comb2(table).sum()
    a = _comb2(table.sum(axis=1)).sum()
    b = _comb2(table.sum(axis=0)).sum()
    total = _comb2(n)
    if total == 0:
        return 1.0
    expected = a * b / total
    maximum = (a + b) / 2.0
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)


def weighted_f1(pred_classes, truth) -> float:
    """Support-weighted mean of per-class F1 over the classes in ``truth``."""
    pred_classes = np.asarray(pred_classes)
    truth = np.asarray(truth)
    classes, support = np.unique(truth, return_counts=True)
    tp = np.array([np.sum((pred_classes == c) & (truth == c)) for c in classes])
    fp = np.array([np.sum((pred_classes == c) & (truth != c)) for c in classes])
    fn = support - tp
    return float((_f1(tp, fp, fn) * support).sum() / support.sum())


def clustering_scores(pred, truth) -> dict[str, float]:
    """ACC, NMI, ARI and weighted F1 of a clustering against single-label truth.

    ``truth`` is an int vector or a single-label ``LabelSet``.
    """
    if hasattr(truth, "multi_label"):
        if truth.multi_label:
            raise ValidationError("clustering metrics need single-label ground truth")
        truth = truth.as_vector()
    truth = np.asarray(truth)
    pred = np.asarray(pred)
    mapped = cluster_to_class_map(pred, truth)
    return {
        "ACC": float(np.mean(mapped == truth)),
        "NMI": nmi(pred, truth),
        "ARI": ari(pred, truth),
        "weighted_F1": weighted_f1(mapped, truth),
    }


def micro_macro_f1(pred: np.ndarray, truth: np.ndarray) -> tuple[float, float]:
    """F1 scores of binary indicator matrices (nodes x labels).

    Macro-F1 averages over labels present in either matrix.
    """
    pred = np.asarray(pred, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    tp = (pred & truth).sum(axis=0)
    fp = (pred & ~truth).sum(axis=0)
    fn = (~pred & truth).sum(axis=0)
    micro = float(_f1(tp.sum(), fp.sum(), fn.sum()))
    seen = (pred | truth).any(axis=0)
    macro = float(_f1(tp, fp, fn)[seen].mean()) if seen.any() else 0.0
    return micro, macro


def auc_score(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties 1/2)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValidationError("scores and labels must have equal length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both positive and negative examples")
    ranks = rankdata(scores, method="average")
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
