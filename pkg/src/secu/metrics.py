"""Clustering evaluation: matched accuracy, NMI, ARI, size extrema.

All three scores are computed from the contingency table of predicted
clusters against ground-truth classes. Accuracy maximizes the matched count
over injective cluster-to-class matchings (exact optimal assignment); NMI
uses natural logs and geometric-mean normalization with 0/0 defined as 0.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def contingency_table(pred, truth) -> np.ndarray:
    """Counts table of shape (n_pred_clusters, n_true_classes)."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.size == 0 or pred.shape != truth.shape:
        raise ValueError("pred and truth must be equal-length nonempty arrays")
    if np.any(pred < 0) or np.any(truth < 0):
        raise ValueError("labels must be nonnegative")
    kp, kt = int(pred.max()) + 1, int(truth.max()) + 1
    table = np.zeros((kp, kt), dtype=np.int64)
    np.add.at(table, (pred, truth), 1)
    return table


def accuracy(pred, truth) -> float:
    """Best-matching accuracy under an injective cluster-to-class map."""
    table = contingency_table(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / float(table.sum())


def _entropy(marginal, n: int) -> float:
    p = marginal[marginal > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information normalized by the geometric mean of entropies.

    Natural logs; 0/0 (a constant partition) is defined as 0. The result is
    clamped into [0, 1], the mathematical range, against rounding spill.
    """
    table = contingency_table(pred, truth).astype(np.float64)
    n = table.sum()
    a = table.sum(axis=1)
    b = table.sum(axis=0)
    nz = table > 0
    outer = np.outer(a, b)
    mi = float(np.sum(table[nz] / n * np.log(table[nz] * n / outer[nz])))
    denom = np.sqrt(_entropy(a, n) * _entropy(b, n))
    if denom <= 0:
        return 0.0
    return min(1.0, max(0.0, mi / denom))


def _pair_count(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x * (x - 1.0) / 2.0))


def ari(pred, truth) -> float:
    """Adjusted Rand index from pair counts.

    When both partitions are trivial (degenerate denominator) the value is
    1.0 if they are the same partition and 0.0 otherwise.
    """
    table = contingency_table(pred, truth)
    n = table.sum()
    sum_ij = _pair_count(table)
    sum_a = _pair_count(table.sum(axis=1))
    sum_b = _pair_count(table.sum(axis=0))
    total = n * (n - 1) / 2.0
    expected = sum_a * sum_b / total if total > 0 else 0.0
    denom = 0.5 * (sum_a + sum_b) - expected
    if denom == 0.0:
        same = sum_ij == sum_a == sum_b
        return 1.0 if same else 0.0
    return (sum_ij - expected) / denom


def size_stats(pred, k: int | None = None) -> tuple[int, int]:
    """(max, min) cluster size over all K clusters, empty ones included."""
    pred = np.asarray(pred, dtype=np.int64)
    if k is None:
        k = int(pred.max()) + 1
    counts = np.bincount(pred, minlength=k)
    return int(counts.max()), int(counts.min())
