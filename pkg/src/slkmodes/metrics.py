"""Clustering quality: normalized mutual information and Hungarian-matched accuracy."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError, ShapeError


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if pred.shape != truth.shape:
        raise ShapeError(f"label length mismatch: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise ShapeError("empty label vectors")
    return pred, truth


def contingency(pred, truth) -> np.ndarray:
    pred, truth = _pair(pred, truth)
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1))
    np.add.at(table, (pi, ti), 1.0)
    return table


def _entropy(counts) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(pred, truth) -> float:
    """I(pred; truth) / sqrt(H(pred) H(truth)).

    Both partitions trivial gives 1; exactly one trivial gives 0.
    """
    table = contingency(pred, truth)
    n = table.sum()
    h_pred = _entropy(table.sum(1))
    h_truth = _entropy(table.sum(0))
    if h_pred == 0.0 and h_truth == 0.0:
        return 1.0
    if h_pred == 0.0 or h_truth == 0.0:
        return 0.0
    outer = np.outer(table.sum(1), table.sum(0))
    nz = table > 0
    mi = float((table[nz] / n * np.log(n * table[nz] / outer[nz])).sum())
    return float(np.clip(mi / np.sqrt(h_pred * h_truth), 0.0, 1.0))


def accuracy(pred, truth, n_clusters: int | None = None) -> float:
    """Fraction of points matched under the best cluster-to-class assignment."""
    pred, truth = _pair(pred, truth)
    if n_clusters is None:
        n_clusters = int(max(pred.max(), truth.max())) + 1
    for name, lab in (("pred", pred), ("truth", truth)):
        if lab.min() < 0 or lab.max() >= n_clusters:
            raise DomainError(f"{name} labels must lie in [0, {n_clusters})")
    table = np.zeros((n_clusters, n_clusters))
    np.add.at(table, (pred, truth), 1.0)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / pred.size)
