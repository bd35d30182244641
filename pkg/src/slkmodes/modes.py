"""Mode updates: mean-shift (SLK-MS), assignment byproduct (SLK-BO) and the exact hard-max."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .affinity import KernelSpec, kernel_matrix, sq_distances
from .core import ModeSet, hard_labels
from .dataset import Dataset
from .errors import EmptyClusterError

DEFAULT_MS_TOL = 1e-6
DEFAULT_MS_MAX = 100


def _weights(z_col) -> np.ndarray:
    z = np.asarray(z_col, dtype=np.float64)
    if not z.sum() > 0:
        raise EmptyClusterError("cluster has zero total assignment weight")
    return z


def kde_at(ds: Dataset, ks: KernelSpec, z_col, y) -> float:
    """Weighted kernel density sum_q k(y, x_q) z_q / sum_q z_q."""
    z = _weights(z_col)
    k = kernel_matrix(np.atleast_2d(y), ds.points, ks)[0]
    return float(k @ z / z.sum())


def mean_shift_mode(ds: Dataset, ks: KernelSpec, z_col, m_start, ms_tol=DEFAULT_MS_TOL,
                    ms_max=DEFAULT_MS_MAX, return_path=False):
    """Iterate m <- sum z k(x, m) x / sum z k(x, m) from ``m_start``.

    Stops once the step is shorter than ``ms_tol * sigma`` or after
    ``ms_max`` iterations.  Weights are normalized in log space so a start
    far from every weighted point still moves toward the data.
    With ``return_path=True`` also returns the list of visited modes.
    """
    z = _weights(z_col)
    support = z > 0
    X = ds.points[support]
    log_z = np.log(z[support])
    m = np.asarray(m_start, dtype=np.float64).copy()
    path = [m.copy()]
    tol = ms_tol * ks.sigma
    for _ in range(ms_max):
        log_w = log_z - sq_distances(m[None, :], X)[0] / (2.0 * ks.sigma2)
        w = np.exp(log_w - logsumexp(log_w))
        new = w @ X
        step = np.linalg.norm(new - m)
        m = new
        path.append(m.copy())
        if step < tol:
            break
    return (m, path) if return_path else m


def byproduct_mode(Z, l: int) -> int:
    """Row with the largest assignment to cluster ``l`` (lowest index on ties)."""
    return int(np.argmax(np.asarray(Z)[:, l]))


def hard_max_mode_oracle(ds: Dataset, ks: KernelSpec, z_col, m_prev=None, candidates="all",
                         block: int = 1024) -> int:
    """Exact argmax over candidate points y of k(y, m_prev) + sum_p z_p k(x_p, y).

    ``candidates`` is ``"all"`` or an array of dataset indices.  Passing
    ``m_prev=None`` drops the proximity term (pure mode definition).
    """
    z = np.asarray(z_col, dtype=np.float64)
    cand = np.arange(ds.n) if isinstance(candidates, str) and candidates == "all" else np.asarray(candidates)
    if cand.size == 0:
        raise EmptyClusterError("empty candidate set")
    support = z > 0
    X, zs = ds.points[support], z[support]
    score = np.empty(cand.size)
    for lo in range(0, cand.size, block):
        Y = ds.points[cand[lo:lo + block]]
        score[lo:lo + block] = kernel_matrix(Y, X, ks) @ zs if zs.size else 0.0
        if m_prev is not None:
            score[lo:lo + block] += kernel_matrix(Y, np.atleast_2d(m_prev), ks)[:, 0]
    best = np.flatnonzero(score == score.max())
    return int(cand[best].min())


def initial_bo_modes(ds: Dataset, ks: KernelSpec, Z, fallback: ModeSet) -> ModeSet:
    """Starting SLK-BO modes from the initial assignments.

    Each mode is the member of its hard-assigned cluster maximising the
    weighted density; a cluster with no members keeps its fallback mode.
    """
    labels = hard_labels(Z)
    idx = np.array(fallback.indices, copy=True)
    for l in range(Z.shape[1]):
        members = np.flatnonzero(labels == l)
        if members.size and Z[:, l].sum() > 0:
            idx[l] = hard_max_mode_oracle(ds, ks, Z[:, l], None, members)
    if (idx < 0).any():
        # free fallback modes: snap to the nearest data point
        for l in np.flatnonzero(idx < 0):
            idx[l] = int(np.argmin(sq_distances(fallback.vectors[l:l + 1], ds.points)[0]))
    return ModeSet.from_indices(ds, idx)
