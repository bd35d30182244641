"""K-means++ seeding."""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .errors import BoundsError


def kmeanspp_seeds(ds: Dataset, n_clusters: int, seed=None) -> np.ndarray:
    """Distinct dataset indices chosen by D^2-weighted sequential sampling.

    The first seed is uniform.  When every remaining point coincides with a
    chosen one (all D^2 weights zero) the next seed is uniform over the
    unchosen points.
    """
    n = ds.n
    if n_clusters < 1 or n_clusters > n:
        raise BoundsError(f"need 1 <= L <= N={n}, got L={n_clusters}")
    rng = np.random.default_rng(seed)
    X = ds.points
    chosen = [int(rng.integers(n))]
    d2 = ((X - X[chosen[0]]) ** 2).sum(1)
    d2[chosen[0]] = 0.0
    for _ in range(1, n_clusters):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(1))
        d2[chosen] = 0.0
    return np.array(chosen, dtype=np.int64)
