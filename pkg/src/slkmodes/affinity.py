"""Sparse kNN affinity graph, Gaussian bandwidth estimate and kernel evaluations.

The pairwise (Laplacian) term uses a binary kNN graph symmetrized by union.
The mode term uses a Gaussian kernel whose bandwidth is estimated from the
directed (pre-union) kNN distances.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .dataset import Dataset
from .errors import BoundsError, DegenerateBandwidthError, ShapeError, UsageError

KNN_METHODS = ("exact", "kd-tree")
DEFAULT_KN = 5


def resolve_threads(threads: int | None) -> int:
    if not threads:
        return os.cpu_count() or 1
    if threads < 0:
        raise UsageError("threads must be >= 0")
    return int(threads)


def row_blocks(n: int, parts: int):
    """Split ``range(n)`` into at most ``parts`` contiguous slices."""
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


@dataclass(frozen=True)
class KernelSpec:
    sigma2: float

    def __post_init__(self):
        s2 = float(self.sigma2)
        if not np.isfinite(s2) or s2 <= 0.0:
            raise DegenerateBandwidthError(f"sigma^2 must be finite and > 0, got {self.sigma2!r}")
        object.__setattr__(self, "sigma2", s2)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


def gaussian_kernel(x, y, ks: KernelSpec) -> float:
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return float(np.exp(-np.dot(diff, diff) / (2.0 * ks.sigma2)))


def sq_distances(X, Y) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    d2 = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * (X @ Y.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def kernel_matrix(X, Y, ks: KernelSpec) -> np.ndarray:
    """Gaussian kernel values between rows of ``X`` and rows of ``Y``."""
    return np.exp(-sq_distances(X, Y) / (2.0 * ks.sigma2))


@dataclass(frozen=True, eq=False)
class SparseAffinity:
    """Symmetric binary kNN affinity with a diagonal PSD shift.

    ``weights`` is a CSR matrix without diagonal entries.  ``shift`` is the
    delta added on the diagonal by :meth:`matmul` when ``shifted=True``;
    ``knn_index``/``knn_sqdist`` keep the directed neighbour lists used for
    bandwidth estimation.
    """

    weights: sp.csr_matrix
    shift: float
    k_n: int
    knn_index: np.ndarray = field(repr=False)
    knn_sqdist: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        deg = np.asarray(self.weights.sum(axis=1)).ravel()
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def rho(self) -> int:
        """Maximum neighbour-list length."""
        return int(np.diff(self.weights.indptr).max(initial=0))

    @property
    def shifted_degrees(self) -> np.ndarray:
        return self.degrees + self.shift

    def neighbors(self, p: int) -> list[tuple[int, float]]:
        lo, hi = self.weights.indptr[p], self.weights.indptr[p + 1]
        return list(zip(self.weights.indices[lo:hi].tolist(), self.weights.data[lo:hi].tolist()))

    def edges(self) -> set[tuple[int, int]]:
        coo = self.weights.tocoo()
        return set(zip(coo.row.tolist(), coo.col.tolist()))

    def dense(self, shifted: bool = False) -> np.ndarray:
        K = self.weights.toarray()
        if shifted:
            K[np.diag_indices_from(K)] += self.shift
        return K

    def matmul(self, Z: np.ndarray, shifted: bool = True, threads: int = 1) -> np.ndarray:
        """Return ``K Z`` (or ``(K + shift I) Z``), computed row-block-wise.

        Each output row depends only on that row's neighbours, so blocks can
        be processed in any order or concurrently with identical results.
        """
        Z = np.asarray(Z, dtype=np.float64)
        if Z.shape[0] != self.n:
            raise ShapeError(f"Z has {Z.shape[0]} rows, affinity has {self.n}")
        blocks = row_blocks(self.n, threads)
        if len(blocks) == 1:
            out = np.asarray(self.weights @ Z)
        else:
            out = np.empty_like(Z)

            def work(rows):
                out[rows] = self.weights[rows] @ Z

            with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
                list(pool.map(work, blocks))
        if shifted and self.shift:
            out = out + self.shift * Z
        return out

    def write_edge_list(self, path) -> None:
        coo = self.weights.tocoo()
        with open(path, "w") as fh:
            for p, q, w in zip(coo.row, coo.col, coo.data):
                fh.write(f"{p} {q} {w:g}\n")


def _select(points, rows, candidates, k_n):
    """Order each row's candidate set by (squared distance, index) and keep k_n.

    Distances are recomputed from coordinate differences so that both search
    methods rank identical candidate sets identically.
    """
    n_rows = len(rows)
    idx = np.empty((n_rows, k_n), dtype=np.int64)
    d2 = np.empty((n_rows, k_n), dtype=np.float64)
    for i, (p, cand) in enumerate(zip(rows, candidates)):
        cand = np.asarray(cand, dtype=np.int64)
        cand = cand[cand != p]
        diff = points[cand] - points[p]
        dist = np.einsum("ij,ij->i", diff, diff)
        order = np.lexsort((cand, dist))[:k_n]
        idx[i] = cand[order]
        d2[i] = dist[order]
    return idx, d2


def _knn_exact(points, k_n, block=512):
    n = points.shape[0]
    idx = np.empty((n, k_n), dtype=np.int64)
    d2 = np.empty((n, k_n), dtype=np.float64)
    sq = (points * points).sum(1)
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        D = sq[rows, None] + sq[None, :] - 2.0 * (points[rows] @ points.T)
        D[np.arange(len(rows)), rows] = np.inf
        kth = np.partition(D, k_n - 1, axis=1)[:, k_n - 1]
        # margin covers rounding differences of the expanded formula
        slack = 1e-9 * (sq[rows] + sq.max() + 1.0)
        candidates = [np.flatnonzero(D[i] <= kth[i] + slack[i]) for i in range(len(rows))]
        idx[rows], d2[rows] = _select(points, rows, candidates, k_n)
    return idx, d2


def _knn_kdtree(points, k_n):
    n = points.shape[0]
    tree = cKDTree(points)
    rows = np.arange(n)
    k_query = min(n, k_n + 2)
    candidates = [None] * n
    pending = rows
    while pending.size:
        dist, ind = tree.query(points[pending], k=k_query)
        dist = np.atleast_2d(dist)
        ind = np.atleast_2d(ind)
        still = []
        for i, p in enumerate(pending):
            keep = ind[i] != p
            dd = dist[i][keep]
            kth = dd[k_n - 1]
            if k_query < n and dist[i, -1] <= kth * (1.0 + 1e-9) + 1e-300:
                # a tie may continue past the returned list
                still.append(p)
            else:
                cut = kth * (1.0 + 1e-9) + 1e-300
                candidates[p] = ind[i][keep][dd <= cut]
        pending = np.asarray(still, dtype=np.int64)
        k_query = min(n, 2 * k_query)
    return _select(points, rows, candidates, k_n)


def knn_lists(points, k_n: int, method: str = "exact"):
    """Directed k_n-nearest-neighbour lists (self excluded, ties to lower index)."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if not 1 <= k_n < n:
        raise BoundsError(f"k_n must satisfy 1 <= k_n < N={n}, got {k_n}")
    if method == "exact":
        return _knn_exact(points, k_n)
    if method == "kd-tree":
        return _knn_kdtree(points, k_n)
    raise UsageError(f"unknown kNN method {method!r}; expected one of {KNN_METHODS}")


def build_knn_affinity(ds: Dataset, k_n: int = DEFAULT_KN, method: str = "exact") -> SparseAffinity:
    """Binary kNN graph, symmetrized by union, with shift = max degree."""
    idx, d2 = knn_lists(ds.points, k_n, method)
    n = ds.n
    rows = np.repeat(np.arange(n), k_n)
    directed = sp.csr_matrix((np.ones(rows.size), (rows, idx.ravel())), shape=(n, n))
    W = directed.maximum(directed.T).tocsr()
    W.sort_indices()
    W.data[:] = 1.0
    aff = SparseAffinity(W, 0.0, k_n, idx, d2)
    shift = float(aff.degrees.max(initial=0.0))
    return SparseAffinity(W, shift, k_n, idx, d2)


def affinity_from_edges(n: int, edges, shift: float | None = None) -> SparseAffinity:
    """Build a symmetric binary affinity from an undirected edge list (tests, toy graphs)."""
    pairs = [(p, q) for p, q in edges if p != q]
    if pairs:
        r, c = np.array(pairs).T
        rows = np.concatenate([r, c])
        cols = np.concatenate([c, r])
    else:
        rows = cols = np.array([], dtype=np.int64)
    W = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    W.sum_duplicates()
    W.data[:] = 1.0
    W.sort_indices()
    empty = np.zeros((n, 0))
    aff = SparseAffinity(W, 0.0, 0, empty.astype(np.int64), empty)
    if shift is None:
        shift = float(aff.degrees.max(initial=0.0))
    return SparseAffinity(W, float(shift), 0, empty.astype(np.int64), empty)


def estimate_bandwidth(ds: Dataset, aff) -> KernelSpec:
    """sigma^2 = mean squared distance over the directed k_n-neighbour lists.

    ``aff`` is a :class:`SparseAffinity` or an ``(N, k_n)`` index array.
    """
    if isinstance(aff, SparseAffinity):
        knn_sqdist = aff.knn_sqdist
    else:
        index = np.asarray(aff, dtype=np.int64)
        diff = ds.points[index] - ds.points[:, None, :]
        knn_sqdist = np.einsum("pkd,pkd->pk", diff, diff)
    if knn_sqdist.size == 0 or knn_sqdist.shape[0] != ds.n:
        raise ShapeError("bandwidth estimation needs directed kNN lists for every point")
    sigma2 = float(knn_sqdist.sum() / knn_sqdist.size)
    if sigma2 <= 0.0:
        raise DegenerateBandwidthError("all neighbour distances are zero; sigma^2 = 0")
    return KernelSpec(sigma2)


def laplacian_quadratic(aff: SparseAffinity, Z) -> float:
    """tr(Z^T L Z) for the unshifted graph Laplacian L = diag(d) - K."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] != aff.n:
        raise ShapeError(f"Z shape {Z.shape} incompatible with {aff.n}-point affinity")
    KZ = aff.matmul(Z, shifted=False)
    return float(np.dot(aff.degrees, (Z * Z).sum(1)) - (Z * KZ).sum())

