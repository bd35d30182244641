"""Assignments, modes, run configuration and the three objectives.

Objectives (Z is N x L, rows on the simplex; a[p, l] = k(x_p, m_l)):

* discrete   E(Z) = -sum z.a + lam * tr(Z^T L Z)               (binary Z, unshifted K)
* relaxed    R(Z) = sum z log z - sum z.a - lam * sum_pq k~_pq z_p.z_q   (K~ = K + shift I)
* auxiliary  A(Z) = sum z.(log z - a - c * b)                  (b = K~ Z^i, c = bound_coupling(lam))
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .affinity import KernelSpec, SparseAffinity, kernel_matrix, laplacian_quadratic
from .dataset import Dataset
from .errors import ConfigError, DomainError, ShapeError

SIMPLEX_TOL = 1e-9
BINARY_TOL = 1e-9
MODE_VARIANTS = ("ms", "bo")


def check_assignment(Z, n: int | None = None) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2:
        raise ShapeError(f"assignment matrix must be 2-D, got shape {Z.shape}")
    if n is not None and Z.shape[0] != n:
        raise ShapeError(f"assignment matrix has {Z.shape[0]} rows, expected {n}")
    if (Z < -SIMPLEX_TOL).any() or (Z > 1 + SIMPLEX_TOL).any():
        raise DomainError("assignment entries must lie in [0, 1]")
    off = np.abs(Z.sum(1) - 1.0)
    if (off > SIMPLEX_TOL).any():
        p = int(off.argmax())
        raise DomainError(f"row {p} sums to {Z[p].sum():.12g}, not 1")
    return Z


def binary_rows(Z) -> np.ndarray:
    return np.asarray(Z).max(axis=1) >= 1.0 - BINARY_TOL


def hard_labels(Z) -> np.ndarray:
    """argmax over clusters; the lowest cluster index wins ties."""
    return np.argmax(np.asarray(Z), axis=1)


def one_hot(labels, n_clusters: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    Z = np.zeros((labels.size, n_clusters))
    Z[np.arange(labels.size), labels] = 1.0
    return Z


@dataclass(frozen=True, eq=False)
class ModeSet:
    """L cluster modes.

    ``vectors`` always holds the L x D coordinates.  ``indices[l]`` is the
    dataset row of mode ``l`` or -1 for a free (mean-shift) vector.
    """

    vectors: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64)
        indices = np.array(self.indices, dtype=np.int64)
        if vectors.ndim != 2 or indices.shape != (vectors.shape[0],):
            raise ShapeError("ModeSet needs an L x D vector array and L indices")
        if not np.all(np.isfinite(vectors)):
            raise DomainError("mode vectors must be finite")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "indices", indices)

    @classmethod
    def from_indices(cls, ds: Dataset, indices) -> "ModeSet":
        indices = np.asarray(indices, dtype=np.int64)
        if ((indices < 0) | (indices >= ds.n)).any():
            raise DomainError("mode index outside the dataset")
        return cls(ds.points[indices], indices)

    @classmethod
    def free(cls, vectors) -> "ModeSet":
        vectors = np.asarray(vectors, dtype=np.float64)
        return cls(vectors, np.full(vectors.shape[0], -1))

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def all_indexed(self) -> bool:
        return bool((self.indices >= 0).all())


@dataclass
class SlkConfig:
    num_clusters: int
    lam: float = 2.0
    k_n: int = 5
    mode_variant: str = "bo"
    inner_tol: float = 1e-6
    inner_max: int = 100
    outer_max: int = 50
    ms_tol: float = 1e-6
    ms_max: int = 100
    seed: int = 0
    knn_method: str = "exact"
    threads: int = 1
    sigma2: float | None = field(default=None)

    def __post_init__(self):
        if self.num_clusters < 2:
            raise ConfigError("num_clusters must be >= 2")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigError("lambda must be finite and >= 0")
        if self.mode_variant not in MODE_VARIANTS:
            raise ConfigError(f"mode_variant must be one of {MODE_VARIANTS}")
        if self.inner_tol <= 0 or self.ms_tol <= 0:
            raise ConfigError("tolerances must be > 0")
        if min(self.inner_max, self.outer_max, self.ms_max) < 1:
            raise ConfigError("iteration caps must be >= 1")
        if self.k_n < 1:
            raise ConfigError("k_n must be >= 1")


def bound_coupling(lam: float) -> float:
    """Weight on b = K~ Z^i in the auxiliary function and the z-update.

    The pairwise sum runs over ordered pairs, so its gradient with respect
    to z_p is 2 * (K~ Z)_p; the tangent bound therefore carries 2 * lam.
    """
    return 2.0 * lam


def mode_affinities(ds: Dataset, ks: KernelSpec, modes: ModeSet) -> np.ndarray:
    """a[p, l] = k(x_p, m_l) with the Gaussian kernel."""
    return kernel_matrix(ds.points, modes.vectors, ks)


def discrete_objective(ds, aff: SparseAffinity, ks, Z, modes: ModeSet, lam: float) -> float:
    Z = check_assignment(Z, ds.n)
    if not binary_rows(Z).all():
        raise DomainError("discrete objective needs binary assignment rows")
    a = mode_affinities(ds, ks, modes)
    return float(-(Z * a).sum() + lam * laplacian_quadratic(aff, Z))


def entropy_term(Z) -> float:
    """sum z log z with 0 log 0 = 0."""
    return float(xlogy(Z, Z).sum())


def relaxed_from_buffers(Z, a, b, lam: float) -> float:
    """R(Z) given a and b = K~ Z computed at the same Z."""
    return float(entropy_term(Z) - (Z * a).sum() - lam * (Z * b).sum())


def relaxed_objective(ds, aff: SparseAffinity, ks, Z, modes: ModeSet, lam: float, shifted: bool = True) -> float:
    Z = check_assignment(Z, ds.n)
    a = mode_affinities(ds, ks, modes)
    b = aff.matmul(Z, shifted=shifted)
    return relaxed_from_buffers(Z, a, b, lam)


def auxiliary_value(Z, a, b, lam: float) -> float:
    """sum_p z_p.(log z_p - a_p - lam * b_p), without the additive constant."""
    Z = np.asarray(Z, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if Z.shape != a.shape or Z.shape != b.shape:
        raise ShapeError(f"shape mismatch: Z {Z.shape}, a {a.shape}, b {b.shape}")
    return float(entropy_term(Z) - (Z * (a + lam * b)).sum())
