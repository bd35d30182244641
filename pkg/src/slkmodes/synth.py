"""Synthetic benchmark generators (deterministic per seed)."""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .errors import UsageError

GENERATORS = ("blobs", "two-moons")


def blobs(n: int, n_clusters: int = 3, sep: float = 10.0, dim: int = 2, std: float = 1.0, seed=0) -> Dataset:
    """Isotropic Gaussian blobs with centres spaced ``sep`` apart on a regular simplex-like layout."""
    rng = np.random.default_rng(seed)
    if n_clusters == 2 or dim == 1:
        centres = np.zeros((n_clusters, dim))
        centres[:, 0] = sep * np.arange(n_clusters)
    else:
        angles = 2 * np.pi * np.arange(n_clusters) / n_clusters
        radius = sep / (2 * np.sin(np.pi / n_clusters))
        centres = np.zeros((n_clusters, dim))
        centres[:, 0] = radius * np.cos(angles)
        centres[:, 1] = radius * np.sin(angles)
    labels = np.arange(n) % n_clusters
    points = centres[labels] + std * rng.standard_normal((n, dim))
    return Dataset(points, labels)


def two_moons(n: int, noise: float = 0.05, seed=0) -> Dataset:
    """Two interleaving half circles with Gaussian noise."""
    rng = np.random.default_rng(seed)
    n_outer = n - n // 2
    n_inner = n // 2
    t_out = np.linspace(0, np.pi, n_outer)
    t_in = np.linspace(0, np.pi, n_inner)
    outer = np.column_stack([np.cos(t_out), np.sin(t_out)])
    inner = np.column_stack([1 - np.cos(t_in), 1 - np.sin(t_in) - 0.5])
    points = np.vstack([outer, inner]) + noise * rng.standard_normal((n, 2))
    labels = np.concatenate([np.zeros(n_outer, dtype=np.int64), np.ones(n_inner, dtype=np.int64)])
    return Dataset(points, labels)


def generate(name: str, n: int, n_clusters: int = 3, sep: float = 10.0, noise: float = 0.05, seed=0) -> Dataset:
    if name == "blobs":
        return blobs(n, n_clusters, sep, seed=seed)
    if name == "two-moons":
        return two_moons(n, noise, seed=seed)
    raise UsageError(f"unknown generator {name!r}; expected one of {GENERATORS}")
