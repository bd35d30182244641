import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_hard_max, star_instance

from slkmodes.affinity import KernelSpec, build_knn_affinity, estimate_bandwidth, kernel_matrix
from slkmodes.core import ModeSet, bound_coupling
from slkmodes.dataset import Dataset
from slkmodes.errors import EmptyClusterError
from slkmodes.modes import (
    byproduct_mode,
    hard_max_mode_oracle,
    initial_bo_modes,
    kde_at,
    mean_shift_mode,
)
from slkmodes.optimizer import build_update_vectors, initialize_z, z_update


def test_mean_shift_symmetric_fixed_point():
    ds = Dataset([[0.0], [2.0]])
    m = mean_shift_mode(ds, KernelSpec(1.0), [0.5, 0.5], [1.0])
    assert m[0] == pytest.approx(1.0, abs=1e-15)


def test_mean_shift_single_point():
    ds = Dataset([[3.0, -1.0]])
    m, path = mean_shift_mode(ds, KernelSpec(0.7), [1.0], [10.0, 10.0], return_path=True)
    np.testing.assert_array_equal(m, [3.0, -1.0])
    np.testing.assert_array_equal(path[1], [3.0, -1.0])
    assert len(path) == 3  # first step lands, second step has zero length


def test_mean_shift_dominant_mass():
    ds = Dataset([[0.0], [0.0], [0.0], [10.0]])
    ks = KernelSpec(1.0)
    z = np.full(4, 0.25)
    m = mean_shift_mode(ds, ks, z, [0.5])
    grid = np.linspace(-2, 2, 400001)
    dens = kernel_matrix(grid[:, None], ds.points, ks) @ z
    peak = grid[np.argmax(dens)]
    assert abs(m[0] - peak) < 1e-4 and abs(m[0]) < 1e-4
    assert kde_at(ds, ks, z, m) >= kde_at(ds, ks, z, [0.5])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 2))
def test_mean_shift_kde_non_decreasing(seed, dim):
    rng = np.random.default_rng(seed)
    ds = Dataset(rng.normal(size=(30, dim)) * rng.uniform(0.5, 5))
    ks = KernelSpec(rng.uniform(0.1, 4))
    z = rng.random(30)
    _, path = mean_shift_mode(ds, ks, z, rng.normal(size=dim) * 3, return_path=True)
    vals = [kde_at(ds, ks, z, m) for m in path]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_mean_shift_zero_weight():
    with pytest.raises(EmptyClusterError):
        mean_shift_mode(Dataset([[0.0], [1.0]]), KernelSpec(1.0), [0.0, 0.0], [0.0])


def test_byproduct_mode_examples():
    assert byproduct_mode(np.array([[0.1], [0.7], [0.2]]), 0) == 1
    assert byproduct_mode(np.full((5, 2), 0.5), 1) == 0


def test_hard_max_self_maximisation():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.normal(size=(25, 3)))
    ks = KernelSpec(0.5)
    for q in (0, 7, 24):
        z = np.zeros(25)
        z[q] = 1.0
        assert hard_max_mode_oracle(ds, ks, z, ds.points[q]) == q


def test_hard_max_matches_second_implementation():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(5, 30))
        ds = Dataset(rng.normal(size=(n, 2)))
        ks = KernelSpec(rng.uniform(0.2, 2))
        z = rng.random(n)
        m_prev = rng.normal(size=2)
        cand = np.sort(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
        pts = ds.points.tolist()
        assert hard_max_mode_oracle(ds, ks, z, m_prev) == brute_hard_max(pts, ks.sigma2, z, m_prev, range(n))
        assert hard_max_mode_oracle(ds, ks, z, None, cand, block=3) == brute_hard_max(pts, ks.sigma2, z, None, cand)


def test_hard_max_proximity_limit():
    rng = np.random.default_rng(2)
    ds = Dataset(rng.normal(size=(40, 2)))
    m_prev = np.array([0.3, -0.2])
    got = hard_max_mode_oracle(ds, KernelSpec(1.0), np.full(40, 1e-30), m_prev)
    assert got == int(np.argmin(((ds.points - m_prev) ** 2).sum(1)))


def test_hard_max_empty_candidates():
    with pytest.raises(EmptyClusterError):
        hard_max_mode_oracle(Dataset([[0.0]]), KernelSpec(1.0), [1.0], None, np.array([], dtype=int))


def test_kde_examples():
    ds = Dataset([[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]])
    ks = KernelSpec(1.0)
    assert kde_at(ds, ks, [0, 1, 0], [2.0, 0.0]) == 1.0
    assert kde_at(ds, ks, [1, 1, 0], [1.0, 0.0]) == pytest.approx(math.exp(-0.5), rel=1e-15)
    with pytest.raises(EmptyClusterError):
        kde_at(ds, ks, [0, 0, 0], [0.0, 0.0])


def test_kde_proportional_to_dense_gaussian_b():
    rng = np.random.default_rng(3)
    ds = Dataset(rng.normal(size=(30, 2)))
    ks = KernelSpec(0.8)
    Z = rng.dirichlet(np.ones(3), size=30)
    b = kernel_matrix(ds.points, ds.points, ks) @ Z
    for l in range(3):
        for p in range(30):
            assert kde_at(ds, ks, Z[:, l], ds.points[p]) * Z[:, l].sum() == pytest.approx(b[p, l], abs=1e-12)


def test_byproduct_equals_hard_max_on_stars():
    rng = np.random.default_rng(4)
    for _ in range(20):
        ds, centres = star_instance(rng)
        aff = build_knn_affinity(ds, 3)
        ks = estimate_bandwidth(ds, aff)
        modes = ModeSet.from_indices(ds, centres)
        Z0 = initialize_z(ds, ks, modes)
        Z = z_update(build_update_vectors(ds, aff, ks, Z0, modes), bound_coupling(0.05))
        for l in range(len(centres)):
            assert byproduct_mode(Z, l) == hard_max_mode_oracle(ds, ks, Z[:, l], modes.vectors[l])


def test_initial_bo_modes_are_cluster_members():
    rng = np.random.default_rng(5)
    ds, centres = star_instance(rng, ring=6)
    ks = KernelSpec(0.5)
    seeds = ModeSet.from_indices(ds, centres + 1)  # start on a ring point
    Z = initialize_z(ds, ks, seeds)
    modes = initial_bo_modes(ds, ks, Z, seeds)
    assert modes.all_indexed
    np.testing.assert_array_equal(modes.indices, centres)
