import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_accuracy
from scipy.stats import chisquare
from sklearn.metrics import normalized_mutual_info_score

from slkmodes.dataset import Dataset
from slkmodes.errors import BoundsError, DomainError, ShapeError
from slkmodes.metrics import accuracy, contingency, nmi
from slkmodes.seeding import kmeanspp_seeds
from slkmodes.synth import blobs


def test_nmi_hand_cases():
    assert nmi([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert abs(nmi([1, 1, 0, 0], [0, 0, 1, 1]) - 1.0) < 1e-12
    assert abs(nmi([0, 0, 1, 1], [0, 1, 0, 1])) < 1e-12
    assert nmi([0, 0, 0], [0, 0, 0]) == 1.0
    assert nmi([0, 0, 0, 0], [0, 1, 0, 1]) == 0.0
    # pred splits one of two classes: I = ln 2, H(pred) = 1.5 ln 2, H(truth) = ln 2
    expected = math.log(2) / math.sqrt(1.5 * math.log(2) * math.log(2))
    assert abs(nmi([0, 1, 2, 2], [0, 0, 1, 1]) - expected) < 1e-12


def test_nmi_matches_sklearn():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(5, 200))
        a, b = rng.integers(4, size=n), rng.integers(5, size=n)
        ref = normalized_mutual_info_score(b, a, average_method="geometric")
        assert nmi(a, b) == pytest.approx(ref, abs=1e-12)


def test_accuracy_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(200):
        L = int(rng.integers(1, 7))
        n = int(rng.integers(1, 40))
        pred, truth = rng.integers(L, size=n), rng.integers(L, size=n)
        assert accuracy(pred, truth, L) == pytest.approx(brute_force_accuracy(pred, truth, L), abs=1e-15)


def test_accuracy_examples():
    truth = np.repeat([0, 1], 50)
    pred = 1 - truth
    pred[3] = 0
    assert accuracy(pred, truth) == 0.99
    assert accuracy([2, 2, 0, 0, 1], [0, 0, 1, 1, 2]) == 1.0


def test_metric_errors():
    with pytest.raises(DomainError):
        accuracy([0, 3], [0, 1], 2)
    with pytest.raises(DomainError):
        accuracy([0, -1], [0, 1])
    with pytest.raises(ShapeError):
        nmi([0, 1], [0])
    with pytest.raises(ShapeError):
        accuracy([], [])


def test_contingency_counts():
    table = contingency([0, 0, 1, 2], [1, 1, 0, 0])
    np.testing.assert_array_equal(table, [[0, 2], [1, 0], [1, 0]])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60),
       st.permutations(range(4)))
def test_relabel_invariance_and_bounds(pairs, perm):
    pred = np.array([p for p, _ in pairs])
    truth = np.array([t for _, t in pairs])
    relabelled = np.array(perm)[pred]
    assert accuracy(relabelled, truth, 4) == pytest.approx(accuracy(pred, truth, 4), abs=1e-15)
    assert nmi(relabelled, truth) == pytest.approx(nmi(pred, truth), abs=1e-12)
    assert 0.0 <= nmi(pred, truth) <= 1.0
    assert 0.0 < accuracy(pred, truth, 4) <= 1.0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(1, 10), st.integers(0, 10_000))
def test_accuracy_at_least_chance_when_balanced(L, per_class, seed):
    rng = np.random.default_rng(seed)
    truth = np.repeat(np.arange(L), per_class)
    pred = rng.integers(L, size=truth.size)
    assert accuracy(pred, truth, L) >= 1.0 / L - 1e-15


def test_kmeanspp_all_points():
    ds = Dataset(np.random.default_rng(0).normal(size=(7, 2)))
    assert sorted(kmeanspp_seeds(ds, 7, seed=3).tolist()) == list(range(7))


def test_kmeanspp_duplicates_still_distinct():
    ds = Dataset(np.zeros((5, 2)))
    s = kmeanspp_seeds(ds, 4, seed=1)
    assert len(set(s.tolist())) == 4


def test_kmeanspp_first_seed_uniform():
    ds = Dataset(np.arange(20, dtype=float)[:, None])
    counts = np.bincount([kmeanspp_seeds(ds, 1, seed=s)[0] for s in range(10_000)], minlength=20)
    assert chisquare(counts).pvalue > 0.01


def test_kmeanspp_one_seed_per_blob():
    # at sep=10 the in-blob D^2 mass still takes ~10% of third draws; sep=50 is far-separated
    ds = blobs(300, 3, sep=50.0, seed=1)
    hits = sum(len(set(ds.labels[kmeanspp_seeds(ds, 3, seed=s)].tolist())) == 3 for s in range(100))
    assert hits >= 95


def test_kmeanspp_errors_and_determinism():
    ds = Dataset(np.random.default_rng(0).normal(size=(4, 2)))
    with pytest.raises(BoundsError):
        kmeanspp_seeds(ds, 5, seed=0)
    np.testing.assert_array_equal(kmeanspp_seeds(ds, 3, seed=9), kmeanspp_seeds(ds, 3, seed=9))
