import numpy as np
import pytest

from slkmodes.affinity import build_knn_affinity, estimate_bandwidth
from slkmodes.synth import blobs, two_moons


@pytest.fixture(scope="session")
def blobs300():
    return blobs(300, 3, sep=10.0, seed=1)


@pytest.fixture(scope="session")
def moons1000():
    return two_moons(1000, noise=0.05, seed=1)


@pytest.fixture(scope="session")
def small_graph():
    """40 random 2-D points with a k_n=3 affinity and estimated bandwidth."""
    from slkmodes.dataset import Dataset

    rng = np.random.default_rng(3)
    ds = Dataset(rng.normal(size=(40, 2)))
    aff = build_knn_affinity(ds, 3)
    return ds, aff, estimate_bandwidth(ds, aff)


def random_simplex(rng, n, L, alpha=1.0):
    return rng.dirichlet(np.full(L, alpha), size=n)


def random_binary(rng, n, L):
    Z = np.zeros((n, L))
    Z[np.arange(n), rng.integers(L, size=n)] = 1.0
    return Z


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
