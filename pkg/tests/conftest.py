import numpy as np
import pytest

from rdsbm import SbmParams, complete_graph, simulate_walk


@pytest.fixture(scope="session")
def theta_star() -> SbmParams:
    """Two-class benchmark model used throughout the suite."""
    return SbmParams([2.0 / 3.0, 1.0 / 3.0], [[0.7, 0.4], [0.4, 0.8]])


@pytest.fixture(scope="session")
def long_walk(theta_star):
    """One 1e5-step walk, shared by the frequency and CDF checks."""
    rng = np.random.default_rng(42)
    return simulate_walk(theta_star, 100_000, rng)


def make_sample(params, n, seed):
    rng = np.random.default_rng(seed)
    x, z = simulate_walk(params, n, rng)
    return complete_graph(params, x, z, rng)


@pytest.fixture(scope="session")
def sample_60(theta_star):
    return make_sample(theta_star, 60, 7)
