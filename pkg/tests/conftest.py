import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from uniquemax.core import GaussianBump, Subspace
from uniquemax.grid import build_grid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid1():
    return build_grid(1, 33)


@pytest.fixture(scope="session")
def grid2():
    return build_grid(2, 33)


@pytest.fixture(scope="session")
def two_bumps():
    """Equal positive bumps at -1.5 and 1.5 on the line."""
    return Subspace((GaussianBump((-1.5,), 0.7, 1), GaussianBump((1.5,), 0.7, 1)), 1)


def random_gaussians(seed, n, k):
    rng = np.random.default_rng(seed)
    return Subspace(tuple(GaussianBump(tuple(rng.uniform(-2, 2, n)), float(rng.uniform(0.5, 1.5)), 1)
                          for _ in range(k)), n)
