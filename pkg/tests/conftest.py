import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vortexbif.primary_branch import solve_primary
from vortexbif.radial_spectral import get_discretization

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def disc():
    return get_discretization()


@pytest.fixture(scope="session")
def branch_2_005(disc):
    return solve_primary(2, 0.05, disc)


@pytest.fixture(scope="session")
def branch_1_005(disc):
    return solve_primary(1, 0.05, disc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
