import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from strokestack.testkit import load_fixture

# numba compiles on first call, so the first example of a property can be slow
settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def photo():
    return load_fixture("photo")


@pytest.fixture(scope="session")
def flat():
    return load_fixture("flat")


@pytest.fixture(scope="session")
def step_edge():
    return load_fixture("step")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
