import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tvmrac.scenarios import example1, example2, example2_noise

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def ex1():
    return example1().validate()


@pytest.fixture(scope="session")
def ex2():
    return example2().validate()


@pytest.fixture(scope="session")
def ex2n():
    return example2_noise().validate()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
