##
## Name:     conftest.py
## Purpose:  Shared fixtures for the risowc tests.
##
import numpy as np
import pytest

from risowc.scenario import ScenarioConfig


@pytest.fixture(scope='session')
def scenario():
    """The shipped default scenario."""
    return ScenarioConfig.load()


@pytest.fixture(scope='session')
def small_scenario():
    """A 4x4 array with default optics, for the slower sampling tests."""
    return ScenarioConfig.from_dict({'geometry': {'rows': 4, 'cols': 4}})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_channel(rng):
    """Return a function drawing complex test vectors of length n with
    moderately spread magnitudes."""
    def draw(n):
        mag = 1 + 0.2 * rng.uniform(-1, 1, n)
        return mag * np.exp(1j * rng.uniform(0, 2 * np.pi, n))

    return draw
