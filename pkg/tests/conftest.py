import numpy as np
import pytest

from mmrelay.config import preset


@pytest.fixture(scope="session")
def uma():
    return preset("uma")


@pytest.fixture(scope="session")
def ind():
    return preset("ind")


@pytest.fixture(scope="session")
def uma_inputs(uma):
    return uma.coverage_inputs()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
