import numpy as np
import pytest

from qutrit_oam.measurement import projector_set
from qutrit_oam.simulation import benchmark_state


@pytest.fixture(scope="session")
def settings():
    return projector_set()


@pytest.fixture(scope="session")
def bench_state():
    return benchmark_state()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
