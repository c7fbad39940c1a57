import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bovirial.spectral import Grid

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_grid():
    return Grid(2 * np.pi, 64)
