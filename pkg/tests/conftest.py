import numpy as np
import pytest

from thermal_routing.model import CascadedParams


@pytest.fixture
def baseline():
    """Equal unit rates, F = 0, resonant modes, baths (200, 100, 0)."""
    return CascadedParams(nbar1=200.0, nbar2=100.0, nbar3=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
