import numpy as np
import pytest

from spherelab.grid import GridSpec


@pytest.fixture
def spec2() -> GridSpec:
    return GridSpec(dim=2, extent=2.0, points=128)


@pytest.fixture
def spec2_fine() -> GridSpec:
    return GridSpec(dim=2, extent=2.0, points=256)


@pytest.fixture
def spec3() -> GridSpec:
    return GridSpec(dim=3, extent=2.0, points=32)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250808)
