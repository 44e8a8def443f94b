import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hodgeflow.sphere import SphereBasis
from hodgeflow.torus import TorusGrid

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


@pytest.fixture
def grid16():
    return TorusGrid(2, 16)


@pytest.fixture
def grid32():
    return TorusGrid(2, 32)


@pytest.fixture
def basis8():
    return SphereBasis(8)


def random_torus_field(grid, seed, k_max=None):
    """Random real field band-limited to ``|k_i| <= k_max`` (default N/3)."""
    from hodgeflow.torus import TorusField

    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((grid.d,) + grid.shape)
    u = TorusField.from_values(grid, vals)
    k_max = grid.N // 3 if k_max is None else k_max
    mask = np.all(np.abs(grid.k) <= k_max, axis=0)
    return TorusField(grid, u.coeffs * mask)
