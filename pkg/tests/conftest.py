import numpy as np
import pytest

from dampedwave.damping import DampingModel
from dampedwave.grid import GridConfig, build_grid


@pytest.fixture(scope="session")
def small_grid():
    """10x10 box at dx = 0.25, truncation-safe to t = 3 for R0 = 2."""
    return build_grid(GridConfig(half_width=10.0, dx=0.25), support_radius=2.0, t_final=3.0)


@pytest.fixture(scope="session")
def obstacle_grid():
    cfg = GridConfig(half_width=10.0, dx=0.25, obstacle="disk", obstacle_radius=1.0)
    return build_grid(cfg, support_radius=2.0, t_final=3.0)


@pytest.fixture(scope="session")
def const_model():
    return DampingModel(variant="radial", alpha=0.0, a0=1.0)


@pytest.fixture(scope="session")
def radial_half_model():
    return DampingModel(variant="radial", alpha=0.5, a0=1.0)


@pytest.fixture(scope="session")
def angular_model():
    return DampingModel(variant="angular", alpha=0.5, a0=1.0, kappa=0.3, beta_p=1.0)


def random_dirichlet_field(grid, seed):
    """Deterministic random field vanishing off the interior."""
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((grid.n, grid.n))
    return grid.mask(f)
