import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dirichlet_field
from dampedwave.errors import ConfigError
from dampedwave.grid import (
    INTERIOR,
    OBSTACLE_BOUNDARY,
    OBSTACLE_INTERIOR,
    OUTER_BOUNDARY,
    GridConfig,
    build_grid,
)


class TestBuildGrid:
    def test_standard_box(self):
        g = build_grid(GridConfig(half_width=40.0, dx=0.25), support_radius=2.0, t_final=30.0)
        assert g.n == 321
        assert g.margin == pytest.approx(8.0)

    def test_disk_obstacle_classification(self):
        cfg = GridConfig(half_width=10.0, dx=0.5, obstacle="disk", obstacle_radius=1.0)
        g = build_grid(cfg, support_radius=2.0, t_final=2.0)
        inside = g.r < 1.0
        assert np.all(g.classification[inside] != INTERIOR)
        assert np.all(
            np.isin(g.classification[inside], (OBSTACLE_BOUNDARY, OBSTACLE_INTERIOR))
        )
        # nodes clearly outside stay interior (away from the box edge)
        ring = (g.r > 1.5) & (g.r < 8.0)
        assert np.all(g.classification[ring] == INTERIOR)

    def test_truncation_rejected(self):
        with pytest.raises(ConfigError, match="truncation"):
            build_grid(GridConfig(half_width=5.0, dx=0.25), support_radius=2.0, t_final=10.0)

    def test_obstacle_touching_box_rejected(self):
        cfg = GridConfig(half_width=10.0, dx=0.5, obstacle="disk",
                         obstacle_radius=1.0, obstacle_center=(8.5, 0.0))
        with pytest.raises(ConfigError, match="obstacle"):
            build_grid(cfg, support_radius=2.0, t_final=2.0)

    def test_every_node_classified_once(self, obstacle_grid):
        cls = obstacle_grid.classification
        assert set(np.unique(cls)) <= {INTERIOR, OBSTACLE_BOUNDARY, OBSTACLE_INTERIOR,
                                       OUTER_BOUNDARY}
        assert np.all(cls[0, :] == OUTER_BOUNDARY)
        assert np.all(cls[:, -1] == OUTER_BOUNDARY)


class TestLaplacian:
    def test_zero_field(self, small_grid):
        assert np.all(small_grid.laplacian(small_grid.zero_field()) == 0.0)

    def test_quadratic_exact(self, small_grid):
        g = small_grid
        f = g.mask(g.X1**2)
        lap = g.laplacian(f)
        # stencil is exact on quadratics where the whole stencil is interior
        inner = g.interior.copy()
        inner[:2, :] = inner[-2:, :] = inner[:, :2] = inner[:, -2:] = False
        assert np.allclose(lap[inner], 2.0, atol=1e-10)

    def test_constant_to_zero(self, small_grid):
        g = small_grid
        f = g.mask(np.ones((g.n, g.n)))
        inner = g.interior.copy()
        inner[:2, :] = inner[-2:, :] = inner[:, :2] = inner[:, -2:] = False
        assert np.allclose(g.laplacian(f)[inner], 0.0, atol=1e-12)

    def test_gaussian_matches_analytic(self):
        # oracle: f = exp(-|x|^2) has Lap f = (4 |x|^2 - 4) exp(-|x|^2), so -4 at 0
        g = build_grid(GridConfig(half_width=8.0, dx=0.1), support_radius=1.0, t_final=0.0)
        f = g.mask(np.exp(-(g.X1**2 + g.X2**2)))
        i0 = (g.n - 1) // 2
        val = g.laplacian(f)[i0, i0]
        assert val == pytest.approx(-4.0, abs=0.05)

    def test_shape_mismatch(self, small_grid):
        with pytest.raises(ValueError, match="shape"):
            small_grid.laplacian(np.zeros((3, 3)))

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_symmetry(self, small_grid, seed):
        g = small_grid
        f = random_dirichlet_field(g, seed)
        h = random_dirichlet_field(g, seed + 1)
        lhs = float(np.sum(f * g.laplacian(h)))
        rhs = float(np.sum(h * g.laplacian(f)))
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) <= 1e-10 * scale

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_negative_semidefinite(self, small_grid, seed):
        g = small_grid
        f = random_dirichlet_field(g, seed)
        val = float(np.sum(f * g.laplacian(f)))
        assert val <= 1e-10 * float(np.sum(f * f))


class TestGradientIntegrate:
    def test_gradient_linear_exact(self, small_grid):
        g = small_grid
        f = g.mask(3.0 * g.X1 - 2.0 * g.X2)
        g1, g2 = g.gradient(f)
        inner = g.interior.copy()
        inner[:2, :] = inner[-2:, :] = inner[:, :2] = inner[:, -2:] = False
        assert np.allclose(g1[inner], 3.0, atol=1e-10)
        assert np.allclose(g2[inner], -2.0, atol=1e-10)

    def test_integrate_counts_interior(self, small_grid):
        g = small_grid
        ones = np.ones((g.n, g.n))
        expected = g.interior.sum() * g.dx**2
        assert g.integrate(ones) == pytest.approx(expected)
