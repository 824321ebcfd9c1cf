import math

from hypothesis import given, settings
from hypothesis import strategies as st

import numpy as np
import pytest


from dampedwave.damping import DampingModel, TabulatedValues, bracket
from dampedwave.errors import NumericsError
from dampedwave.grid import GridConfig, build_grid
from dampedwave.weight import (
    WeightField,
    assemble_weight,
    b1_primitive_coeff,
    cutoff_radius,
    eta_cutoff,
    newton_gradient,
    newton_potential,
    newton_self_cell,
    phi_weight,
    split_b1_b2,
    verify_weight,
)
from dampedwave.checks import disk_indicator


class TestSplit:
    def test_alpha_zero_kills_b2(self, const_model):
        b1, b2 = split_b1_b2(const_model)
        x = np.linspace(-5, 5, 11)
        assert np.allclose(b1(x, x), 1.0)
        assert np.allclose(b2(x, x), 0.0)

    def test_alpha_half_at_origin(self):
        m = DampingModel(variant="radial", alpha=0.5, a0=1.0)
        b1, b2 = split_b1_b2(m)
        z = np.array(0.0)
        assert float(b1(z, z)) == pytest.approx(1.0 + 0.5 / 1.5, rel=1e-14)
        assert float(b2(z, z)) == pytest.approx(-1.0 / 3.0, rel=1e-12)

    def test_sum_reconstructs_a(self, small_grid, angular_model):
        b1, b2 = split_b1_b2(angular_model)
        total = b1(small_grid.X1, small_grid.X2) + b2(small_grid.X1, small_grid.X2)
        a = angular_model.evaluate(small_grid.X1, small_grid.X2)
        assert np.allclose(total, a, rtol=1e-14)

    def test_b2_ratio_decays_along_rays(self, angular_model):
        _, b2 = split_b1_b2(angular_model)
        theta = np.linspace(0, 2 * np.pi, 16, endpoint=False)
        x1 = 50.0 * np.cos(theta)
        x2 = 50.0 * np.sin(theta)
        ratio = np.abs(b2(x1, x2)) / angular_model.evaluate(x1, x2)
        assert np.max(ratio) < 0.05

    def test_b1_is_laplacian_of_primitive(self):
        # finite-difference oracle for Lap B1 at a generic point
        m = DampingModel(variant="radial", alpha=0.5, a0=2.0)
        b1, _ = split_b1_b2(m)
        coeff = b1_primitive_coeff(m)
        h = 1e-4

        def primitive(x1, x2):
            return coeff * bracket(x1, x2) ** 1.5

        x, y = 1.7, -0.6
        lap_fd = (
            primitive(x + h, y) + primitive(x - h, y)
            + primitive(x, y + h) + primitive(x, y - h)
            - 4 * primitive(x, y)
        ) / h**2
        assert lap_fd == pytest.approx(float(b1(np.array(x), np.array(y))), rel=1e-6)


class TestCutoff:
    def test_alpha_zero_takes_smallest_rung(self, const_model):
        assert cutoff_radius(const_model, 0.1, search_max=20.0) == pytest.approx(0.5)

    def test_radial_half_matches_ray_scan(self):
        m = DampingModel(variant="radial", alpha=0.5, a0=1.0)
        r_eps = cutoff_radius(m, 0.1, search_max=30.0)
        # oracle: |b2|/a = (1/3) <r>^-2 <= 0.1 iff <r>^2 >= 10/3
        r_exact = math.sqrt(10.0 / 3.0 - 1.0)
        assert r_eps >= r_exact
        assert r_eps <= r_exact * 1.25  # one ladder rung above the exact radius
        _, b2 = split_b1_b2(m)
        rr = np.linspace(r_eps, 100.0, 500)
        assert np.all(np.abs(b2(rr, np.zeros_like(rr))) <= 0.1 * m.evaluate(rr, np.zeros_like(rr)) + 1e-15)

    def test_nonvanishing_ratio_fails(self, small_grid):
        vals = 1.5 * bracket(small_grid.X1, small_grid.X2) ** (-0.5)
        m = DampingModel(variant="tabulated", alpha=0.5, a0=1.0,
                         table=TabulatedValues(small_grid.x, vals))
        with pytest.raises(NumericsError, match="cutoff"):
            cutoff_radius(m, 0.1, search_max=8.0, r_probe_max=9.0)


class TestEta:
    def test_plateau_and_support(self):
        r = np.array([0.0, 1.0, 2.0, 2.5, 4.0, 5.0, 10.0])
        eta = eta_cutoff(r, 2.0)
        assert np.all(eta[:3] == 1.0)
        assert np.all(eta[5:] == 0.0)
        assert np.all((eta >= 0.0) & (eta <= 1.0))

    @given(r_eps=st.floats(0.2, 20.0))
    @settings(max_examples=50, deadline=None)
    def test_bounds_any_cutoff(self, r_eps):
        r = np.linspace(0.0, 3.0 * r_eps, 301)
        eta = eta_cutoff(r, r_eps)
        assert np.all((eta >= 0.0) & (eta <= 1.0))
        assert np.all(np.diff(eta) <= 1e-15)  # monotone non-increasing
        assert np.all(eta[r <= r_eps] == 1.0)
        assert np.all(eta[r >= 2 * r_eps] == 0.0)

    def test_c2_transition(self):
        # second difference of the quintic stays bounded through both ends
        r_eps = 2.0
        h = 1e-4
        for r0 in (r_eps, 2 * r_eps):
            vals = eta_cutoff(np.array([r0 - h, r0, r0 + h]), r_eps)
            second = (vals[0] - 2 * vals[1] + vals[2]) / h**2
            assert abs(second) < 1e-3  # smoothstep has zero curvature at ends


class TestNewton:
    def test_zero_source(self, small_grid):
        assert np.all(newton_potential(small_grid, small_grid.zero_field()) == 0.0)

    def test_self_cell_against_quadrature(self):
        # independent oracle: polar reduction of int_cell log(1/r) / (2 pi).
        # For each angle the radial integral to the square edge is analytic:
        # int_0^rho r log r dr = rho^2 (2 log rho - 1) / 4.
        dx = 0.25
        a = dx / 2
        theta = np.linspace(0.0, np.pi / 4, 20001)
        rho = a / np.cos(theta)
        inner = rho**2 * (2.0 * np.log(rho) - 1.0) / 4.0
        integral_log_r = 8.0 * np.trapezoid(inner, theta)  # 8 symmetric wedges
        oracle = -integral_log_r / (2.0 * np.pi)
        assert newton_self_cell(dx) == pytest.approx(oracle, rel=1e-8)

    def test_disk_point_value(self):
        # Newton's theorem: outside a radial source the potential equals
        # N(|x|) * mass; the unit disk has mass pi
        grid = build_grid(GridConfig(half_width=8.0, dx=0.25), support_radius=1.0, t_final=0.0)
        f = disk_indicator(grid)
        pot = newton_potential(grid, f, support_radius=1.5)
        i2 = int(round((2.0 + grid.L) / grid.dx))
        j0 = int(round(grid.L / grid.dx))
        assert pot[i2, j0] == pytest.approx(-0.5 * math.log(2.0), rel=0.01)

    def test_laplacian_consistency_improves(self):
        errs = []
        for dx in (0.25, 0.125):
            grid = build_grid(GridConfig(half_width=8.0, dx=dx), support_radius=1.0, t_final=0.0)
            f = disk_indicator(grid)
            pot = newton_potential(grid, f)
            lap = grid.laplacian(pot)
            inner = grid.r < 6.0
            errs.append(np.sqrt(np.sum((lap + f)[inner] ** 2) / np.sum(f[inner] ** 2)))
        assert errs[1] < errs[0]
        assert errs[0] < 0.15  # jump-ring limited; see the acceptance suite

    def test_gradient_matches_differenced_potential(self, small_grid):
        # two O(dx^2) routes to grad(N * f) must agree away from the source
        g = small_grid
        f = disk_indicator(g, radius=0.8)
        pot = newton_potential(g, f)
        g1, g2 = newton_gradient(g, f)
        d1, d2 = g.gradient(pot)
        far = (g.r > 2.0) & (g.r < 7.0)
        scale = np.max(np.abs(g1[far]))
        assert np.allclose(g1[far], d1[far], atol=0.01 * scale)
        assert np.allclose(g2[far], d2[far], atol=0.01 * scale)

    def test_boundary_touching_source_rejected(self, small_grid):
        f = small_grid.zero_field()
        f[0, 5] = 1.0
        with pytest.raises(ValueError, match="boundary"):
            newton_potential(small_grid, f)

    def test_declared_support_enforced(self, small_grid):
        f = small_grid.zero_field()
        f[small_grid.n // 2 + 20, small_grid.n // 2] = 1.0
        with pytest.raises(ValueError, match="support"):
            newton_potential(small_grid, f, support_radius=1.0)


class TestAssemble:
    def test_alpha_zero_closed_form(self, small_grid, const_model):
        w = assemble_weight(const_model, 0.1, small_grid)
        # b2 == 0, so A = lambda + <x>^2 / 4 exactly
        assert b1_primitive_coeff(const_model) == pytest.approx(0.25)
        expected = w.lam + 0.25 * (1.0 + small_grid.r**2)
        assert np.allclose(w.A, expected, rtol=1e-13)
        assert np.allclose(w.lap_A, 1.0, rtol=1e-13)

    def test_alpha_zero_gradient_ratio_below_h(self, small_grid, const_model):
        w = assemble_weight(const_model, 0.1, small_grid)
        a = const_model.evaluate(small_grid.X1, small_grid.X2)
        ratio = (w.grad_A1**2 + w.grad_A2**2) / (a * w.A)
        # closed form: (r^2/4) / (lam + <x>^2/4) < 1 = h
        assert np.max(ratio[small_grid.interior]) < 1.0
        i = int(round((10.0 + small_grid.L) / small_grid.dx))
        j = int(round(small_grid.L / small_grid.dx))
        r10 = float(ratio[i, j])
        assert r10 == pytest.approx(25.0 / (w.lam + 25.25), rel=1e-12)

    def test_angular_certifies(self, small_grid, angular_model):
        w = assemble_weight(angular_model, 0.2, small_grid)
        rep = verify_weight(w, angular_model, small_grid)
        assert rep.passed, rep.margins

    def test_ell_aux_exact_inside_cutoff(self, small_grid, radial_half_model):
        w = assemble_weight(radial_half_model, 0.1, small_grid)
        a = radial_half_model.evaluate(small_grid.X1, small_grid.X2)
        inside = small_grid.r <= w.r_eps
        assert np.allclose(w.lap_A[inside], a[inside], rtol=1e-12)

    def test_constructed_positivity_failure(self, small_grid, const_model):
        w = assemble_weight(const_model, 0.1, small_grid)
        bad = WeightField(
            grid=w.grid, eps=w.eps, alpha=w.alpha, h=w.h, r_eps=w.r_eps,
            lam=-0.25, A=w.A - w.lam - 0.25, grad_A1=w.grad_A1, grad_A2=w.grad_A2,
            lap_A=w.lap_A, A1_eps=w.A1_eps, A2_eps=w.A2_eps, M_eps=w.M_eps,
        )
        rep = verify_weight(bad, const_model, small_grid)
        assert not rep.passed
        assert rep.margins["positivity"] <= 0
        assert rep.worst_nodes["positivity"] == (0.0, 0.0)

    def test_envelope_refinement_stability(self, radial_half_model):
        consts = []
        for dx in (0.25, 0.125):
            g = build_grid(GridConfig(half_width=10.0, dx=dx), support_radius=1.0, t_final=2.0)
            w = assemble_weight(radial_half_model, 0.1, g)
            consts.append((w.A1_eps, w.A2_eps))
        for c0, c1 in zip(*consts):
            assert abs(c1 - c0) / c0 < 0.02


class TestPhi:
    def test_large_time_limit(self, small_grid, const_model):
        w = assemble_weight(const_model, 0.1, small_grid)
        assert phi_weight(w, (3.0, 0.0), 1e9) == pytest.approx(1.0, abs=1e-6)

    def test_unit_exponent(self, small_grid, const_model):
        # A identically h + 2 eps gives Phi = e at t = 0
        w = assemble_weight(const_model, 0.1, small_grid)
        synthetic = WeightField(
            grid=w.grid, eps=w.eps, alpha=w.alpha, h=w.h, r_eps=w.r_eps, lam=0.0,
            A=np.full_like(w.A, w.h + 2 * w.eps), grad_A1=0 * w.A, grad_A2=0 * w.A,
            lap_A=w.lap_A, A1_eps=w.A1_eps, A2_eps=w.A2_eps, M_eps=w.M_eps,
        )
        assert phi_weight(synthetic, (1.7, -2.3), 0.0) == pytest.approx(math.e, rel=1e-12)

    def test_value_at_bracket_three(self, const_model):
        # fine spacing keeps the bilinear interpolation of A below 1e-4
        g = build_grid(GridConfig(half_width=6.0, dx=0.0625), support_radius=1.0, t_final=0.0)
        w = assemble_weight(const_model, 0.1, g)
        assert w.lam == 0.0
        x = math.sqrt(8.0)  # <x> = 3, A = 9/4
        expected = math.exp((9.0 / 4.0) / (1.2 * 2.0))
        assert phi_weight(w, (x, 0.0), 1.0) == pytest.approx(expected, rel=1e-4)

    def test_monotone_decreasing_in_time(self, small_grid, const_model):
        w = assemble_weight(const_model, 0.1, small_grid)
        p0 = w.phi(1.0)
        p1 = w.phi(2.0)
        act = small_grid.interior
        assert np.all(p1[act] <= p0[act])
        assert np.all(w.dphi_dt(1.0)[act] < 0)
        assert np.all(p0[act] >= 1.0)
