"""Dimension-general radial solvers used as an independent oracle.

For radially symmetric damping and data the N-dimensional problems reduce to
1-D in r with the operator  u'' + ((N-1)/r) u'.  These solvers share no
discretization machinery with the 2-D grid code: the wave and heat schemes
are node-centered in r with the regularized origin stencil

    Lap u |_{r=0} = 2 N (u_1 - u_0) / dr^2

(valid for symmetric fields, u'(0) = 0) and a conservative flux form at
r > 0, which keeps the operator self-adjoint with respect to the weights
w_0 = (dr/2)^N / N, w_i = r_i^{N-1} dr.  Agreement with the 2-D solver on
radial scenarios is therefore strong evidence of correctness for both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigError, NumericsError


def newton_kernel(r, dim: int):
    """Newton potential kernel: (1/2pi) log(1/r) for N = 2, else the
    Gamma-function form Gamma(N/2+1) / (N (N-2) pi^(N/2)) r^(2-N)."""
    r = np.asarray(r, dtype=float)
    if dim == 2:
        return np.log(1.0 / r) / (2.0 * math.pi)
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    coeff = math.gamma(dim / 2.0 + 1.0) / (dim * (dim - 2) * math.pi ** (dim / 2.0))
    return coeff * r ** (2.0 - dim)


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere in R^N."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    dr: float
    r_obs: float = 0.0  # 0 = whole space
    dim: int = 2

    def __post_init__(self):
        if self.dr <= 0 or self.r_max <= self.dr:
            raise ConfigError("radial grid needs 0 < dr < r_max")
        if self.r_obs < 0:
            raise ConfigError("radial.r_obs must be >= 0")
        if self.dim < 2:
            raise ConfigError("radial.N must be >= 2")

    @property
    def r(self) -> np.ndarray:
        m = int(round(self.r_max / self.dr))
        return np.arange(m + 1) * self.dr

    @property
    def active(self) -> np.ndarray:
        """Evolved nodes: outside the obstacle, excluding the outer node."""
        r = self.r
        act = np.ones(len(r), dtype=bool)
        act[-1] = False
        if self.r_obs > 0:
            act &= r > self.r_obs
        return act

    def quad_weights(self) -> np.ndarray:
        """Radial quadrature weights (without the angular factor)."""
        r = self.r
        w = r ** (self.dim - 1) * self.dr
        if self.r_obs == 0:
            w[0] = (self.dr / 2.0) ** self.dim / self.dim
        w[~self.active] = 0.0
        return w

    def check_truncation(self, support_radius: float, t_final: float) -> None:
        need = support_radius + t_final + 4 * self.dr
        if self.r_max < need - 1e-12:
            raise ConfigError(f"radial truncation unsafe: r_max {self.r_max} < {need}")


def laplacian_radial(u: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Radial Laplacian u'' + ((N-1)/r) u' in conservative form."""
    r = grid.r
    dr = grid.dr
    dim = grid.dim
    out = np.zeros_like(u)
    rp = (r[1:-1] + dr / 2.0) ** (dim - 1)
    rm = (r[1:-1] - dr / 2.0) ** (dim - 1)
    out[1:-1] = (rp * (u[2:] - u[1:-1]) - rm * (u[1:-1] - u[:-2])) / (
        r[1:-1] ** (dim - 1) * dr**2
    )
    out[0] = 2.0 * dim * (u[1] - u[0]) / dr**2
    out[~grid.active] = 0.0
    return out


def weighted_norm_radial(v: np.ndarray, a_r: np.ndarray, grid: RadialGrid) -> float:
    """L^2_dmu norm over R^N of a radial field."""
    w = grid.quad_weights()
    return math.sqrt(float(np.sum(v * v * a_r * w)) * sphere_area(grid.dim))


def radial_poisson(a_radial, grid: RadialGrid, lam: float = 0.0):
    """Solve Lap A = a by quadrature:  A'(r) = r^(1-N) int_0^r s^(N-1) a ds.

    Returns (A, A_prime) with A(0) normalized to 0 before the lam shift.
    Whole-space only (r_obs must be 0).
    """
    if grid.r_obs != 0:
        raise ConfigError("radial_poisson assumes the whole space")
    r = grid.r
    a_vals = np.asarray(a_radial(r), dtype=float)
    if np.any(a_vals <= 0):
        raise ValueError("a(r) must be positive")
    integrand = r ** (grid.dim - 1) * a_vals
    cumulative = np.concatenate(
        [[0.0], np.cumsum((integrand[1:] + integrand[:-1]) * 0.5 * grid.dr)]
    )
    a_prime = np.zeros_like(r)
    a_prime[1:] = cumulative[1:] / r[1:] ** (grid.dim - 1)
    A = np.concatenate([[0.0], np.cumsum((a_prime[1:] + a_prime[:-1]) * 0.5 * grid.dr)])
    return A + lam, a_prime


@dataclass
class RadialTrajectory:
    times: np.ndarray
    fields: list[np.ndarray]
    energy: np.ndarray | None = None  # unweighted, wave runs only


def radial_wave_evolve(u0, u1, a_radial, grid: RadialGrid, dt: float, t_final: float,
                       snap_times) -> RadialTrajectory:
    """Leapfrog with implicit pointwise damping on the radial lattice."""
    if dt > 0.5 * grid.dr + 1e-12:
        raise ConfigError(f"radial CFL violated: dt = {dt} > {0.5 * grid.dr}")
    r = grid.r
    act = grid.active
    a_vals = np.asarray(a_radial(r), dtype=float)
    u_prev = np.where(act, np.asarray(u0(r), dtype=float), 0.0)
    u1_vals = np.where(act, np.asarray(u1(r), dtype=float), 0.0)
    u_curr = u_prev + dt * u1_vals + 0.5 * dt * dt * (
        laplacian_radial(u_prev, grid) - a_vals * u1_vals
    )
    u_curr[~act] = 0.0

    n_steps = int(np.ceil(t_final / dt - 1e-9))
    snap_steps = {min(int(round(ts / dt)), n_steps): ts for ts in np.atleast_1d(snap_times)}
    w = grid.quad_weights()
    area = sphere_area(grid.dim)

    times, fields, energies = [], [], []

    def record(n, t, u, ut):
        if n in snap_steps:
            times.append(t)
            fields.append(u.copy())
            du = np.zeros_like(u)
            du[1:-1] = (u[2:] - u[:-2]) / (2 * grid.dr)
            energies.append(float(np.sum((du**2 + ut**2) * w)) * area)

    record(0, 0.0, u_prev, u1_vals)
    damp = 0.5 * a_vals * dt
    for n in range(1, n_steps + 1):
        lap = laplacian_radial(u_curr, grid)
        u_next = (dt * dt * lap + 2.0 * u_curr - u_prev + damp * u_prev) / (1.0 + damp)
        u_next[~act] = 0.0
        ut = (u_next - u_prev) / (2 * dt)
        record(n, n * dt, u_curr, ut)
        u_prev, u_curr = u_curr, u_next
        if not np.isfinite(u_curr[act]).all():
            raise NumericsError(f"radial wave lost finiteness at t = {n * dt}")
    return RadialTrajectory(np.array(times), fields, np.array(energies))


def radial_heat_evolve(v0, a_radial, grid: RadialGrid, targets, dt0: float = 1e-3,
                       growth: float = 200.0) -> RadialTrajectory:
    """Crank-Nicolson for a(r) v_t = Lap v, solved directly (tridiagonal)."""
    r = grid.r
    act = grid.active
    m = len(r)
    a_vals = np.asarray(a_radial(r), dtype=float)
    v = np.where(act, np.asarray(v0(r), dtype=float) if callable(v0) else v0, 0.0)

    # tridiagonal coefficients of the radial Laplacian on active nodes
    lo = np.zeros(m)
    di = np.zeros(m)
    up = np.zeros(m)
    dr, dim = grid.dr, grid.dim
    rp = (r[1:-1] + dr / 2.0) ** (dim - 1) / (r[1:-1] ** (dim - 1) * dr**2)
    rm = (r[1:-1] - dr / 2.0) ** (dim - 1) / (r[1:-1] ** (dim - 1) * dr**2)
    up[1:-1] = rp
    lo[1:-1] = rm
    di[1:-1] = -(rp + rm)
    di[0] = -2.0 * dim / dr**2
    up[0] = 2.0 * dim / dr**2
    inactive = ~act
    lo[inactive] = up[inactive] = 0.0
    di[inactive] = 0.0
    # Dirichlet neighbors: couplings into inactive nodes are dropped
    up_mask = np.roll(inactive, -1)
    lo_mask = np.roll(inactive, 1)
    up[up_mask] = 0.0
    lo[lo_mask] = 0.0

    targets = sorted(float(tt) for tt in np.atleast_1d(targets))
    out_t, out_f = [], []
    t = 0.0
    for tt in targets:
        while t < tt - 1e-12:
            dt = min(max(dt0, t / growth), tt - t)
            c = 0.5 * dt
            # banded system (a - c L) v_new = (a + c L) v
            rhs = a_vals * v
            rhs[1:-1] += c * (lo[1:-1] * v[:-2] + di[1:-1] * v[1:-1] + up[1:-1] * v[2:])
            rhs[0] += c * (di[0] * v[0] + up[0] * v[1])
            ab = np.zeros((3, m))
            ab[0, 1:] = -c * up[:-1]
            ab[1, :] = a_vals - c * di
            ab[1, inactive] = 1.0
            ab[2, :-1] = -c * lo[1:]
            rhs[inactive] = 0.0
            v = solve_banded((1, 1), ab, rhs)
            v[inactive] = 0.0
            t += dt
        t = tt
        out_t.append(t)
        out_f.append(v.copy())
    return RadialTrajectory(np.array(out_t), out_f)


def interp_to_2d(r_nodes: np.ndarray, radial_field: np.ndarray, radii_2d: np.ndarray):
    """Sample a radial profile at the 2-D grid radii."""
    return np.interp(radii_2d, r_nodes, radial_field)
