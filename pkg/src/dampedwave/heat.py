"""Parabolic flow a(x) v_t = Lap v with Dirichlet conditions.

This is the semigroup generated by the (negative) Friedrichs extension of
-a(x)^{-1} Lap in the weighted space L^2_dmu, dmu = a(x) dx, discretized by
Crank-Nicolson:

    (I - (dt/2) a^{-1} Lap_h) v^{n+1} = (I + (dt/2) a^{-1} Lap_h) v^n.

The operator on the left is self-adjoint and positive definite with respect
to <f, g>_dmu = sum f g a dx^2, so each step is solved by conjugate gradients
in that inner product (warm-started from v^n).  The step size grows with
time, dt(t) = max(dt0, t / growth), since the solution smooths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .damping import DampingModel
from .errors import NumericsError
from .grid import Grid


@dataclass
class HeatState:
    t: float
    v: np.ndarray
    dt: float  # size of the step that produced this state


@dataclass(frozen=True)
class HeatParams:
    dt0: float = 1e-3
    growth: float = 200.0  # dt(t) = max(dt0, t / growth)
    cg_tol: float = 1e-10
    cg_maxiter: int = 2000


def apply_generator(v: np.ndarray, grid: Grid, model: DampingModel, a=None) -> np.ndarray:
    """L_h v = a(x)^{-1} Lap_h v (symmetric in the dmu inner product)."""
    grid.check_conforming(v)
    if a is None:
        a = model.evaluate(grid.X1, grid.X2)
    return grid.laplacian(v) / a


def _weighted_dot(f, g, a, dx2):
    return float(np.sum(f * g * a) * dx2)


def _cn_solve(v, grid, a, dt, cg_tol, cg_maxiter):
    """One Crank-Nicolson step via CG in the weighted inner product."""
    dx2 = grid.dx**2
    c = 0.5 * dt
    interior = grid.interior

    def op(u):
        out = u - c * grid.laplacian(u) / a
        out[~interior] = 0.0
        return out

    rhs = v + c * grid.laplacian(v) / a
    rhs[~interior] = 0.0
    rhs_norm = np.sqrt(_weighted_dot(rhs, rhs, a, dx2)) + 1e-300

    u = v.copy()
    r = rhs - op(u)
    p = r.copy()
    rr = _weighted_dot(r, r, a, dx2)
    for _ in range(cg_maxiter):
        if np.sqrt(rr) / rhs_norm <= cg_tol:
            break
        bp = op(p)
        denom = _weighted_dot(p, bp, a, dx2)
        if denom <= 0 or not np.isfinite(denom):
            raise NumericsError(f"CG breakdown: <p, Bp>_dmu = {denom}")
        alpha = rr / denom
        u += alpha * p
        r -= alpha * bp
        rr_new = _weighted_dot(r, r, a, dx2)
        p = r + (rr_new / rr) * p
        rr = rr_new
    else:
        raise NumericsError(
            f"CG did not reach tol {cg_tol} in {cg_maxiter} iterations "
            f"(relative residual {np.sqrt(rr) / rhs_norm:.3e})"
        )
    u[~interior] = 0.0
    return u


def step_heat(state: HeatState, grid: Grid, model: DampingModel, dt: float,
              params: HeatParams = HeatParams(), a=None) -> HeatState:
    """Advance one Crank-Nicolson step of size dt (unconditionally stable)."""
    if dt <= 0:
        raise ValueError("heat step must be positive")
    if a is None:
        a = model.evaluate(grid.X1, grid.X2)
    v = _cn_solve(state.v, grid, a, dt, params.cg_tol, params.cg_maxiter)
    return HeatState(t=state.t + dt, v=v, dt=dt)


def evolve(
    v0: np.ndarray,
    grid: Grid,
    model: DampingModel,
    targets,
    params: HeatParams = HeatParams(),
    t_start: float = 0.0,
    a=None,
):
    """Evolve from t_start, returning {target_time: field} for each target.

    Steps follow the deterministic ladder dt = max(dt0, t / growth), clamped
    so that every requested target time is hit exactly.
    """
    if a is None:
        a = model.evaluate(grid.X1, grid.X2)
    targets = sorted(float(tt) for tt in np.atleast_1d(targets))
    out = {}
    v = grid.mask(np.asarray(v0, dtype=float)).copy()
    t = t_start
    for tt in targets:
        if tt < t_start - 1e-12:
            raise ValueError(f"target {tt} precedes start {t_start}")
        if abs(tt - t) <= 1e-12:
            out[tt] = v.copy()
            continue
        while t < tt - 1e-12:
            dt = max(params.dt0, t / params.growth)
            dt = min(dt, tt - t)
            v = _cn_solve(v, grid, a, dt, params.cg_tol, params.cg_maxiter)
            t += dt
        t = tt
        out[tt] = v.copy()
    return out


def semigroup_decay_scan(
    f: np.ndarray,
    grid: Grid,
    model: DampingModel,
    horizon: float,
    n_samples: int = 40,
    t_min: float = 0.5,
    params: HeatParams = HeatParams(),
):
    """Record (t, ||v||_dmu, ||L_h v||_dmu) at geometric times.

    The generator norm applies L_h to the evolved field directly, avoiding
    time differencing.
    """
    times = np.unique(np.geomspace(t_min, horizon, n_samples))
    a = model.evaluate(grid.X1, grid.X2)
    dx2 = grid.dx**2
    fields = evolve(f, grid, model, times, params=params, a=a)
    norms, gen_norms = [], []
    for tt in times:
        v = fields[tt]
        lv = apply_generator(v, grid, model, a=a)
        norms.append(np.sqrt(_weighted_dot(v, v, a, dx2)))
        gen_norms.append(np.sqrt(_weighted_dot(lv, lv, a, dx2)))
    return times, np.array(norms), np.array(gen_norms)
