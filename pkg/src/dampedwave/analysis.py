"""Weighted energy functionals, decay-rate fits, and inequality certification.

Energy functionals at time t for a field pair (u, u_t):

    E_dx  = int |grad u|^2 Phi dx        E_dt = int |u_t|^2 Phi dx
    E_a   = int a |u|^2 Phi dx           E_*  = 2 int u u_t Phi dx
    E_1   = E_dx + E_dt                  E_2  = E_* + E_a

plus the auxiliary int (A/a) |u_t|^2 Phi dx used by one of the bounds.  The
k = 1 series applies the same functionals to (u_t, u_tt).

Decay exponents are least-squares slopes of log(value) against log(1 + t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .damping import DampingModel
from .grid import Grid
from .weight import WeightField


@dataclass
class EnergyRecord:
    t: float
    e_dx: float
    e_dt: float
    e_a: float
    e_star: float
    e_aux: float  # int (A/a) |u_t|^2 Phi

    @property
    def e1(self) -> float:
        return self.e_dx + self.e_dt

    @property
    def e2(self) -> float:
        return self.e_star + self.e_a


@dataclass
class EnergySeries:
    t: np.ndarray
    e_dx: np.ndarray
    e_dt: np.ndarray
    e_a: np.ndarray
    e_star: np.ndarray
    e_aux: np.ndarray

    @property
    def e1(self) -> np.ndarray:
        return self.e_dx + self.e_dt

    @property
    def e2(self) -> np.ndarray:
        return self.e_star + self.e_a

    @classmethod
    def from_records(cls, records) -> "EnergySeries":
        return cls(
            t=np.array([r.t for r in records]),
            e_dx=np.array([r.e_dx for r in records]),
            e_dt=np.array([r.e_dt for r in records]),
            e_a=np.array([r.e_a for r in records]),
            e_star=np.array([r.e_star for r in records]),
            e_aux=np.array([r.e_aux for r in records]),
        )

    def at_times(self, times) -> "EnergySeries":
        idx = [int(np.argmin(np.abs(self.t - tt))) for tt in np.atleast_1d(times)]
        return EnergySeries(
            t=self.t[idx],
            e_dx=self.e_dx[idx],
            e_dt=self.e_dt[idx],
            e_a=self.e_a[idx],
            e_star=self.e_star[idx],
            e_aux=self.e_aux[idx],
        )


def energy_record(grid: Grid, a, weight: WeightField, t, u, ut, g1, g2, phi) -> EnergyRecord:
    """All functionals from precomputed gradients and Phi (midpoint rule)."""
    return EnergyRecord(
        t=t,
        e_dx=grid.integrate((g1**2 + g2**2) * phi),
        e_dt=grid.integrate(ut**2 * phi),
        e_a=grid.integrate(a * u**2 * phi),
        e_star=2.0 * grid.integrate(u * ut * phi),
        e_aux=grid.integrate(weight.A / a * ut**2 * phi),
    )


def compute_energies(u, ut, weight: WeightField, t: float, model: DampingModel, grid: Grid) -> EnergyRecord:
    """Standalone energy evaluation for a single state."""
    grid.check_conforming(u)
    grid.check_conforming(ut)
    a = model.evaluate(grid.X1, grid.X2)
    phi = weight.phi(t)
    g1, g2 = grid.gradient(u)
    return energy_record(grid, a, weight, t, u, ut, g1, g2, phi)


def weighted_lp_norm(f: np.ndarray, p: int, model: DampingModel, grid: Grid) -> float:
    """L^p norm with measure dmu = a(x) dx, p in {1, 2}."""
    if p not in (1, 2):
        raise ValueError(f"unsupported exponent p = {p}")
    grid.check_conforming(f)
    a = model.evaluate(grid.X1, grid.X2)
    val = grid.integrate(np.abs(f) ** p * a)
    return val if p == 1 else math.sqrt(val)


# ---------------------------------------------------------------------------
# decay-rate fitting


@dataclass
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


def fit_decay_exponent(times, values, window: tuple[float, float]) -> DecayFit:
    """Least-squares slope of log(value) vs log(1 + t) inside the window."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    sel = (times >= lo) & (times <= hi)
    if int(np.sum(sel)) < 8:
        raise ValueError(f"window {window} holds {int(np.sum(sel))} samples, need >= 8")
    if np.any(values[sel] <= 0):
        raise ValueError("values must be positive inside the fit window")
    lx = np.log1p(times[sel])
    ly = np.log(values[sel])
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, residual, _, _ = np.linalg.lstsq(design, ly, rcond=None)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = float(residual[0]) if len(residual) else float(np.sum((ly - design @ coef) ** 2))
        r2 = 1.0 - ss_res / ss_tot
    return DecayFit(
        slope=float(coef[0]),
        intercept=float(coef[1]),
        r_squared=r2,
        window=(float(lo), float(hi)),
        n_points=int(np.sum(sel)),
    )


# ---------------------------------------------------------------------------
# constants entering the certified inequalities


@dataclass
class InequalityConstants:
    """Constants computed from their defining formulas.

    lam0     : (1-eps)(1-4eps) / ((1+eps)(h+2eps))
    nu       : 4/a1 + 2 A2 (R0+1)^2 / (eps a1^2) + 1/(4 eps a1)
    t_star   : max((2m/a1)^(1/(1-alpha)), R0+1) with m = lam0 + 1
    t_star2  : max(((1-eps)(lam+alpha) nu / eps)^(1/(1-alpha)),
                   (2(lam+alpha)/a1)^(1/(1-alpha)), R0+1) with lam = lam0
    """

    eps: float
    h: float
    alpha: float
    a1: float
    a2_eps: float
    r0: float
    lam0: float
    nu: float
    m: float
    t_star: float
    lam: float
    t_star2: float


def t_star(r0: float, alpha: float, m: float, a1: float) -> float:
    return max((2.0 * m / a1) ** (1.0 / (1.0 - alpha)), r0 + 1.0)


def t_star_star(eps: float, r0: float, alpha: float, lam: float, nu: float, a1: float) -> float:
    return max(
        ((1.0 - eps) * (lam + alpha) * nu / eps) ** (1.0 / (1.0 - alpha)),
        (2.0 * (lam + alpha) / a1) ** (1.0 / (1.0 - alpha)),
        r0 + 1.0,
    )


def inequality_constants(weight: WeightField, a1: float, r0: float) -> InequalityConstants:
    eps, h, alpha = weight.eps, weight.h, weight.alpha
    a2 = weight.A2_eps
    lam0 = (1.0 - eps) * (1.0 - 4.0 * eps) / ((1.0 + eps) * (h + 2.0 * eps))
    nu = 4.0 / a1 + 2.0 * a2 * (r0 + 1.0) ** 2 / (eps * a1**2) + 1.0 / (4.0 * eps * a1)
    m = lam0 + 1.0
    return InequalityConstants(
        eps=eps,
        h=h,
        alpha=alpha,
        a1=a1,
        a2_eps=a2,
        r0=r0,
        lam0=lam0,
        nu=nu,
        m=m,
        t_star=t_star(r0, alpha, m, a1),
        lam=lam0,
        t_star2=t_star_star(eps, r0, alpha, lam0, nu, a1),
    )


# ---------------------------------------------------------------------------
# identity and inequality certification along a trajectory


@dataclass
class CheckResult:
    name: str
    worst_margin: float
    worst_time: float
    passed: bool


@dataclass
class InequalityReport:
    results: list[CheckResult]
    slack: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self) -> dict:
        return {
            r.name: {
                "worst_margin": r.worst_margin,
                "worst_time": r.worst_time,
                "passed": r.passed,
            }
            for r in self.results
        }


def _centered_dt(series: np.ndarray, dt: float) -> np.ndarray:
    """Centered time derivative; endpoints excluded by the callers."""
    out = np.full_like(series, np.nan)
    out[1:-1] = (series[2:] - series[:-2]) / (2.0 * dt)
    return out


@dataclass
class IdentityReport:
    name: str
    times: np.ndarray
    residuals: np.ndarray
    max_residual: float
    passed: bool


def check_energy_identities(traj, dt: float, window: tuple[float, float] = (1.0, 20.0),
                            tol: float = 0.05) -> list[IdentityReport]:
    """Compare d/dt of the recorded energies against the identity RHS series.

    The time derivative is the centered difference of the per-step energy
    series; the RHS quadratures were evaluated from the fields at the same
    times.  Relative residual |LHS - RHS| / (|LHS| + |RHS| + floor), where
    the floor is the gross magnitude of the RHS terms at that time.  Both
    identities balance large opposing integrals whose sum passes through
    zero, so the floor is what keeps the residual a meaningful relative
    measure there (and it shrinks under refinement together with the error).
    """
    reports = []
    pairs = [
        ("flux_identity", traj.k0.e1, traj.rhs_flux_identity, traj.gross_flux_identity),
        ("mixed_identity", traj.k0.e2, traj.rhs_mixed_identity, traj.gross_mixed_identity),
    ]
    for name, energy, rhs, gross in pairs:
        lhs = _centered_dt(energy, dt)
        sel = (traj.times >= window[0]) & (traj.times <= window[1])
        sel[0] = sel[-1] = False
        floor = gross[sel] + 1e-300
        res = np.abs(lhs[sel] - rhs[sel]) / (np.abs(lhs[sel]) + np.abs(rhs[sel]) + floor)
        idx = np.nonzero(sel)[0]
        reports.append(
            IdentityReport(
                name=name,
                times=traj.times[idx],
                residuals=res,
                max_residual=float(np.max(res)),
                passed=bool(np.max(res) <= tol),
            )
        )
    return reports


def check_inequalities(traj, weight: WeightField, const: InequalityConstants,
                       slack: float = 0.05) -> InequalityReport:
    """Certify the weighted-energy inequality chain along the trajectory.

    Each inequality LHS <= RHS is scored by the signed relative margin
    (RHS - LHS) / max(|LHS|, |RHS|, floor); PASS iff the worst margin is
    >= -slack.  Time derivatives are centered differences, so the first and
    last steps are excluded.
    """
    t = traj.times
    dt = traj.dt
    k0, k1 = traj.k0, traj.k1
    eps, h, alpha, a1 = const.eps, const.h, const.alpha, const.a1
    a2, r0 = const.a2_eps, const.r0
    rt = r0 + 1.0 + t

    checks: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    # hardy: (1-eps)/(h+2eps) * E_a/(1+t) <= E_dx
    checks["hardy"] = ((1 - eps) / (h + 2 * eps) * k0.e_a / (1 + t), k0.e_dx)
    # E12-F: E_dt <= (1/a1) (R0+1+t)^alpha E_a(du)
    checks["E12F"] = (k0.e_dt, rt**alpha / a1 * k1.e_a)
    # A/a: int (A/a)|u_t|^2 Phi <= (A2/a1) (R0+1+t)^2 E_dt
    checks["A_over_a"] = (k0.e_aux, a2 / a1 * rt**2 * k0.e_dt)
    # E21-F: |E_*| <= 2/sqrt(a1) (R0+1+t)^(alpha/2) sqrt(E_a E_dt)
    checks["E21F"] = (
        np.abs(k0.e_star),
        2.0 / math.sqrt(a1) * rt ** (alpha / 2) * np.sqrt(k0.e_a * k0.e_dt),
    )
    # e0-1: d/dt E1 <= -E_a(du)
    checks["e0_1"] = (_centered_dt(k0.e1, dt), -k1.e_a)
    # e1-1: d/dt E2 <= -((1-3eps)/(1-eps)) E_dx + C (R0+1+t)^alpha E_a(du)
    c11 = 2.0 / a1 + a2 * (r0 + 1.0) ** 2 / (eps * a1**2)
    checks["e1_1"] = (
        _centered_dt(k0.e2, dt),
        -(1 - 3 * eps) / (1 - eps) * k0.e_dx + c11 * rt**alpha * k1.e_a,
    )
    # e1-m with m = lam0 + 1, t1 = t_*
    m, t1 = const.m, const.t_star
    checks["e1_m"] = (
        _centered_dt((t1 + t) ** m * k0.e1, dt),
        m * (t1 + t) ** (m - 1) * k0.e_dx - 0.5 * (t1 + t) ** m * k1.e_a,
    )
    # e2-l with lam = lam0, t2 = R0 + 1
    lam = const.lam
    t2 = r0 + 1.0
    c2 = c11 + lam / (2.0 * eps * a1**2 * t2 ** (1.0 - alpha))
    checks["e2_l"] = (
        _centered_dt((t2 + t) ** lam * k0.e2, dt),
        lam * (1 + eps) * (t2 + t) ** (lam - 1) * k0.e_a
        - (1 - 3 * eps) / (1 - eps) * (t2 + t) ** lam * k0.e_dx
        + c2 * (t2 + t) ** (lam + alpha) * k1.e_a,
    )
    # e3-l with lam = lam0, t3 = t_**
    t3, nu = const.t_star2, const.nu
    checks["e3_l"] = (
        _centered_dt(nu * (t3 + t) ** (lam + alpha) * k0.e1 + (t3 + t) ** lam * k0.e2, dt),
        -(1 - 4 * eps) / (1 - eps) * (t3 + t) ** lam * k0.e_dx
        + lam * (1 + eps) * (t3 + t) ** (lam - 1) * k0.e_a,
    )

    results = []
    for name, (lhs, rhs) in checks.items():
        valid = np.isfinite(lhs) & np.isfinite(rhs)
        lv, rv, tv = lhs[valid], rhs[valid], t[valid]
        floor = 1e-14 * float(np.max(np.abs(lv) + np.abs(rv))) + 1e-300
        margins = (rv - lv) / np.maximum(np.maximum(np.abs(lv), np.abs(rv)), floor)
        i = int(np.argmin(margins))
        results.append(
            CheckResult(
                name=name,
                worst_margin=float(margins[i]),
                worst_time=float(tv[i]),
                passed=bool(margins[i] >= -slack),
            )
        )
    return InequalityReport(results=results, slack=slack)


# ---------------------------------------------------------------------------
# diffusion gap


def diffusion_gap(times, wave_fields, heat_fields, model: DampingModel, grid: Grid):
    """d(t) = || u(t) - v(t) ||_{L^2_dmu} at matched snapshot times."""
    if len(wave_fields) != len(heat_fields):
        raise ValueError("wave/heat snapshot counts differ")
    gaps = [
        weighted_lp_norm(u - v, 2, model, grid) for u, v in zip(wave_fields, heat_fields)
    ]
    return np.asarray(times, dtype=float), np.array(gaps)
