"""Damping coefficient models a(x) with <x>^alpha a(x) -> a0 asymptotics.

Built-in variants:

* ``radial``:  a(x) = a0 <x>^(-alpha)
* ``angular``: a(x) = a0 <x>^(-alpha) (1 + kappa (x1/|x|) <x>^(-beta_p)),
  with the angular factor set to 0 at x = 0.  This is a genuinely
  direction-dependent coefficient that keeps the required asymptotics.
* ``tabulated``: values supplied on the grid nodes via CSV (x1, x2, a).

Here <x> = sqrt(1 + |x|^2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Grid

VARIANTS = ("radial", "angular", "tabulated")


def bracket(x1, x2):
    """Japanese bracket <x> = (1 + |x|^2)^(1/2)."""
    return np.sqrt(1.0 + np.asarray(x1) ** 2 + np.asarray(x2) ** 2)


@dataclass
class DampingModel:
    variant: str = "radial"
    alpha: float = 0.0
    a0: float = 1.0
    kappa: float = 0.0
    beta_p: float = 1.0
    table: "TabulatedValues | None" = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"damping.variant must be one of {VARIANTS}")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError("damping.alpha must lie in [0, 1)")
        if self.a0 <= 0:
            raise ConfigError("damping.a0 must be positive")
        if not -1.0 < self.kappa < 1.0:
            raise ConfigError("damping.kappa must lie in (-1, 1)")
        if self.beta_p <= 0:
            raise ConfigError("damping.beta_p must be positive")
        if self.variant == "tabulated" and self.table is None:
            raise ConfigError("tabulated damping requires a value table")

    def evaluate(self, x1, x2) -> np.ndarray:
        """a(x) at the given points (total function, strictly positive)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.variant == "tabulated":
            return self.table.interpolate(x1, x2)
        br = bracket(x1, x2)
        base = self.a0 * br ** (-self.alpha)
        if self.variant == "radial":
            return base
        r = np.sqrt(x1**2 + x2**2)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_th = np.where(r > 0, x1 / np.where(r > 0, r, 1.0), 0.0)
        return base * (1.0 + self.kappa * cos_th * br ** (-self.beta_p))

    def gradient(self, x1, x2) -> tuple[np.ndarray, np.ndarray]:
        """Closed-form gradient of a(x); finite differences for tables.

        The angular variant is not differentiable at the origin; the angular
        contribution is set to 0 there.
        """
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.variant == "tabulated":
            return self.table.gradient_fd(x1, x2)
        br = bracket(x1, x2)
        base = self.a0 * br ** (-self.alpha)
        dbase1 = -self.alpha * self.a0 * br ** (-self.alpha - 2) * x1
        dbase2 = -self.alpha * self.a0 * br ** (-self.alpha - 2) * x2
        if self.variant == "radial":
            return dbase1, dbase2
        r = np.sqrt(x1**2 + x2**2)
        safe_r = np.where(r > 0, r, 1.0)
        c = np.where(r > 0, x1 / safe_r, 0.0)
        fac = br ** (-self.beta_p)
        pert = 1.0 + self.kappa * c * fac
        # grad of c = (e1 - c rhat)/r, grad of fac = -beta <x>^(-beta-2) x
        dc1 = np.where(r > 0, (1.0 - c * x1 / safe_r) / safe_r, 0.0)
        dc2 = np.where(r > 0, (-c * x2 / safe_r) / safe_r, 0.0)
        dfac1 = -self.beta_p * br ** (-self.beta_p - 2) * x1
        dfac2 = -self.beta_p * br ** (-self.beta_p - 2) * x2
        g1 = dbase1 * pert + base * self.kappa * (dc1 * fac + c * dfac1)
        g2 = dbase2 * pert + base * self.kappa * (dc2 * fac + c * dfac2)
        return g1, g2


class TabulatedValues:
    """Damping values on the full grid box, loaded from CSV rows x1,x2,a."""

    def __init__(self, x: np.ndarray, values: np.ndarray):
        self.x = x
        self.values = values
        if np.any(~np.isfinite(values)):
            raise ConfigError("tabulated damping contains non-finite values")

    @classmethod
    def from_csv(cls, path, grid: Grid) -> "TabulatedValues":
        vals = np.full((grid.n, grid.n), np.nan)
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].startswith("#") or row[0] == "x1":
                    continue
                x1, x2, a = float(row[0]), float(row[1]), float(row[2])
                i = int(round((x1 + grid.L) / grid.dx))
                j = int(round((x2 + grid.L) / grid.dx))
                if not (0 <= i < grid.n and 0 <= j < grid.n):
                    raise ConfigError(f"table point ({x1}, {x2}) outside the grid box")
                vals[i, j] = a
        if np.any(np.isnan(vals)):
            raise ConfigError("damping table does not cover the full box")
        return cls(grid.x, vals)

    def interpolate(self, x1, x2) -> np.ndarray:
        """Bilinear interpolation; clamps to the box."""
        x = self.x
        dx = x[1] - x[0]
        fi = np.clip((np.asarray(x1) - x[0]) / dx, 0, len(x) - 1 - 1e-12)
        fj = np.clip((np.asarray(x2) - x[0]) / dx, 0, len(x) - 1 - 1e-12)
        i0 = fi.astype(int)
        j0 = fj.astype(int)
        ti = fi - i0
        tj = fj - j0
        v = self.values
        return (
            v[i0, j0] * (1 - ti) * (1 - tj)
            + v[i0 + 1, j0] * ti * (1 - tj)
            + v[i0, j0 + 1] * (1 - ti) * tj
            + v[i0 + 1, j0 + 1] * ti * tj
        )

    def gradient_fd(self, x1, x2, h=1e-4):
        g1 = (self.interpolate(x1 + h, x2) - self.interpolate(x1 - h, x2)) / (2 * h)
        g2 = (self.interpolate(x1, x2 + h) - self.interpolate(x1, x2 - h)) / (2 * h)
        return g1, g2


@dataclass
class DampingConstants:
    """a1 = inf over the grid of <x>^alpha a(x), entering the finite-propagation bounds."""

    a1: float


@dataclass
class AsymptoticsReport:
    radii: list[float]
    deviations: list[float]
    monotone_ok: bool
    converged: bool

    @property
    def ok(self) -> bool:
        return self.monotone_ok and self.converged


def eval_damping(model: DampingModel, x: tuple[float, float]) -> float:
    """Pointwise a(x)."""
    return float(model.evaluate(np.array(x[0]), np.array(x[1])))


def verify_asymptotics(
    model: DampingModel,
    radii,
    n_directions: int = 32,
    plateau_tol: float = 0.05,
    slack: float = 0.10,
) -> AsymptoticsReport:
    """Scan |<x>^alpha a(x) - a0| along rays at increasing radii.

    The deviation sequence must be monotone decreasing within ``slack`` and
    must end below ``plateau_tol * a0``; a plateau above tolerance flags the
    model as violating the asymptotic assumption.
    """
    radii = list(radii)
    if any(r2 <= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    theta = np.linspace(0.0, 2 * np.pi, n_directions, endpoint=False)
    devs = []
    for r in radii:
        x1 = r * np.cos(theta)
        x2 = r * np.sin(theta)
        weighted = bracket(x1, x2) ** model.alpha * model.evaluate(x1, x2)
        devs.append(float(np.max(np.abs(weighted - model.a0))))
    monotone = all(d2 <= d1 * (1 + slack) + 1e-15 for d1, d2 in zip(devs, devs[1:]))
    converged = devs[-1] <= plateau_tol * model.a0
    return AsymptoticsReport(radii, devs, monotone, converged)


def infimum_a1(model: DampingModel, grid: Grid) -> DampingConstants:
    """Minimum of <x>^alpha a(x) over active grid nodes."""
    weighted = bracket(grid.X1, grid.X2) ** model.alpha * model.evaluate(grid.X1, grid.X2)
    a1 = float(np.min(weighted[grid.interior]))
    if a1 <= 0:
        raise ValueError(f"damping is not positive on the grid: a1 = {a1}")
    return DampingConstants(a1=a1)
