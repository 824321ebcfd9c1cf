"""Truncated exterior-domain lattice with obstacle mask and discrete Laplacian.

The computational domain is the square [-L, L]^2 sampled on a uniform node
lattice.  An optional disk obstacle is removed from the domain by a node-wise
(staircase) mask; all evolved fields satisfy homogeneous Dirichlet conditions
on the obstacle and on the outer box boundary.  The outer boundary is made
irrelevant by the truncation-safety precondition on ``build_grid``: compactly
supported data cannot reach it within the simulation horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# node classifications
INTERIOR = 0
OBSTACLE_BOUNDARY = 1
OBSTACLE_INTERIOR = 2
OUTER_BOUNDARY = 3


@dataclass(frozen=True)
class GridConfig:
    half_width: float
    dx: float
    obstacle: str = "none"  # "none" | "disk"
    obstacle_radius: float = 0.0
    obstacle_center: tuple[float, float] = (0.0, 0.0)


class Grid:
    """Uniform lattice on [-L, L]^2 with node classification.

    Attributes
    ----------
    n : int
        Nodes per side, ``n = 2L/dx + 1``.
    X1, X2 : ndarray of shape (n, n)
        Node coordinates (``ij`` indexing: first axis is x1).
    classification : uint8 ndarray
        One of INTERIOR / OBSTACLE_BOUNDARY / OBSTACLE_INTERIOR /
        OUTER_BOUNDARY per node.
    interior : bool ndarray
        True where fields are evolved.  Fields are exactly 0 elsewhere.
    """

    def __init__(self, config: GridConfig, margin: float):
        L = float(config.half_width)
        dx = float(config.dx)
        n_float = 2.0 * L / dx
        n = int(round(n_float)) + 1
        if abs((n - 1) * dx - 2 * L) > 1e-9 * L:
            raise ConfigError(f"2*half_width/dx = {n_float} is not an integer")
        if dx <= 0:
            raise ConfigError("grid.dx must be positive")
        if n < 16:
            raise ConfigError(f"grid too small: n = {n} < 16 nodes per side")

        self.config = config
        self.L = L
        self.dx = dx
        self.n = n
        self.margin = margin
        self.x = np.linspace(-L, L, n)
        self.X1, self.X2 = np.meshgrid(self.x, self.x, indexing="ij")
        self.r = np.sqrt(self.X1**2 + self.X2**2)

        cls = np.zeros((n, n), dtype=np.uint8)
        cls[0, :] = cls[-1, :] = cls[:, 0] = cls[:, -1] = OUTER_BOUNDARY

        if config.obstacle == "disk":
            cx, cy = config.obstacle_center
            reach = max(abs(cx), abs(cy)) + config.obstacle_radius
            if config.obstacle_radius <= 0:
                raise ConfigError("disk obstacle requires obstacle_radius > 0")
            if reach > L - 4 * dx:
                raise ConfigError(
                    f"obstacle reaches {reach}, must stay inside the box "
                    f"with margin >= 4*dx = {4 * dx}"
                )
            d = np.sqrt((self.X1 - cx) ** 2 + (self.X2 - cy) ** 2)
            inside = d < config.obstacle_radius
            # obstacle nodes adjacent to the exterior form the staircase boundary
            deeper = np.zeros_like(inside)
            deeper[1:-1, 1:-1] = (
                inside[1:-1, 1:-1]
                & inside[2:, 1:-1]
                & inside[:-2, 1:-1]
                & inside[1:-1, 2:]
                & inside[1:-1, :-2]
            )
            cls[inside & ~deeper] = OBSTACLE_BOUNDARY
            cls[deeper] = OBSTACLE_INTERIOR
        elif config.obstacle != "none":
            raise ConfigError(f"unknown obstacle kind {config.obstacle!r}")

        self.classification = cls
        self.interior = cls == INTERIOR

    @property
    def node_count(self) -> int:
        return self.n * self.n

    def zero_field(self) -> np.ndarray:
        return np.zeros((self.n, self.n))

    def check_conforming(self, f: np.ndarray) -> None:
        if f.shape != (self.n, self.n):
            raise ValueError(f"field shape {f.shape} does not match grid {(self.n, self.n)}")

    def mask(self, f: np.ndarray) -> np.ndarray:
        """Return f with non-interior nodes zeroed."""
        out = np.where(self.interior, f, 0.0)
        return out

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """5-point discrete Laplacian at interior nodes, 0 elsewhere.

        Dirichlet neighbors (boundary and obstacle nodes) contribute their
        stored value, which is 0 for any conforming field.
        """
        self.check_conforming(f)
        out = np.zeros_like(f)
        out[1:-1, 1:-1] = (
            f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2] - 4.0 * f[1:-1, 1:-1]
        ) / self.dx**2
        out[~self.interior] = 0.0
        return out

    def gradient(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Centered-difference gradient at interior nodes, 0 elsewhere."""
        self.check_conforming(f)
        g1 = np.zeros_like(f)
        g2 = np.zeros_like(f)
        g1[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2.0 * self.dx)
        g2[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2.0 * self.dx)
        g1[~self.interior] = 0.0
        g2[~self.interior] = 0.0
        return g1, g2

    def integrate(self, vals: np.ndarray) -> float:
        """Midpoint quadrature over interior nodes (deterministic order)."""
        return float(np.sum(np.where(self.interior, vals, 0.0)) * self.dx**2)


def build_grid(config: GridConfig, *, support_radius: float, t_final: float) -> Grid:
    """Build the lattice, enforcing the truncation-safety precondition.

    The box must satisfy ``L >= support_radius + t_final + 4*dx`` so that, by
    finite propagation at unit speed, the outer Dirichlet boundary never
    influences the solution.  The margin ``L - (support_radius + t_final)`` is
    recorded on the grid.
    """
    L = config.half_width
    needed = support_radius + t_final + 4 * config.dx
    if L < needed - 1e-12:
        raise ConfigError(
            f"truncation unsafe: half_width {L} < R0 + t_final + 4*dx = {needed}"
        )
    return Grid(config, margin=L - (support_radius + t_final))
