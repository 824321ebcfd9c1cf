"""Auxiliary elliptic weight A_eps with (1-eps) a <= Lap A_eps <= (1+eps) a.

Construction (dimension N = 2 on the grid):

1. Split a = b1 + b2 where b1 is the exact Laplacian of
   B1 = (a0 / ((N-alpha)(2-alpha))) <x>^(2-alpha).
2. Find a cutoff radius R_eps with |b2| <= eps a outside B(0, R_eps), and a
   C^2 radial cutoff eta (quintic transition on [R_eps, 2 R_eps]).
3. B2 = -(Newton potential of eta b2), so that Lap B2 = eta b2 and
   Lap (B1 + B2) = b1 + eta b2 lies within [1-eps, 1+eps] a pointwise.
4. Shift by the smallest ladder value lambda making the weight positive with
   |grad A|^2 / (a A) <= (2-alpha)/(N-alpha) + eps on all active nodes.

The time-dependent weight used by the energy functionals is
Phi(x, t) = exp(A_eps(x) / ((h + 2 eps)(1 + t))) with h = (2-alpha)/(N-alpha).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .damping import DampingModel, bracket
from .errors import ConfigError, NumericsError
from .grid import Grid

DIM = 2  # grid dimension; general N lives in the radial oracle

DEFAULT_LAMBDA_LADDER = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)

# Phi exponents are clipped here so that exp() stays finite in the far field,
# where evolved fields are exactly zero; 0 * finite = 0 keeps quadratures NaN
# free, and any node with a nonzero field value sits far below the clip.
MAX_PHI_EXPONENT = 700.0


# ---------------------------------------------------------------------------
# b1 / b2 splitting


def split_b1_b2(model: DampingModel, dim: int = DIM):
    """Return callables (b1, b2) on coordinate arrays with b1 + b2 = a.

    b1(x) = a0 <x>^(-alpha) + (a0 alpha / (N - alpha)) <x>^(-alpha-2) is the
    exact Laplacian of B1; b2 carries everything non-explicit in a.
    """
    a0, alpha = model.a0, model.alpha

    def b1(x1, x2):
        br = bracket(x1, x2)
        return a0 * br ** (-alpha) + (a0 * alpha / (dim - alpha)) * br ** (-alpha - 2)

    def b2(x1, x2):
        return model.evaluate(x1, x2) - b1(x1, x2)

    return b1, b2


def b1_primitive_coeff(model: DampingModel, dim: int = DIM) -> float:
    """Coefficient of <x>^(2-alpha) in B1."""
    return model.a0 / ((dim - model.alpha) * (2.0 - model.alpha))


def cutoff_radius(
    model: DampingModel,
    eps: float,
    search_max: float,
    r_probe_max: float | None = None,
    n_directions: int = 32,
    ladder_start: float = 0.5,
    ladder_ratio: float = 1.2,
) -> float:
    """Smallest ladder radius R with |b2| <= eps a outside B(0, R).

    The condition is probed on rays (log-spaced radii from R to
    ``r_probe_max``, ``n_directions`` angles).  Fails if no radius up to
    ``search_max`` qualifies, which signals a model violating the
    <x>^alpha a -> a0 assumption.
    """
    if not 0.0 < eps < 1.0:
        raise ConfigError("weight.epsilon must lie in (0, 1)")
    _, b2 = split_b1_b2(model)
    if r_probe_max is None:
        r_probe_max = 2.0 * search_max
    theta = np.linspace(0.0, 2 * np.pi, n_directions, endpoint=False)
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    R = ladder_start
    while R <= search_max * (1 + 1e-12):
        radii = np.geomspace(R, max(r_probe_max, R * 1.01), 256)
        x1 = radii[:, None] * cos_t[None, :]
        x2 = radii[:, None] * sin_t[None, :]
        ratio = np.abs(b2(x1, x2)) / model.evaluate(x1, x2)
        if np.max(ratio) <= eps:
            return R
        R *= ladder_ratio
    raise NumericsError(
        f"no cutoff radius <= {search_max} gives |b2| <= {eps}*a; "
        "the damping model violates the decay assumption numerically"
    )


def eta_cutoff(r, r_eps: float):
    """C^2 radial cutoff: 1 on [0, R], quintic smoothstep down to 0 at 2R.

    The final clip removes one-ulp polynomial overshoot outside [0, 1].
    """
    r = np.asarray(r, dtype=float)
    s = np.clip((r - r_eps) / r_eps, 0.0, 1.0)
    smooth = s**3 * (6.0 * s**2 - 15.0 * s + 10.0)
    return np.clip(1.0 - smooth, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Newton potential (2-D log kernel) by direct quadrature


def _log_cell_antiderivative(x, y):
    """F with d^2 F / dx dy = log(x^2 + y^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    safe = np.where(r2 > 0, r2, 1.0)
    out = np.where(r2 > 0, x * y * np.log(safe), 0.0) - 3.0 * x * y
    with np.errstate(divide="ignore", invalid="ignore"):
        ax = np.where(x != 0, np.arctan(np.divide(y, np.where(x != 0, x, 1.0))), 0.0)
        ay = np.where(y != 0, np.arctan(np.divide(x, np.where(y != 0, y, 1.0))), 0.0)
    return out + x * x * ax + y * y * ay


def newton_self_cell(dx: float) -> float:
    """Exact integral of (1/2pi) log(1/|y|) over one dx-cell centered at 0."""
    h = dx / 2.0
    corners = _log_cell_antiderivative(np.array([h, h, -h, -h]), np.array([h, -h, h, -h]))
    integral_log = float(corners[0] - corners[1] - corners[2] + corners[3])
    return -integral_log / (4.0 * np.pi)


def _kernel_tables(grid: Grid):
    """Displacement tables of N, dN/dx1, dN/dx2 times the cell area.

    Table index (n-1+di, n-1+dj) holds the kernel at displacement
    (di*dx, dj*dx); the singular self entry of the potential table carries the
    exact cell integral and the gradient self entries are 0 by symmetry.
    """
    n, dx = grid.n, grid.dx
    d = np.arange(-(n - 1), n) * dx
    D1, D2 = np.meshgrid(d, d, indexing="ij")
    r2 = D1**2 + D2**2
    center = (n - 1, n - 1)
    safe = r2.copy()
    safe[center] = 1.0
    pot = -np.log(safe) / (4.0 * np.pi) * dx**2
    pot[center] = newton_self_cell(dx)
    g1 = -D1 / (2.0 * np.pi * safe) * dx**2
    g2 = -D2 / (2.0 * np.pi * safe) * dx**2
    g1[center] = 0.0
    g2[center] = 0.0
    return pot, g1, g2


def _convolve_table(grid: Grid, table: np.ndarray, f: np.ndarray) -> np.ndarray:
    """out[x] = sum_y table[x - y] f(y), direct summation over support nodes."""
    n = grid.n
    out = np.zeros_like(f)
    si, sj = np.nonzero(f)
    for i, j in zip(si, sj):
        out += f[i, j] * table[n - 1 - i : 2 * n - 1 - i, n - 1 - j : 2 * n - 1 - j]
    return out


def newton_potential(grid: Grid, f: np.ndarray, support_radius: float | None = None) -> np.ndarray:
    """Discrete 2-D Newton potential (N * f)(x) = sum_y N(x-y) f(y) dx^2.

    N(x) = (1/2pi) log(1/|x|); the singular self-cell uses the exact integral
    of N over one cell.  Evaluated at every grid node.  The source must not
    touch the outer boundary ring.
    """
    grid.check_conforming(f)
    si, sj = np.nonzero(f)
    if len(si) == 0:
        return np.zeros_like(f)
    if support_radius is not None:
        rmax = float(np.max(grid.r[si, sj]))
        if rmax > support_radius + 1e-9:
            raise ValueError(
                f"source support extends to r = {rmax} > declared {support_radius}"
            )
    if np.any(si == 0) or np.any(si == grid.n - 1) or np.any(sj == 0) or np.any(sj == grid.n - 1):
        raise ValueError("source support touches the outer boundary")
    pot, _, _ = _kernel_tables(grid)
    return _convolve_table(grid, pot, f)


def newton_gradient(grid: Grid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the Newton potential by kernel-gradient quadrature.

    grad N = -x / (2 pi |x|^2); the self-cell contributes 0 by symmetry.
    """
    grid.check_conforming(f)
    _, g1, g2 = _kernel_tables(grid)
    return _convolve_table(grid, g1, f), _convolve_table(grid, g2, f)


# ---------------------------------------------------------------------------
# Assembled weight


@dataclass
class WeightField:
    """Grid samples of A_eps with its certified constants.

    ``lap_A`` is the analytic Laplacian b1 + eta b2 (not a discrete
    Laplacian of the samples).
    """

    grid: Grid
    eps: float
    alpha: float
    h: float
    r_eps: float
    lam: float
    A: np.ndarray
    grad_A1: np.ndarray
    grad_A2: np.ndarray
    lap_A: np.ndarray
    A1_eps: float
    A2_eps: float
    M_eps: float

    @property
    def beta_inv(self) -> float:
        """The (h + 2 eps) denominator of the weight exponent."""
        return self.h + 2.0 * self.eps

    def phi(self, t: float) -> np.ndarray:
        """Phi(x, t) on the grid (exponent clipped, see MAX_PHI_EXPONENT)."""
        return np.exp(np.minimum(self.A / (self.beta_inv * (1.0 + t)), MAX_PHI_EXPONENT))

    def dphi_dt(self, t: float, phi: np.ndarray | None = None) -> np.ndarray:
        if phi is None:
            phi = self.phi(t)
        return -self.A / (self.beta_inv * (1.0 + t) ** 2) * phi

    def grad_phi(self, t: float, phi: np.ndarray | None = None):
        if phi is None:
            phi = self.phi(t)
        c = 1.0 / (self.beta_inv * (1.0 + t))
        return c * self.grad_A1 * phi, c * self.grad_A2 * phi

    def lap_phi(self, t: float, phi: np.ndarray | None = None) -> np.ndarray:
        if phi is None:
            phi = self.phi(t)
        c = 1.0 / (self.beta_inv * (1.0 + t))
        grad_sq = self.grad_A1**2 + self.grad_A2**2
        return (c * self.lap_A + c**2 * grad_sq) * phi

    def phi_at(self, x: tuple[float, float], t: float) -> float:
        """Phi at an arbitrary point (bilinear interpolation of A)."""
        g = self.grid
        fi = np.clip((x[0] + g.L) / g.dx, 0, g.n - 1 - 1e-12)
        fj = np.clip((x[1] + g.L) / g.dx, 0, g.n - 1 - 1e-12)
        i0, j0 = int(fi), int(fj)
        ti, tj = fi - i0, fj - j0
        a_val = (
            self.A[i0, j0] * (1 - ti) * (1 - tj)
            + self.A[i0 + 1, j0] * ti * (1 - tj)
            + self.A[i0, j0 + 1] * (1 - ti) * tj
            + self.A[i0 + 1, j0 + 1] * ti * tj
        )
        return float(np.exp(min(a_val / (self.beta_inv * (1.0 + t)), MAX_PHI_EXPONENT)))


@dataclass
class WeightReport:
    margins: dict
    worst_nodes: dict
    passed: bool
    tol: float


def phi_weight(w: WeightField, x: tuple[float, float], t: float) -> float:
    """Phi_eps(x, t); strictly decreasing in t, >= 1 wherever A_eps > 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return w.phi_at(x, t)


def _weight_arrays(model: DampingModel, eps: float, grid: Grid, r_eps: float):
    """Assemble the lambda-independent pieces of the weight."""
    b1f, b2f = split_b1_b2(model)
    br = bracket(grid.X1, grid.X2)
    a = model.evaluate(grid.X1, grid.X2)
    b2 = b2f(grid.X1, grid.X2)
    eta = eta_cutoff(grid.r, r_eps)
    source = eta * b2
    coeff = b1_primitive_coeff(model)
    B1 = coeff * br ** (2.0 - model.alpha)
    gB1_1 = (model.a0 / (DIM - model.alpha)) * br ** (-model.alpha) * grid.X1
    gB1_2 = (model.a0 / (DIM - model.alpha)) * br ** (-model.alpha) * grid.X2
    lap_A = b1f(grid.X1, grid.X2) + source

    if np.any(np.abs(source) > 0):
        if 2.0 * r_eps > grid.L - 4.0 * grid.dx:
            raise ConfigError(
                f"cutoff support 2*R_eps = {2 * r_eps} reaches the outer boundary "
                f"(half_width {grid.L})"
            )
        B2 = -newton_potential(grid, source)
        gB2_1, gB2_2 = newton_gradient(grid, source)
        gB2_1 = -gB2_1
        gB2_2 = -gB2_2
    else:
        B2 = np.zeros_like(B1)
        gB2_1 = np.zeros_like(B1)
        gB2_2 = np.zeros_like(B1)

    return a, B1 + B2, gB1_1 + gB2_1, gB1_2 + gB2_2, lap_A, B2


def assemble_weight(
    model: DampingModel,
    eps: float,
    grid: Grid,
    lambda_ladder=DEFAULT_LAMBDA_LADDER,
    search_max: float | None = None,
) -> WeightField:
    """Build A_eps on the grid and certify its defining inequalities.

    lambda is the smallest ladder value for which positivity and the gradient
    bound (A2) hold on all active nodes; the growth envelope constants
    A1_eps, A2_eps are the observed min/max of A_eps / <x>^(2-alpha).
    """
    if search_max is None:
        search_max = 0.45 * grid.L
    r_eps = cutoff_radius(model, eps, search_max)

    # escalate the cutoff until |b2| <= eps*a holds on every active node too
    _, b2f = split_b1_b2(model)
    a_grid = model.evaluate(grid.X1, grid.X2)
    b2_grid = b2f(grid.X1, grid.X2)
    while True:
        outside = grid.interior & (grid.r >= r_eps)
        if not np.any(np.abs(b2_grid[outside]) > eps * a_grid[outside]):
            break
        r_eps *= 1.2
        if 2.0 * r_eps > grid.L:
            raise NumericsError("cutoff radius escalation reached the box size")

    a, A0, gA1, gA2, lap_A, B2 = _weight_arrays(model, eps, grid, r_eps)
    h = (2.0 - model.alpha) / (DIM - model.alpha)
    act = grid.interior
    grad_sq = gA1**2 + gA2**2

    lam = None
    for lam_try in lambda_ladder:
        A_try = lam_try + A0
        if np.min(A_try[act]) <= 0:
            continue
        ratio = grad_sq[act] / (a[act] * A_try[act])
        if np.max(ratio) <= h + eps:
            lam = lam_try
            break
    if lam is None:
        A_try = lambda_ladder[-1] + A0
        ratio = np.where(act & (A_try > 0), grad_sq / (a * np.where(A_try > 0, A_try, 1.0)), np.inf)
        i, j = np.unravel_index(np.argmax(np.where(act, ratio, -np.inf)), ratio.shape)
        raise NumericsError(
            f"no lambda <= {lambda_ladder[-1]} satisfies positivity + (A2); worst node "
            f"({grid.X1[i, j]:.3f}, {grid.X2[i, j]:.3f}) with ratio {ratio[i, j]:.6f}"
        )

    A = lam + A0
    envelope = A[act] / bracket(grid.X1, grid.X2)[act] ** (2.0 - model.alpha)
    br = bracket(grid.X1, grid.X2)
    m_eps = float(np.max(np.abs(B2[act]) / (1.0 + np.log(br[act]))))
    return WeightField(
        grid=grid,
        eps=eps,
        alpha=model.alpha,
        h=h,
        r_eps=r_eps,
        lam=lam,
        A=A,
        grad_A1=gA1,
        grad_A2=gA2,
        lap_A=lap_A,
        A1_eps=float(np.min(envelope)),
        A2_eps=float(np.max(envelope)),
        M_eps=m_eps,
    )


def verify_weight(w: WeightField, model: DampingModel, grid: Grid, tol: float = 1e-9) -> WeightReport:
    """Re-check the defining inequalities of the weight; signed relative margins.

    Margins are >= 0 when the inequality holds; PASS iff all >= -tol.
    """
    act = grid.interior
    a = model.evaluate(grid.X1, grid.X2)
    br = bracket(grid.X1, grid.X2)
    margins = {}
    worst = {}

    def record(name, margin_field):
        vals = np.where(act, margin_field, np.inf)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        margins[name] = float(vals[i, j])
        worst[name] = (float(grid.X1[i, j]), float(grid.X2[i, j]))

    # (ell.aux): (1-eps) a <= lap A <= (1+eps) a, relative to a
    record("ell_aux_lower", (w.lap_A - (1.0 - w.eps) * a) / a)
    record("ell_aux_upper", ((1.0 + w.eps) * a - w.lap_A) / a)

    # positivity and (A1) envelope, relative to the upper envelope scale
    env = br ** (2.0 - w.alpha)
    scale = w.A2_eps if w.A2_eps > 0 else 1.0
    record("positivity", w.A / (scale * env))
    record("A1_lower", (w.A / env - w.A1_eps) / scale)
    record("A1_upper", (w.A2_eps - w.A / env) / scale)

    # (A2) gradient bound, relative to h + eps
    bound = w.h + w.eps
    ratio = (w.grad_A1**2 + w.grad_A2**2) / np.where(act & (w.A > 0), a * w.A, 1.0)
    ratio = np.where(act & (w.A > 0), ratio, np.inf)
    record("A2", (bound - ratio) / bound)

    # positivity is strict: A = 0 anywhere is a FAIL even at margin 0
    strictly_positive = bool(np.min(w.A[act]) > 0.0)
    passed = strictly_positive and all(m >= -tol for m in margins.values())
    return WeightReport(margins=margins, worst_nodes=worst, passed=passed, tol=tol)
