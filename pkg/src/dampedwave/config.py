"""Scenario configuration: TOML loading and cross-field validation.

A scenario file gathers the grid, damping, weight, wave, heat, data, and
analysis sections.  Keys mirror the component parameters; validation runs
before any compute and reports the violated rule by name.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .damping import DampingModel, TabulatedValues
from .errors import ConfigError
from .grid import Grid, GridConfig, build_grid
from .heat import HeatParams
from .wave import Bump, InitialData, cfl_limit


@dataclass
class WeightSettings:
    epsilon: float = 0.1
    lambda_ladder: tuple = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    search_max_radius: float | None = None


@dataclass
class WaveSettings:
    dt: float = 0.0  # 0 selects the CFL bound automatically
    t_final: float = 30.0
    snapshots: int = 24


@dataclass
class AnalysisSettings:
    fit_t_lo: float = 10.0
    fit_t_hi: float = 0.0  # 0 -> t_final
    identity_window: tuple = (1.0, 20.0)
    run_wave: bool = True
    run_identities: bool = True
    run_inequalities: bool = True
    run_semigroup: bool = False
    run_diffusion: bool = False
    check_energy_decay: bool = False


@dataclass
class RadialSettings:
    dim: int = 2
    r_max: float = 0.0
    dr: float = 0.0
    r_obs: float = 0.0


@dataclass
class ScenarioConfig:
    name: str
    grid: GridConfig | None
    damping: dict
    weight: WeightSettings
    wave: WaveSettings
    heat: HeatParams
    data: InitialData
    analysis: AnalysisSettings
    radial: RadialSettings | None = None
    table_path: str | None = None

    @property
    def r0(self) -> float:
        return self.data.support_radius

    @property
    def radial_only(self) -> bool:
        """Scenario runs on the 1-D oracle alone; no 2-D grid is built."""
        return (
            self.radial is not None
            and self.radial.r_max > 0
            and not self.analysis.run_wave
            and not self.analysis.run_diffusion
        )

    def wave_dt(self, grid: Grid) -> float:
        return self.wave.dt if self.wave.dt > 0 else cfl_limit(grid)

    def fit_window(self) -> tuple[float, float]:
        hi = self.analysis.fit_t_hi if self.analysis.fit_t_hi > 0 else self.wave.t_final
        return (self.analysis.fit_t_lo, hi)

    def build_grid(self) -> Grid:
        if self.grid is None:
            raise ConfigError("scenario has no [grid] section")
        return build_grid(self.grid, support_radius=self.r0, t_final=self.wave.t_final)

    def build_model(self, grid: Grid | None = None) -> DampingModel:
        kw = dict(self.damping)
        path = kw.pop("table_path", None)
        if kw.get("variant") == "tabulated":
            if path is None:
                raise ConfigError("tabulated damping requires damping.table_path")
            if grid is None:
                grid = self.build_grid()
            kw["table"] = TabulatedValues.from_csv(path, grid)
        return DampingModel(**kw)


def _section(raw: dict, name: str) -> dict:
    val = raw.get(name, {})
    if not isinstance(val, dict):
        raise ConfigError(f"section [{name}] must be a table")
    return dict(val)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return parse_config(raw, default_name=path.stem)


def parse_config(raw: dict, default_name: str = "scenario") -> ScenarioConfig:
    grid_cfg = None
    if "grid" in raw or "radial" not in raw:
        g = _section(raw, "grid")
        try:
            grid_cfg = GridConfig(
                half_width=float(g["half_width"]),
                dx=float(g["dx"]),
                obstacle=g.get("obstacle", "none"),
                obstacle_radius=float(g.get("obstacle_radius", 0.0)),
                obstacle_center=tuple(g.get("obstacle_center", (0.0, 0.0))),
            )
        except KeyError as exc:
            raise ConfigError(f"missing grid key {exc}") from None

    d = _section(raw, "damping")
    damping = {
        "variant": d.get("variant", "radial"),
        "alpha": float(d.get("alpha", 0.0)),
        "a0": float(d.get("a0", 1.0)),
        "kappa": float(d.get("kappa", 0.0)),
        "beta_p": float(d.get("beta_p", 1.0)),
    }
    if "table_path" in d:
        damping["table_path"] = d["table_path"]

    w = _section(raw, "weight")
    weight = WeightSettings(
        epsilon=float(w.get("epsilon", 0.1)),
        lambda_ladder=tuple(w.get("lambda_ladder", WeightSettings.lambda_ladder)),
        search_max_radius=w.get("search_max_radius"),
    )
    if not 0.0 < weight.epsilon < 1.0:
        raise ConfigError("weight.epsilon must lie in (0, 1)")

    wv = _section(raw, "wave")
    wave = WaveSettings(
        dt=float(wv.get("dt", 0.0)),
        t_final=float(wv.get("t_final", 30.0)),
        snapshots=int(wv.get("snapshots", 24)),
    )
    if wave.t_final <= 0:
        raise ConfigError("wave.t_final must be positive")

    h = _section(raw, "heat")
    heat = HeatParams(
        dt0=float(h.get("dt0", 1e-3)),
        growth=float(h.get("dt_growth", 200.0)),
        cg_tol=float(h.get("cg_tol", 1e-10)),
        cg_maxiter=int(h.get("cg_maxiter", 2000)),
    )

    data_raw = _section(raw, "data")
    bumps = []
    for b in data_raw.get("bumps", []):
        bumps.append(
            Bump(
                center=tuple(float(c) for c in b.get("center", (0.0, 0.0))),
                radius=float(b.get("radius", 1.0)),
                amplitude=float(b.get("amplitude", 1.0)),
                into=b.get("into", "u0"),
            )
        )
    data = InitialData(bumps=bumps)

    an = _section(raw, "analysis")
    analysis = AnalysisSettings(
        fit_t_lo=float(an.get("fit_t_lo", 10.0)),
        fit_t_hi=float(an.get("fit_t_hi", 0.0)),
        identity_window=tuple(an.get("identity_window", (1.0, 20.0))),
        run_wave=bool(an.get("run_wave", True)),
        run_identities=bool(an.get("run_identities", True)),
        run_inequalities=bool(an.get("run_inequalities", True)),
        run_semigroup=bool(an.get("run_semigroup", False)),
        run_diffusion=bool(an.get("run_diffusion", False)),
        check_energy_decay=bool(an.get("check_energy_decay", False)),
    )

    radial = None
    if "radial" in raw:
        r = _section(raw, "radial")
        radial = RadialSettings(
            dim=int(r.get("N", 2)),
            r_max=float(r.get("r_max", 0.0)),
            dr=float(r.get("dr", 0.0)),
            r_obs=float(r.get("r_obs", 0.0)),
        )

    cfg = ScenarioConfig(
        name=raw.get("name", default_name),
        grid=grid_cfg,
        damping=damping,
        weight=weight,
        wave=wave,
        heat=heat,
        data=data,
        analysis=analysis,
        radial=radial,
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ScenarioConfig) -> None:
    """Referential consistency checks; raises ConfigError naming the rule."""
    if cfg.radial_only:
        if not cfg.data.bumps:
            raise ConfigError("radial scenarios need at least one data bump")
        if cfg.damping.get("variant") != "radial":
            raise ConfigError("the radial oracle needs a radially symmetric damping model")
        if cfg.radial.r_max <= cfg.r0:
            raise ConfigError(f"radial.r_max must exceed the data radius {cfg.r0}")
        cfg.build_model(None)
        return
    if cfg.grid is None:
        raise ConfigError("missing [grid] section")
    grid = cfg.build_grid()  # enforces the truncation rule and obstacle margin
    if cfg.analysis.run_wave and not cfg.data.bumps:
        raise ConfigError("wave scenarios need at least one data bump")
    cfg.data.validate_against(grid)
    dt = cfg.wave_dt(grid)
    if dt > cfl_limit(grid) + 1e-12:
        raise ConfigError(f"wave.dt = {dt} violates CFL <= {cfl_limit(grid):.6f}")
    cfg.build_model(grid)
