"""Scenario orchestration and the aggregated verification suite.

``run_scenario`` executes the configured stages (weight build, wave run with
energy/identity/inequality certification, heat/diffusion comparison) and
writes a deterministic artifact bundle.  ``verify_suite`` runs a set of
scenarios plus the built-in checks and produces a machine-readable summary,
one line per check.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, checks, heat, wave
from .config import ScenarioConfig, load_config
from .damping import infimum_a1
from .errors import ConfigError, NumericsError
from .weight import assemble_weight, verify_weight


def _r(x) -> str:
    return repr(float(x))


def write_csv(path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = len(columns[0])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_r(col[i]) for col in columns) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, default=_json_default)
        fh.write("\n")


def _fit_dict(fit: analysis.DecayFit) -> dict:
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "window": list(fit.window),
        "n_points": fit.n_points,
    }


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict


@dataclass
class ScenarioResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    failed_stage: str | None = None

    @property
    def passed(self) -> bool:
        return self.failed_stage is None and all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, **detail) -> None:
        self.checks.append(Check(name, bool(passed), detail))


def energy_decay_targets(alpha: float, dim: int = 2) -> tuple[float, float]:
    """Weighted-energy decay-rate thresholds (k = 0): E_a and E_1 slope bounds."""
    base = (dim - alpha) / (2.0 - alpha)
    return -base + 0.15, -base - 1.0 + 0.2


def semigroup_target(alpha: float, dim: int = 2) -> float:
    return -(dim - alpha) / (2.0 * (2.0 - alpha))


def diffusion_target(alpha: float, dim: int = 2) -> float:
    return semigroup_target(alpha, dim) - (1.0 - alpha) / (2.0 - alpha)


def run_scenario(cfg: ScenarioConfig, outdir, dump_fields: bool = False) -> ScenarioResult:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    result = ScenarioResult(name=cfg.name)
    stage = "config"
    try:
        if cfg.radial_only:
            stage = "semigroup"
            model = cfg.build_model(None)
            times, norms, gen_norms, dim = _radial_semigroup_scan(cfg, model)
            write_csv(out / "heat_decay.csv", ["t", "l2dmu", "gen_l2dmu"],
                      [times, norms, gen_norms])
            fit_norm = analysis.fit_decay_exponent(times, norms, cfg.fit_window())
            fit_gen = analysis.fit_decay_exponent(times, gen_norms, cfg.fit_window())
            result.fits["semigroup_l2"] = _fit_dict(fit_norm)
            result.fits["semigroup_gen"] = _fit_dict(fit_gen)
            _semigroup_checks(result, model, fit_norm, fit_gen, dim=dim)
            stage = "write"
            write_json(out / "fits.json", result.fits)
            write_json(out / "run_summary.json", _summary_dict(result))
            return result

        grid = cfg.build_grid()
        model = cfg.build_model(grid)
        a1 = infimum_a1(model, grid).a1
        a = model.evaluate(grid.X1, grid.X2)

        stage = "weight"
        w = assemble_weight(
            model,
            cfg.weight.epsilon,
            grid,
            lambda_ladder=cfg.weight.lambda_ladder,
            search_max=cfg.weight.search_max_radius,
        )
        wrep = verify_weight(w, model, grid)
        write_json(
            out / "weight_report.json",
            {
                "epsilon": w.eps,
                "alpha": w.alpha,
                "h": w.h,
                "r_eps": w.r_eps,
                "lambda": w.lam,
                "A1_eps": w.A1_eps,
                "A2_eps": w.A2_eps,
                "M_eps": w.M_eps,
                "a1": a1,
                "margins": wrep.margins,
                "worst_nodes": {k: list(v) for k, v in wrep.worst_nodes.items()},
                "passed": wrep.passed,
            },
        )
        result.add("weight_certified", wrep.passed, margins=wrep.margins)
        if dump_fields:
            write_csv(
                out / "weight_field.csv",
                ["x1", "x2", "A", "gradA1", "gradA2", "lapA"],
                [
                    grid.X1.ravel(),
                    grid.X2.ravel(),
                    w.A.ravel(),
                    w.grad_A1.ravel(),
                    w.grad_A2.ravel(),
                    w.lap_A.ravel(),
                ],
            )

        traj = None
        snap = None
        if cfg.analysis.run_wave:
            stage = "wave"
            dt = cfg.wave_dt(grid)
            snap = wave.snapshot_times(cfg.wave.t_final, cfg.wave.snapshots)
            traj = wave.run_wave(
                cfg.data, grid, model, w, dt, cfg.wave.t_final,
                snap_times=snap, keep_derivatives=dump_fields,
            )
            snap_idx = [int(np.argmin(np.abs(traj.times - s.t))) for s in traj.snapshots]
            for korder, series in (("k0", traj.k0), ("k1", traj.k1)):
                sub = series.at_times(traj.times[snap_idx])
                write_csv(
                    out / f"energies_{korder}.csv",
                    ["t", "Eax", "Eat", "Ea", "Estar", "E1", "E2"],
                    [sub.t, sub.e_dx, sub.e_dt, sub.e_a, sub.e_star, sub.e1, sub.e2],
                )

            # finite propagation at the recorded snapshots
            sup = traj.support[snap_idx]
            bound = traj.r0 + traj.times[snap_idx] + 2.0 * grid.dx
            worst = float(np.max(sup - bound))
            result.add(
                "support_bound",
                worst <= 0.0,
                worst_excess=worst,
                worst_time=float(traj.times[snap_idx][int(np.argmax(sup - bound))]),
            )

            if cfg.analysis.run_identities:
                stage = "identities"
                reports = analysis.check_energy_identities(
                    traj, dt, window=tuple(cfg.analysis.identity_window)
                )
                for rep in reports:
                    result.add(
                        f"identity_{rep.name}",
                        rep.passed,
                        max_residual=rep.max_residual,
                        window=list(cfg.analysis.identity_window),
                    )

            if cfg.analysis.run_inequalities:
                stage = "inequalities"
                const = analysis.inequality_constants(w, a1, traj.r0)
                ineq = analysis.check_inequalities(traj, w, const)
                write_json(
                    out / "inequalities.json",
                    {
                        "constants": {
                            "a1": const.a1,
                            "h": const.h,
                            "eps": const.eps,
                            "lambda0": const.lam0,
                            "nu": const.nu,
                            "t_star": const.t_star,
                            "t_star_star": const.t_star2,
                        },
                        "results": ineq.as_dict(),
                        "slack": ineq.slack,
                    },
                )
                result.add(
                    "inequalities_all_pass",
                    ineq.passed,
                    worst={r.name: r.worst_margin for r in ineq.results},
                )

            stage = "fits"
            window = cfg.fit_window()
            fit_ea = analysis.fit_decay_exponent(traj.times, traj.k0.e_a, window)
            fit_e1 = analysis.fit_decay_exponent(traj.times, traj.k0.e1, window)
            result.fits["energy_ea_k0"] = _fit_dict(fit_ea)
            result.fits["energy_e1_k0"] = _fit_dict(fit_e1)
            if cfg.analysis.check_energy_decay:
                ea_max, e1_max = energy_decay_targets(model.alpha)
                result.add("energy_decay_ea", fit_ea.slope <= ea_max,
                           slope=fit_ea.slope, threshold=ea_max, r_squared=fit_ea.r_squared)
                result.add("energy_decay_e1", fit_e1.slope <= e1_max,
                           slope=fit_e1.slope, threshold=e1_max, r_squared=fit_e1.r_squared)

        if cfg.analysis.run_diffusion:
            stage = "diffusion"
            u0, u1 = cfg.data.sample(grid)
            datum = grid.mask(u0 + u1 / a)
            times = np.array([s.t for s in traj.snapshots if s.t > 0])
            fields = heat.evolve(datum, grid, model, times, params=cfg.heat, a=a)
            vlist = [fields[t] for t in times]
            norms = np.array(
                [analysis.weighted_lp_norm(v, 2, model, grid) for v in vlist]
            )
            gen_norms = np.array(
                [
                    analysis.weighted_lp_norm(
                        heat.apply_generator(v, grid, model, a=a), 2, model, grid
                    )
                    for v in vlist
                ]
            )
            write_csv(out / "heat_decay.csv", ["t", "l2dmu", "gen_l2dmu"],
                      [times, norms, gen_norms])
            wave_fields = [s.u for s in traj.snapshots if s.t > 0]
            _, gaps = analysis.diffusion_gap(times, wave_fields, vlist, model, grid)
            write_csv(out / "diffusion.csv", ["t", "gap"], [times, gaps])

            window = cfg.fit_window()
            fit_gap = analysis.fit_decay_exponent(times, gaps, window)
            fit_norm = analysis.fit_decay_exponent(times, norms, window)
            fit_gen = analysis.fit_decay_exponent(times, gen_norms, window)
            result.fits["diffusion_gap"] = _fit_dict(fit_gap)
            result.fits["semigroup_l2"] = _fit_dict(fit_norm)
            result.fits["semigroup_gen"] = _fit_dict(fit_gen)

            gap_max = diffusion_target(model.alpha) + 0.15
            result.add("diffusion_gap_rate", fit_gap.slope <= gap_max,
                       slope=fit_gap.slope, threshold=gap_max)
            result.add(
                "diffusion_steeper_than_semigroup",
                fit_gap.slope < fit_norm.slope,
                gap_slope=fit_gap.slope, semigroup_slope=fit_norm.slope,
            )
            if cfg.analysis.run_semigroup:
                _semigroup_checks(result, model, fit_norm, fit_gen)
        elif cfg.analysis.run_semigroup:
            stage = "semigroup"
            if cfg.radial is not None and cfg.radial.r_max > 0:
                times, norms, gen_norms, dim = _radial_semigroup_scan(cfg, model)
            else:
                dim = 2
                u0, u1 = cfg.data.sample(grid)
                datum = grid.mask(u0 + u1 / a)
                times, norms, gen_norms = heat.semigroup_decay_scan(
                    datum, grid, model, cfg.fit_window()[1], params=cfg.heat
                )
            write_csv(out / "heat_decay.csv", ["t", "l2dmu", "gen_l2dmu"],
                      [times, norms, gen_norms])
            fit_norm = analysis.fit_decay_exponent(times, norms, cfg.fit_window())
            fit_gen = analysis.fit_decay_exponent(times, gen_norms, cfg.fit_window())
            result.fits["semigroup_l2"] = _fit_dict(fit_norm)
            result.fits["semigroup_gen"] = _fit_dict(fit_gen)
            _semigroup_checks(result, model, fit_norm, fit_gen, dim=dim)

        if dump_fields and traj is not None:
            stage = "dump"
            dump_dir = out / "wave_traj"
            dump_dir.mkdir(exist_ok=True)
            for k, s in enumerate(traj.snapshots):
                cols = [grid.X1.ravel(), grid.X2.ravel(), s.u.ravel()]
                names = ["x1", "x2", "u"]
                if s.ut is not None:
                    cols.append(s.ut.ravel())
                    names.append("ut")
                write_csv(dump_dir / f"snapshot_{k:03d}.csv", names, cols)

        stage = "write"
        write_json(out / "fits.json", result.fits)
        write_json(out / "run_summary.json", _summary_dict(result))
        return result

    except Exception as exc:
        result.failed_stage = stage
        try:
            write_json(
                out / "run_summary.json",
                {**_summary_dict(result), "error": f"{type(exc).__name__}: {exc}"},
            )
        except OSError:
            pass
        try:
            wrapped = type(exc)(f"[stage: {stage}] {exc}")
        except Exception:
            wrapped = NumericsError(f"[stage: {stage}] {exc}")
        raise wrapped from exc


def _semigroup_checks(result, model, fit_norm, fit_gen, dim: int = 2):
    target = semigroup_target(model.alpha, dim)
    result.add(
        "semigroup_norm_slope",
        abs(fit_norm.slope - target) <= 0.1 and fit_norm.r_squared >= 0.98,
        slope=fit_norm.slope, target=target, r_squared=fit_norm.r_squared,
    )
    result.add(
        "semigroup_gen_slope",
        abs(fit_gen.slope - (target - 1.0)) <= 0.15 and fit_gen.r_squared >= 0.98,
        slope=fit_gen.slope, target=target - 1.0, r_squared=fit_gen.r_squared,
    )


def _radial_semigroup_scan(cfg: ScenarioConfig, model):
    """Semigroup scan on the radial oracle grid declared in [radial]."""
    from . import radial

    if model.variant not in ("radial",):
        raise ConfigError("the radial oracle needs a radially symmetric damping model")
    rs = cfg.radial
    rgrid = radial.RadialGrid(r_max=rs.r_max, dr=rs.dr, r_obs=rs.r_obs, dim=rs.dim)

    def a_radial(r):
        return model.a0 * (1.0 + r**2) ** (-model.alpha / 2.0)

    def datum(r):
        out = np.zeros_like(r)
        for b in cfg.data.bumps:
            dist2 = np.minimum((r - np.hypot(*b.center)) ** 2 / b.radius**2, 1.0)
            contrib = b.amplitude * (1.0 - dist2) ** 3
            out += contrib if b.into == "u0" else contrib / a_radial(r)
        return out

    times = np.unique(np.geomspace(0.5, cfg.fit_window()[1], 40))
    traj = radial.radial_heat_evolve(datum, a_radial, rgrid, times,
                                     dt0=cfg.heat.dt0, growth=cfg.heat.growth)
    a_vals = a_radial(rgrid.r)
    norms = np.array([radial.weighted_norm_radial(f, a_vals, rgrid) for f in traj.fields])
    gen_norms = np.array(
        [
            radial.weighted_norm_radial(
                radial.laplacian_radial(f, rgrid) / a_vals, a_vals, rgrid
            )
            for f in traj.fields
        ]
    )
    return traj.times, norms, gen_norms, rs.dim


def _summary_dict(result: ScenarioResult) -> dict:
    return {
        "name": result.name,
        "passed": result.passed,
        "failed_stage": result.failed_stage,
        "checks": {
            c.name: {"passed": c.passed, **c.detail} for c in result.checks
        },
        "fits": result.fits,
    }


# ---------------------------------------------------------------------------
# verification suite


@dataclass
class VerifySummary:
    scenario_results: list[ScenarioResult]
    builtin: dict
    lines: list[str]

    @property
    def passed(self) -> bool:
        ok = all(r.passed for r in self.scenario_results)
        return ok and all(v.get("passed", False) for v in self.builtin.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


BUILTIN_CHECKS = (
    ("newton_consistency", checks.newton_consistency_check),
    ("weight_certification", checks.weight_certification_check),
    ("identity_refinement", checks.identity_refinement_check),
    ("duhamel", checks.duhamel_check),
    ("radial_cross", checks.radial_cross_check),
    ("radial3_semigroup_alpha0", lambda: checks.radial_semigroup_check(3, 0.0)),
    ("radial3_semigroup_alpha05", lambda: checks.radial_semigroup_check(3, 0.5)),
)


def verify_suite(config_paths, outdir, include_builtin: bool = True,
                 echo=print) -> VerifySummary:
    """Run every scenario and built-in check; emit one line per check."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    lines: list[str] = []

    def emit(line):
        lines.append(line)
        if echo:
            echo(line)

    results = []
    config_paths = list(config_paths)
    if not config_paths and not include_builtin:
        warnings.warn("empty scenario set: trivial PASS")
        emit("PASS  (empty scenario set)")
    for path in config_paths:
        cfg = path if isinstance(path, ScenarioConfig) else load_config(path)
        res = run_scenario(cfg, out / cfg.name)
        results.append(res)
        for c in res.checks:
            emit(f"{'PASS' if c.passed else 'FAIL'}  {cfg.name}:{c.name}  {c.detail}")

    builtin = {}
    if include_builtin:
        for name, fn in BUILTIN_CHECKS:
            rep = fn()
            builtin[name] = rep
            emit(f"{'PASS' if rep.get('passed') else 'FAIL'}  builtin:{name}")

    summary = VerifySummary(results, builtin, lines)
    write_json(
        out / "verify_summary.json",
        {
            "passed": summary.passed,
            "scenarios": {r.name: _summary_dict(r) for r in results},
            "builtin": builtin,
        },
    )
    return summary
