"""Acceptance suite: every criterion runs at its stated tolerance.

The full verification pipeline (bundled scenarios plus built-in checks) runs
once per session; each criterion then asserts against the collected summary
and prints one PASS/FAIL line.  Criteria are numbered 1-10 in the test names.
"""

import pytest

from dampedwave.cli import bundled_scenarios
from dampedwave.runner import verify_suite

DECAY_SCENARIOS = ("const_damping", "alpha05_radial", "nonradial")
DIFFUSION_SCENARIOS = ("diffusion_alpha0", "diffusion_alpha05", "diffusion_nonradial")


@pytest.fixture(scope="session")
def suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    return verify_suite(bundled_scenarios(), out, echo=None)


def _scenario(suite, name):
    for res in suite.scenario_results:
        if res.name == name:
            return res
    raise AssertionError(f"scenario {name} missing from the suite")


def _check(res, name):
    for c in res.checks:
        if c.name == name:
            return c
    raise AssertionError(f"check {name} missing from scenario {res.name}")


def _line(num, ok, detail):
    print(f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_01_weight_certification(suite):
    rep = suite.builtin["weight_certification"]
    detail = {
        m["model"]: (m["passed"], f"{m['elapsed_s']:.0f}s") for m in rep["models"]
    }
    _line(1, rep["passed"], f"verify_weight on 321^2, eps in (0.1, 0.2): {detail}")
    assert rep["passed"], detail


def test_criterion_02_newton_consistency(suite):
    rep = suite.builtin["newton_consistency"]
    detail = (
        f"rel L2 at dx=0.25: {rep['rel_l2_at_0.25']:.4f} (<= 0.05 required), "
        f"refinement decreasing: {rep['passed_refinement']}, "
        f"point value error {rep['point_value_rel_error']:.4%} (<= 1% required)"
    )
    _line(2, rep["passed"], detail)
    assert rep["passed"], detail


def test_criterion_03_energy_identities(suite):
    base = _scenario(suite, "const_damping")
    flux = _check(base, "identity_flux_identity")
    mixed = _check(base, "identity_mixed_identity")
    refine = suite.builtin["identity_refinement"]
    ok = flux.passed and mixed.passed and refine["passed"]
    detail = (
        f"alpha=0 residuals: flux {flux.detail['max_residual']:.4f}, "
        f"mixed {mixed.detail['max_residual']:.4f} (<= 0.05); "
        f"refinement ratios {refine['ratios']} (>= 2 required)"
    )
    _line(3, ok, detail)
    assert ok, detail


def test_criterion_04_inequality_suite(suite):
    worst = {}
    ok = True
    for res in suite.scenario_results:
        try:
            c = _check(res, "inequalities_all_pass")
        except AssertionError:
            continue
        ok = ok and c.passed
        worst[res.name] = min(c.detail["worst"].values())
    _line(4, ok, f"zero FAILs with 5% slack on all bundled scenarios; worst margins {worst}")
    assert ok, worst


def test_criterion_05_semigroup_decay(suite):
    entries = {}
    ok = True
    for name in ("diffusion_alpha0", "diffusion_alpha05"):
        res = _scenario(suite, name)
        n = _check(res, "semigroup_norm_slope")
        g = _check(res, "semigroup_gen_slope")
        entries[name] = (round(n.detail["slope"], 3), round(g.detail["slope"], 3))
        ok = ok and n.passed and g.passed
    for name in ("radial3_semigroup_alpha0", "radial3_semigroup_alpha05"):
        rep = suite.builtin[name]
        entries[name] = (round(rep["norm_slope"], 3), round(rep["gen_slope"], 3))
        ok = ok and rep["passed"]
    _line(5, ok, f"(norm, generator) slopes vs -(N-a)/(2(2-a)) and that -1: {entries}")
    assert ok, entries


def test_criterion_06_weighted_energy_decay(suite):
    entries = {}
    ok = True
    for name in DECAY_SCENARIOS:
        res = _scenario(suite, name)
        ea = _check(res, "energy_decay_ea")
        e1 = _check(res, "energy_decay_e1")
        entries[name] = {
            "Ea": (round(ea.detail["slope"], 3), ea.detail["threshold"]),
            "E1": (round(e1.detail["slope"], 3), e1.detail["threshold"]),
        }
        ok = ok and ea.passed and e1.passed
    _line(6, ok, f"k=0 slopes (value, bound): {entries}")
    assert ok, entries


def test_criterion_07_diffusion_phenomenon(suite):
    res0 = _scenario(suite, "diffusion_alpha0")
    rate = _check(res0, "diffusion_gap_rate")
    ok = rate.passed
    steeper = {}
    for name in DIFFUSION_SCENARIOS:
        res = _scenario(suite, name)
        c = _check(res, "diffusion_steeper_than_semigroup")
        steeper[name] = (round(c.detail["gap_slope"], 3), round(c.detail["semigroup_slope"], 3))
        ok = ok and c.passed
    detail = (
        f"alpha=0 gap slope {rate.detail['slope']:.3f} <= {rate.detail['threshold']}; "
        f"(gap, semigroup) slopes: {steeper}"
    )
    _line(7, ok, detail)
    assert ok, detail


def test_criterion_08_duhamel_identity(suite):
    rep = suite.builtin["duhamel"]
    detail = (
        f"residual(16 nodes) = {rep['residual_16']:.4f} (<= 0.1), "
        f"residual(8)/residual(16) = {rep['ratio']:.2f} (halving required)"
    )
    _line(8, rep["passed"], detail)
    assert rep["passed"], detail


def test_criterion_09_cross_solver_oracle(suite):
    rep = suite.builtin["radial_cross"]
    detail = (
        f"2-D vs radial at t=5: wave {rep['wave_rel_l2']:.5f}, "
        f"heat {rep['heat_rel_l2']:.5f} (<= 0.01)"
    )
    _line(9, rep["passed"], detail)
    assert rep["passed"], detail


def test_criterion_10_finite_propagation(suite):
    excesses = {}
    ok = True
    for res in suite.scenario_results:
        try:
            c = _check(res, "support_bound")
        except AssertionError:
            continue
        excesses[res.name] = round(c.detail["worst_excess"], 3)
        ok = ok and c.passed
    detail = (
        f"support_radius - (R0 + t + 2dx) worst excess per scenario: {excesses} "
        "(<= 0 required)"
    )
    _line(10, ok, detail)
    assert ok, detail
