"""Full-horizon runs of the bundled presets.

These integrate 40-60 s of robot motion at dt = 1e-3 each and are marked
slow; deselect them with ``-m "not slow"``.
"""

from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from hsctrl.cli import main
from hsctrl.schemas.enums import ControlMode
from hsctrl.services.controller import full_control
from hsctrl.services.scenarios import load_scenario, prepare_run
from hsctrl.services.simulator import SimResult, simulate
from tests.test_cli import PRESETS

pytestmark = pytest.mark.slow

HEADER = "t,x1_1,x1_2,x2_1,x2_2,alpha_h,alpha_s,e_s,rho_n,rho_r,phi_h,phi_gamma,u_1,u_2"


@lru_cache(maxsize=None)
def run_preset(name: str, log_stride: int = 0, t_final: float = -1.0):
    """Prepared run and its result, cached across tests"""
    prepared = prepare_run(load_scenario(name), t_final=None if t_final < 0 else t_final)
    if log_stride:
        prepared = replace(prepared, sim=replace(prepared.sim, log_stride=log_stride))
    result = simulate(prepared.plant, prepared.controller, prepared.sim, prepared.x0, run_id=name)
    return prepared, result


@pytest.mark.parametrize("name", PRESETS)
def test_hard_constraint_holds(name):
    """Every logged alpha_h stays positive."""
    _, result = run_preset(name)
    assert result.status.ok, result.status.message
    assert all(rec.diagnostics.alpha_h > 0.0 for rec in result.records)
    assert result.summary.max_rho_r >= 0.0
    if name in ("ex1", "ex2", "ex4"):
        assert result.summary.min_alpha_h > 1e-4


def test_soft_constraint_from_deadline_until_conflict():
    """On ex1 alpha_s >= 0 from T = 4 s until the relaxation first engages."""
    prepared, result = run_preset("ex1")
    deadline = prepared.controller.nominal.T
    conflict = next((rec.t for rec in result.records if rec.rho_r > 1e-9), np.inf)
    window = [rec for rec in result.records if deadline <= rec.t < conflict]
    assert window
    assert all(rec.diagnostics.alpha_s >= 0.0 for rec in window)


def test_relaxation_grows_only_under_conflict():
    """rho_r rises only across steps where phi_h and phi_gamma are both positive."""
    prepared, result = run_preset("ex1", log_stride=1, t_final=20.0)
    records = result.records
    k_r = prepared.controller.k_r
    dt = prepared.sim.dt
    for prev, cur in zip(records, records[1:]):
        assert cur.rho_r >= -1e-9
        if cur.rho_r > prev.rho_r + 1e-12:
            active = [r.diagnostics.phi_h * r.diagnostics.phi_gamma for r in (prev, cur)]
            assert max(active) > 0.0
        if prev.diagnostics.phi_h == 0.0 and cur.diagnostics.phi_h == 0.0 and prev.rho_r > 1e-6:
            assert cur.rho_r == pytest.approx(prev.rho_r * np.exp(-k_r * dt), rel=1e-3)


def test_global_mode_matches_semiglobal_after_settling():
    """ex1_global keeps e_s > 0, and from Ts on a semi-global re-evaluation agrees."""
    prepared, result = run_preset("ex1_global")
    ctrl = prepared.controller
    assert ctrl.mode == ControlMode.GLOBAL
    semi = ctrl.with_updates(mode=ControlMode.SEMIGLOBAL, shifting=None)
    settle = ctrl.shifting.Ts
    for rec in result.records:
        assert rec.diagnostics.e_s > 0.0
        if rec.t >= settle:
            u, diag = full_control(rec.t, rec.x, rec.rho_r, semi)
            assert diag.alpha_h == pytest.approx(rec.diagnostics.alpha_h, rel=1e-12, abs=1e-12)
            assert diag.e_s == pytest.approx(rec.diagnostics.e_s, rel=1e-12, abs=1e-12)
            assert np.allclose(u, rec.u, rtol=1e-12, atol=1e-12)


def test_static_target_deadlocks():
    """A stationary target behind the obstacle stalls on the boundary."""
    _, result = run_preset("ex3_static")
    assert result.status.ok
    assert result.summary.deadlock_suspected


def test_oscillating_target_escapes():
    """A tiny target oscillation breaks the equilibrium; alpha_s > 0 over the final 2 s."""
    _, result = run_preset("ex3_oscillating")
    assert result.status.ok
    t_end = result.records[-1].t
    assert all(rec.diagnostics.alpha_s > 0.0 for rec in result.records if rec.t >= t_end - 2.0)


def test_moving_obstacles_pass_every_monitor():
    _, result = run_preset("ex2")
    assert result.status.ok
    assert result.summary.monitor_failures == 0
    assert all(rec.flags.passed for rec in result.records)


def test_power_constraint_with_vanishing_gradient():
    """ex4 keeps alpha_h > 0 although its gradient vanishes on the boundary."""
    _, result = run_preset("ex4")
    assert result.status.ok
    assert result.summary.min_alpha_h > 0.0


@pytest.mark.parametrize("name", PRESETS)
def test_step_refinement_agrees(name):
    """Summary metrics at dt = 1e-3 and 5e-4 agree to 1 %."""
    _, coarse = run_preset(name)
    prepared = prepare_run(load_scenario(name), dt=5e-4)
    prepared = replace(prepared, sim=replace(prepared.sim, log_stride=20))
    fine: SimResult = simulate(prepared.plant, prepared.controller, prepared.sim, prepared.x0)
    assert fine.status.ok
    assert fine.summary.min_alpha_h == pytest.approx(coarse.summary.min_alpha_h, rel=1e-2)
    assert fine.summary.max_rho_r == pytest.approx(coarse.summary.max_rho_r, rel=1e-2, abs=1e-6)


def test_cli_run_of_ex1(tmp_path):
    """The documented command exits 0 and writes the CSV contract."""
    out = tmp_path / "ex1"
    assert main(["run", "--scenario", "presets/ex1", "--t-final", "20", "--no-plots", "--out", str(out)]) == 0
    assert (out / "trajectory.csv").read_text().splitlines()[0] == HEADER


def test_cli_flags_deadlock(tmp_path):
    out = tmp_path / "ex3"
    assert main(["run", "--scenario", "presets/ex3_static", "--no-plots", "--out", str(out)]) == 0
    assert "deadlock_suspected=true" in (out / "summary.txt").read_text()
