"""Tests for scenario parsing, schema validation, preset lookup and run preparation."""

import math

import numpy as np
import pytest

from hsctrl.core.exceptions import ConfigError, ParseError, SchemaError
from hsctrl.models.constraints import DiskExterior, EllipseExterior, TanhWrapped, coercivity_check
from hsctrl.schemas import ScenarioFile
from hsctrl.schemas.enums import ControlMode, DisturbanceKind
from hsctrl.services.scenarios import (
    GLOBAL_AUTO_RHO0,
    build_controller,
    build_plant,
    build_signal,
    list_presets,
    load_scenario,
    parse_scenario,
    prepare_run,
    resolve_scenario_path,
)
from tests.conftest import SCENARIO_TOML

PRESETS = ["ex1", "ex1_global", "ex2", "ex3_oscillating", "ex3_static", "ex4"]

EMPTY_HARD = """
name = "empty"
hard = []

[plant]
kind = "chained_integrator"
n = 2
r = 1

[[soft]]
kind = "disk_interior"
center = [2.0, 0.0]
radius = 0.5

[initial]
x = [0.0, 0.0]
"""


def with_controller(extra: str) -> str:
    """SCENARIO_TOML with lines appended to its [controller] table"""
    return SCENARIO_TOML.replace('rho0 = "auto"', f'rho0 = "auto"\n{extra}')


def test_parse_minimal_scenario():
    scenario = parse_scenario(SCENARIO_TOML)
    assert isinstance(scenario, ScenarioFile)
    assert scenario.name == "unit"
    assert (scenario.plant.n, scenario.plant.r) == (2, 1)
    assert scenario.controller.nu == 10.0
    assert scenario.controller.k_r == 1.5
    assert scenario.controller.mode == ControlMode.SEMIGLOBAL


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as excinfo:
        parse_scenario('name = "broken"\n[plant\nkind = 1\n')
    assert excinfo.value.line == 2
    assert excinfo.value.exit_code == 1


def test_beta_outside_unit_interval():
    with pytest.raises(SchemaError, match=r"beta must lie in \(0,1\)") as excinfo:
        parse_scenario(with_controller("beta = 1.5"))
    assert excinfo.value.field == "controller.beta"


def test_empty_hard_list():
    with pytest.raises(SchemaError, match="at least one hard constraint"):
        parse_scenario(EMPTY_HARD)


def test_unknown_keys_rejected():
    with pytest.raises(SchemaError, match="controller.gain"):
        parse_scenario(with_controller("gain = 3.0"))


def test_initial_length_checked():
    with pytest.raises(SchemaError, match="n\\*r=2"):
        parse_scenario(SCENARIO_TOML.replace("x = [-1.0, 1.0]", "x = [-1.0, 1.0, 0.0]"))


def test_settling_time_after_deadline_rejected():
    with pytest.raises(SchemaError, match="settling_time"):
        parse_scenario(with_controller("settling_time = 5.0"))


def test_load_from_file(scenario_file):
    path = scenario_file()
    assert load_scenario(path).name == "unit"
    assert load_scenario(str(path)[: -len(".toml")]).name == "unit"


def test_missing_scenario(tmp_path):
    with pytest.raises(ConfigError, match="scenario not found"):
        resolve_scenario_path(tmp_path / "nowhere.toml")


def test_presets_listed():
    assert list_presets() == PRESETS


@pytest.mark.parametrize("spelling", ["ex2", "presets/ex2", "presets/ex2.toml", "ex2.toml"])
def test_preset_spellings(spelling):
    assert load_scenario(spelling).name == "ex2"


@pytest.mark.parametrize("name", PRESETS)
def test_presets_prepare(name):
    """Every preset validates at t = 0 after auto-tuning."""
    prepared = prepare_run(load_scenario(name))
    assert prepared.validation.passed
    assert prepared.plant.name == "unicycle_vcp"
    assert prepared.controller.r == 2


@pytest.mark.parametrize("name", PRESETS)
def test_preset_hard_families_are_coercive(name):
    """Every bundled hard set is bounded around its starting position."""
    prepared = prepare_run(load_scenario(name))
    x1 = prepared.x0[: prepared.controller.n]
    report = coercivity_check(prepared.controller.hard, 0.0, x1)
    assert report.passed
    assert max(report.ray_alphas) < report.interior_alpha


def test_build_signal_nested():
    spec = parse_scenario(
        SCENARIO_TOML.replace(
            "radius = 0.5",
            'radius = { kind = "sum", terms = [0.5, { kind = "scaled", factor = 2.0, '
            'signal = { kind = "sine", frequency = 1.0 } }] }',
        )
    ).soft[0].radius
    signal = build_signal(spec)
    assert signal.value(math.pi / 2.0) == pytest.approx(2.5)
    assert signal.derivative(0.0) == pytest.approx(2.0)


def test_ex2_obstacles_are_exteriors():
    """Moving obstacles are tanh-wrapped unnormalized disk exteriors plus an ellipse."""
    scenario = load_scenario("ex2")
    plant = build_plant(scenario)
    ctrl = build_controller(scenario, plant)
    assert ctrl.hard.m == 7
    wrapped = [p for p in ctrl.hard.primitives if isinstance(p, TanhWrapped)]
    assert len(wrapped) == 2
    assert all(isinstance(p.inner, DiskExterior) and not p.inner.normalized for p in wrapped)
    assert any(isinstance(p, EllipseExterior) for p in ctrl.hard.primitives)
    assert ctrl.soft.m == 4


def test_semiglobal_auto_tunes_rho0(scenario_file):
    """alpha_s(0) = 0.25 - 10 at (-1, 1), so rho0 becomes -10.75."""
    prepared = prepare_run(load_scenario(scenario_file()))
    assert prepared.validation.tuned
    assert prepared.controller.nominal.rho0 == pytest.approx(-10.75)


def test_global_override_uses_fixed_defaults(scenario_file):
    prepared = prepare_run(load_scenario(scenario_file()), mode=ControlMode.GLOBAL)
    assert prepared.controller.mode == ControlMode.GLOBAL
    assert prepared.controller.nominal.rho0 == GLOBAL_AUTO_RHO0
    assert prepared.controller.shifting.Ts == 4.0
    assert not prepared.validation.tuned


def test_prepare_rejects_start_outside_hard_set(scenario_file):
    path = scenario_file(SCENARIO_TOML.replace("x = [-1.0, 1.0]", "x = [6.0, 0.0]"))
    with pytest.raises(ConfigError, match="violates the hard constraints"):
        prepare_run(load_scenario(path))


def test_prepare_strict_names_failed_check(scenario_file):
    path = scenario_file(SCENARIO_TOML.replace('rho0 = "auto"', "rho0 = -1.0"))
    with pytest.raises(ConfigError, match="'rho0' failed"):
        prepare_run(load_scenario(path))
    lenient = prepare_run(load_scenario(path), strict=False)
    assert lenient.validation.first_failure.name == "rho0"


def test_overrides_reach_sim_config(scenario_file):
    prepared = prepare_run(load_scenario(scenario_file()), dt=5e-4, t_final=2.0)
    assert prepared.sim.dt == 5e-4
    assert prepared.sim.steps == 4000
    assert np.array_equal(prepared.x0, [-1.0, 1.0])


def test_custom_disturbance_signals():
    scenario = load_scenario("ex3_static")
    assert scenario.plant.disturbance == DisturbanceKind.NONE
    data = scenario.model_dump()
    data["plant"]["disturbance"] = [0.5, {"kind": "sine", "amplitude": 0.1, "frequency": 2.0}]
    plant = build_plant(ScenarioFile.model_validate(data))
    dx = plant.rhs(0.0, np.zeros(5), np.zeros(2))
    assert dx[3] == pytest.approx(0.5 / 3.6)
    assert dx[4] == 0.0
