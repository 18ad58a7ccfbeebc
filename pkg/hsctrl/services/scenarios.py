"""
Scenario loading, preset lookup and construction of the runtime objects.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from pydantic import ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from hsctrl.core.exceptions import ConfigError, ParseError, schema_error_from_validation
from hsctrl.models.constraints import (
    AuxiliaryCoercive,
    ConsolidatedConstraint,
    ConstraintClass,
    ConstraintPrimitive,
    DiskExterior,
    DiskInterior,
    EllipseExterior,
    Halfspace,
    PowerWrapped,
    TanhWrapped,
)
from hsctrl.models.signals import TimeSignal
from hsctrl.schemas.enums import ControlMode, DisturbanceKind
from hsctrl.schemas.scenario import (
    AuxiliarySpec,
    ChainedIntegratorSpec,
    ConstantSignalSpec,
    CosineSignalSpec,
    DiskExteriorSpec,
    DiskInteriorSpec,
    EllipseExteriorSpec,
    ExpSignalSpec,
    FunnelSpec,
    HalfspaceSpec,
    LinearSignalSpec,
    PowerSpec,
    PrimitiveSpec,
    ProductSignalSpec,
    ScaledSignalSpec,
    ScenarioFile,
    SignalField,
    SineSignalSpec,
    SumSignalSpec,
    TanhSpec,
)
from hsctrl.services.controller import (
    ControllerConfig,
    Funnel,
    InitialValidation,
    NominalBound,
    ShiftingFunction,
    validate_initial,
)
from hsctrl.services.plant import (
    REFERENCE_DISTURBANCE,
    ZERO_DISTURBANCE,
    PlantSpec,
    UnicycleParams,
    chained_integrator_plant,
    unicycle_vcp_plant,
)
from hsctrl.services.simulator import SimConfig

logger = structlog.get_logger(__name__)

PRESET_PACKAGE = "hsctrl"
PRESET_DIR = "presets"

# Placeholders replaced by validate_initial when a value is "auto"
GLOBAL_AUTO_RHO0 = -1.0
GLOBAL_AUTO_THETA0 = 1.0

_TOML_POSITION = re.compile(r"at line (\d+), column (\d+)")


# Presets


def _preset_root():
    return resources.files(PRESET_PACKAGE) / PRESET_DIR


def list_presets() -> List[str]:
    return sorted(p.name[: -len(".toml")] for p in _preset_root().iterdir() if p.name.endswith(".toml"))


def resolve_scenario_path(path: Union[str, Path]) -> Path:
    """
    Accept a file path, a path without the ``.toml`` suffix, a bare preset
    name (``ex1``) or ``presets/<name>``.
    """
    candidate = Path(path)
    for option in (candidate, candidate.with_name(candidate.name + ".toml")):
        if option.is_file():
            return option
    name = candidate.name[: -len(".toml")] if candidate.name.endswith(".toml") else candidate.name
    if candidate.parent in (Path("."), Path(PRESET_DIR)) and name in list_presets():
        with resources.as_file(_preset_root() / f"{name}.toml") as preset:
            return Path(preset)
    raise ConfigError(f"scenario not found: {path}", details={"path": str(path)})


# Loading


def parse_scenario(text: str) -> ScenarioFile:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = _TOML_POSITION.search(str(exc))
        line, column = (int(match.group(1)), int(match.group(2))) if match else (None, None)
        raise ParseError(str(exc), line=line, column=column) from exc
    try:
        return ScenarioFile.model_validate(data)
    except ValidationError as exc:
        raise schema_error_from_validation(exc) from exc


def load_scenario(path: Union[str, Path]) -> ScenarioFile:
    resolved = resolve_scenario_path(path)
    try:
        text = resolved.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {resolved}: {exc}") from exc
    scenario = parse_scenario(text)
    logger.debug("Scenario loaded", path=str(resolved), name=scenario.name)
    return scenario


# Builders


def build_signal(spec: SignalField) -> TimeSignal:
    if isinstance(spec, (int, float)):
        return TimeSignal.constant(spec)
    if isinstance(spec, ConstantSignalSpec):
        return TimeSignal.constant(spec.value)
    if isinstance(spec, LinearSignalSpec):
        return TimeSignal.linear(spec.slope, spec.offset)
    if isinstance(spec, SineSignalSpec):
        return TimeSignal.sine(spec.amplitude, spec.frequency, spec.phase, spec.offset)
    if isinstance(spec, CosineSignalSpec):
        return TimeSignal.cosine(spec.amplitude, spec.frequency, spec.phase, spec.offset)
    if isinstance(spec, SumSignalSpec):
        return TimeSignal.sum(*(build_signal(term) for term in spec.terms))
    if isinstance(spec, ProductSignalSpec):
        return TimeSignal.product(*(build_signal(f) for f in spec.factors))
    if isinstance(spec, ScaledSignalSpec):
        return TimeSignal.scaled(spec.factor, build_signal(spec.signal))
    if isinstance(spec, ExpSignalSpec):
        return TimeSignal.exp(build_signal(spec.signal))
    raise ConfigError(f"unsupported signal {spec!r}")


def _signals(specs: Sequence[SignalField]) -> Tuple[TimeSignal, ...]:
    return tuple(build_signal(s) for s in specs)


def build_primitive(spec: PrimitiveSpec, constraint_class: ConstraintClass) -> ConstraintPrimitive:
    common = {"constraint_class": constraint_class, "label": spec.label}
    if isinstance(spec, HalfspaceSpec):
        return Halfspace(normal=tuple(spec.normal), offset=build_signal(spec.offset), **common)
    if isinstance(spec, DiskInteriorSpec):
        return DiskInterior(center=_signals(spec.center), radius=build_signal(spec.radius), **common)
    if isinstance(spec, DiskExteriorSpec):
        return DiskExterior(
            center=_signals(spec.center),
            radius=build_signal(spec.radius),
            normalized=spec.normalized,
            **common,
        )
    if isinstance(spec, EllipseExteriorSpec):
        return EllipseExterior(
            center=_signals(spec.center),
            semi_axes=tuple(spec.semi_axes),
            angle=build_signal(spec.angle),
            **common,
        )
    if isinstance(spec, TanhSpec):
        return TanhWrapped(inner=build_primitive(spec.inner, constraint_class), gain=spec.gain, **common)
    if isinstance(spec, PowerSpec):
        return PowerWrapped(
            radius=build_signal(spec.radius),
            exponent=spec.exponent,
            center=_signals(spec.center),
            **common,
        )
    if isinstance(spec, AuxiliarySpec):
        return AuxiliaryCoercive(c_aux=spec.c_aux, **common)
    raise ConfigError(f"unsupported primitive {spec!r}")


def build_constraints(scenario: ScenarioFile) -> Tuple[ConsolidatedConstraint, ConsolidatedConstraint]:
    nu = scenario.controller.nu
    hard = ConsolidatedConstraint(tuple(build_primitive(p, ConstraintClass.HARD) for p in scenario.hard), nu)
    soft = ConsolidatedConstraint(tuple(build_primitive(p, ConstraintClass.SOFT) for p in scenario.soft), nu)
    return hard, soft


def build_plant(scenario: ScenarioFile) -> PlantSpec:
    spec = scenario.plant
    if isinstance(spec, ChainedIntegratorSpec):
        return chained_integrator_plant(spec.n, spec.r)
    if spec.disturbance == DisturbanceKind.REFERENCE:
        disturbance = REFERENCE_DISTURBANCE
    elif spec.disturbance == DisturbanceKind.NONE:
        disturbance = ZERO_DISTURBANCE
    else:
        disturbance = _signals(spec.disturbance)
    params = UnicycleParams(
        mass=spec.mass,
        inertia=spec.inertia,
        damping=tuple(spec.damping),
        vcp_offset=spec.vcp_offset,
        disturbance=disturbance,
        initial_heading=spec.initial_heading,
    )
    return unicycle_vcp_plant(params)


def build_controller(
    scenario: ScenarioFile, plant: PlantSpec, mode: Optional[ControlMode] = None
) -> ControllerConfig:
    """
    Controller for ``scenario`` before initial validation. Values given as
    "auto" are placeholders: 0 and theta_inf in semi-global mode (tuned by
    validate_initial), fixed defaults in global mode.
    """
    section = scenario.controller
    mode = mode or section.mode
    is_global = mode == ControlMode.GLOBAL
    hard, soft = build_constraints(scenario)
    r = plant.r

    if section.rho0 == "auto":
        rho0 = GLOBAL_AUTO_RHO0 if is_global else 0.0
    else:
        rho0 = section.rho0

    funnel_specs = section.funnels or []
    if not funnel_specs and r > 1:
        funnel_specs = [FunnelSpec() for _ in range(r - 1)]
    rows = []
    for spec in funnel_specs:
        if spec.theta0 == "auto":
            theta0 = max(GLOBAL_AUTO_THETA0, spec.theta_inf) if is_global else spec.theta_inf
        else:
            theta0 = spec.theta0
        rows.append(tuple(Funnel(theta0, spec.theta_inf, spec.decay) for _ in range(plant.n)))

    gains = section.layer_gains if section.layer_gains is not None else [1.0] * (r - 1)
    shifting = ShiftingFunction(section.settling_time or section.deadline) if is_global else None

    return ControllerConfig(
        n=plant.n,
        hard=hard,
        soft=soft,
        nominal=NominalBound(section.deadline, section.beta, rho0),
        k_h=section.k_h,
        k_s=section.k_s,
        k_r=section.k_r,
        delta_h=section.delta_h,
        delta_gamma=section.delta_gamma,
        layer_gains=tuple(gains),
        funnels=tuple(rows),
        mode=mode,
        shifting=shifting,
        g1=plant.g1_known,
        barrier=section.barrier,
        transform=section.transform,
    )


def build_sim_config(
    scenario: ScenarioFile, dt: Optional[float] = None, t_final: Optional[float] = None
) -> SimConfig:
    section = scenario.sim
    return SimConfig(
        dt=section.dt if dt is None else dt,
        t_final=section.t_final if t_final is None else t_final,
        log_stride=section.log_stride,
        monitors=frozenset(section.monitors),
        deadlock_tolerance=section.deadlock_tolerance,
        deadlock_window=section.deadlock_window,
        sustain_window=section.sustain_window,
    )


def auto_rho0(scenario: ScenarioFile) -> bool:
    return scenario.controller.rho0 == "auto"


def auto_funnels(scenario: ScenarioFile) -> bool:
    funnels = scenario.controller.funnels
    return funnels is None or any(f.theta0 == "auto" for f in funnels)


@dataclass(frozen=True)
class PreparedRun:
    scenario: ScenarioFile
    plant: PlantSpec
    controller: ControllerConfig
    sim: SimConfig
    x0: np.ndarray
    validation: InitialValidation


def prepare_run(
    scenario: ScenarioFile,
    mode: Optional[ControlMode] = None,
    dt: Optional[float] = None,
    t_final: Optional[float] = None,
    strict: bool = True,
) -> PreparedRun:
    """
    Build everything a run needs and validate the initial condition. With
    ``strict`` a failed check raises ConfigError naming the check.
    """
    plant = build_plant(scenario)
    controller = build_controller(scenario, plant, mode)
    sim = build_sim_config(scenario, dt, t_final)
    x0 = np.array(scenario.initial.x, dtype=float)
    validation = validate_initial(
        controller, x0, auto_rho0=auto_rho0(scenario), auto_funnels=auto_funnels(scenario)
    )
    failure = validation.first_failure
    if strict and failure is not None:
        raise ConfigError(
            f"initial condition check {failure.name!r} failed: {failure.message}",
            details={"check": failure.name},
        )
    return PreparedRun(scenario, plant, validation.config, sim, x0, validation)
