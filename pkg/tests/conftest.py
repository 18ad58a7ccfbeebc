"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest

from hsctrl.models.constraints import (
    ConsolidatedConstraint,
    ConstraintClass,
    DiskInterior,
    Halfspace,
    TanhWrapped,
)
from hsctrl.models.signals import TimeSignal
from hsctrl.schemas.enums import ControlMode
from hsctrl.services.controller import ControllerConfig, Funnel, NominalBound, ShiftingFunction

NU = 10.0
TABLE_GAINS = {"k_h": 1.0, "k_s": 1.0, "k_r": 1.5, "delta_h": 0.5, "delta_gamma": 10.0}

SCENARIO_TOML = """
name = "unit"

[plant]
kind = "chained_integrator"
n = 2
r = 1

[[hard]]
kind = "disk_interior"
center = [0.0, 0.0]
radius = 5.0

[[soft]]
kind = "disk_interior"
center = [2.0, 0.0]
radius = 0.5

[controller]
rho0 = "auto"

[sim]
dt = 0.001
t_final = 1.0

[initial]
x = [-1.0, 1.0]
"""


def ex1_hard() -> ConsolidatedConstraint:
    """The three static workspace constraints of the ex1 preset"""
    return ConsolidatedConstraint(
        (
            Halfspace(normal=(1.0, 0.0), offset=4.5),
            Halfspace(normal=(-0.3, 1.0), offset=4.5),
            TanhWrapped(inner=DiskInterior(center=(0.0, 0.0), radius=6.0), gain=0.1),
        ),
        NU,
    )


def ex1_soft() -> ConsolidatedConstraint:
    """Unit disk around the aerial path (5.5 cos 0.25t, 5.5 sin 0.25t)"""
    center = (TimeSignal.cosine(5.5, 0.25), TimeSignal.sine(5.5, 0.25))
    return ConsolidatedConstraint(
        (DiskInterior(center=center, radius=1.0, constraint_class=ConstraintClass.SOFT),), NU
    )


def make_controller(
    hard=None,
    soft=None,
    r: int = 1,
    rho0: float = -5.0,
    theta0: float = 1.0,
    mode: ControlMode = ControlMode.SEMIGLOBAL,
    **overrides,
) -> ControllerConfig:
    """Table gains on a planar plant with r layers"""
    params = dict(TABLE_GAINS)
    params.update(overrides)
    return ControllerConfig(
        n=2,
        hard=hard or ex1_hard(),
        soft=soft or ex1_soft(),
        nominal=NominalBound(4.0, 0.3, rho0),
        layer_gains=(1.0,) * (r - 1),
        funnels=tuple((Funnel(theta0, 0.1, 1.0),) * 2 for _ in range(r - 1)),
        mode=mode,
        shifting=ShiftingFunction(4.0) if mode == ControlMode.GLOBAL else None,
        **params,
    )


@pytest.fixture
def rng():
    """Seeded generator for property sampling."""
    return np.random.default_rng(20240611)


@pytest.fixture
def controller():
    """Single-integrator controller on the ex1 constraints."""
    return make_controller()


@pytest.fixture
def double_controller():
    """Two-layer controller on the ex1 constraints."""
    return make_controller(r=2)


@pytest.fixture
def scenario_file(tmp_path):
    """Write scenario text to a temporary .toml file and return its path."""

    def _write(text: str = SCENARIO_TOML, name: str = "scenario.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
