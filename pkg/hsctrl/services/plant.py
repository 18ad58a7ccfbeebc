"""
Plant models integrated by the simulator.

Each plant exposes its internal state through ``measure`` (the stacked
measured state x = (x1, ..., xr) the controller sees) and ``lift`` (an
internal state reproducing a given measured state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from hsctrl.core.exceptions import ConfigError
from hsctrl.models.signals import TimeSignal
from hsctrl.services.controller import G1Map, identity_g1

RhsFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
StateMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PlantSpec:
    """Dynamics and state maps of one plant"""

    name: str
    n: int
    r: int
    state_dim: int
    rhs: RhsFn
    measure: StateMap
    lift: StateMap
    g1_known: G1Map = identity_g1


# Chained integrator


@dataclass(frozen=True)
class ChainedIntegrator:
    n: int
    r: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.r < 1:
            raise ConfigError(f"chained integrator needs n, r >= 1, got n={self.n}, r={self.r}")

    def rhs(self, t: float, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        dx = np.empty_like(state)
        dx[: -self.n] = state[self.n:]
        dx[-self.n:] = u
        return dx

    def measure(self, state: np.ndarray) -> np.ndarray:
        return np.array(state, dtype=float)

    def lift(self, x: np.ndarray) -> np.ndarray:
        return np.array(x, dtype=float)


def chained_integrator_plant(n: int, r: int) -> PlantSpec:
    model = ChainedIntegrator(n, r)
    return PlantSpec(
        name=f"chained_integrator_{n}x{r}",
        n=n,
        r=r,
        state_dim=n * r,
        rhs=model.rhs,
        measure=model.measure,
        lift=model.lift,
    )


# Unicycle tracked through a virtual control point

ZERO_DISTURBANCE: Tuple[TimeSignal, TimeSignal] = (TimeSignal.constant(0.0), TimeSignal.constant(0.0))

# d1 = 0.75 sin(3t + pi/3) + 1.5 cos(t + 3pi/7)
# d2 = -0.8 exp(cos(t + pi/3) + 1) sin(t)
REFERENCE_DISTURBANCE: Tuple[TimeSignal, TimeSignal] = (
    TimeSignal.sine(0.75, 3.0, math.pi / 3.0) + TimeSignal.cosine(1.5, 1.0, 3.0 * math.pi / 7.0),
    TimeSignal.scaled(
        -0.8,
        TimeSignal.product(
            TimeSignal.exp(TimeSignal.cosine(1.0, 1.0, math.pi / 3.0, offset=1.0)),
            TimeSignal.sine(1.0, 1.0),
        ),
    ),
)


@dataclass(frozen=True)
class UnicycleParams:
    mass: float = 3.6
    inertia: float = 0.0405
    damping: Tuple[float, float] = (0.3, 0.04)
    vcp_offset: float = 0.2
    disturbance: Tuple[TimeSignal, TimeSignal] = ZERO_DISTURBANCE
    initial_heading: float = 0.0

    def __post_init__(self) -> None:
        if not (self.mass > 0.0 and self.inertia > 0.0):
            raise ConfigError("unicycle mass and inertia must be positive")
        if any(d < 0.0 for d in self.damping):
            raise ConfigError("unicycle damping must be non-negative")
        if not self.vcp_offset > 0.0:
            raise ConfigError(
                f"virtual control point offset L must be positive, got {self.vcp_offset}; "
                "the input matrix is singular at L = 0"
            )


def reference_disturbance(t: float) -> np.ndarray:
    return np.array([s.value(t) for s in REFERENCE_DISTURBANCE])


def vcp_transform(theta: float, L: float) -> np.ndarray:
    """T(theta) mapping (v, omega) to the velocity of the point L ahead of the axle"""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -L * s], [s, L * c]])


def vcp_transform_dot(theta: float, omega: float, L: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return omega * np.array([[-s, -L * c], [c, -L * s]])


def vcp_input_matrix(theta: float, params: UnicycleParams) -> np.ndarray:
    """G2 = T M^-1 T^T; positive definite for every heading when L > 0"""
    T = vcp_transform(theta, params.vcp_offset)
    m_inv = np.diag([1.0 / params.mass, 1.0 / params.inertia])
    return T @ m_inv @ T.T


@dataclass(frozen=True)
class UnicycleVCP:
    """Internal state (x_c, y_c, theta, v, omega)"""

    params: UnicycleParams

    def rhs(self, t: float, state: np.ndarray, u: np.ndarray) -> np.ndarray:
        p = self.params
        _, _, theta, v, omega = state
        T = vcp_transform(theta, p.vcp_offset)
        wheel = T.T @ u
        d = np.array([s.value(t) for s in p.disturbance])
        return np.array(
            [
                v * math.cos(theta),
                v * math.sin(theta),
                omega,
                (-p.damping[0] * v + wheel[0] + d[0]) / p.mass,
                (-p.damping[1] * omega + wheel[1] + d[1]) / p.inertia,
            ]
        )

    def measure(self, state: np.ndarray) -> np.ndarray:
        L = self.params.vcp_offset
        xc, yc, theta, v, omega = state
        c, s = math.cos(theta), math.sin(theta)
        return np.array([xc + L * c, yc + L * s, v * c - L * omega * s, v * s + L * omega * c])

    def lift(self, x: np.ndarray) -> np.ndarray:
        L = self.params.vcp_offset
        theta = self.params.initial_heading
        c, s = math.cos(theta), math.sin(theta)
        px, py, vx, vy = x
        return np.array([px - L * c, py - L * s, theta, c * vx + s * vy, (-s * vx + c * vy) / L])


def unicycle_vcp_plant(params: UnicycleParams) -> PlantSpec:
    model = UnicycleVCP(params)
    return PlantSpec(
        name="unicycle_vcp",
        n=2,
        r=2,
        state_dim=5,
        rhs=model.rhs,
        measure=model.measure,
        lift=model.lift,
    )
