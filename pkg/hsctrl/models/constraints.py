"""
Time-varying scalar constraint functions and their Log-Sum-Exp consolidation.

Each primitive is a C¹ function psi(t, x1) with a hand-derived gradient and
partial time derivative; ``psi > 0`` means the constraint holds. A
ConsolidatedConstraint folds a family of primitives of one class (hard or
soft) into the smooth under-approximation of their pointwise minimum

    alpha(t, x1) = -(1/nu) * ln(sum_j exp(-nu * psi_j(t, x1)))

which satisfies ``alpha <= min_j psi_j <= alpha + ln(m)/nu``.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from hsctrl.core.exceptions import ConfigError, NumericalError
from hsctrl.models.signals import SignalLike, TimeSignal, as_signal

Box = Sequence[Tuple[float, float]]
PrimitiveEvaluation = Tuple[float, np.ndarray, float]


class ConstraintClass(str, Enum):
    """Whether a constraint must always hold or only when compatible"""
    HARD = "hard"
    SOFT = "soft"


def _signal_vector(signals: Tuple[TimeSignal, ...], t: float) -> Tuple[np.ndarray, np.ndarray]:
    values = np.array([s.value(t) for s in signals])
    rates = np.array([s.derivative(t) for s in signals])
    return values, rates


def _signals(values: Sequence[SignalLike]) -> Tuple[TimeSignal, ...]:
    return tuple(as_signal(v) for v in values)


@dataclass(frozen=True, kw_only=True)
class ConstraintPrimitive(ABC):
    """One scalar constraint psi(t, x1) > 0 with analytic derivatives"""

    constraint_class: ConstraintClass = ConstraintClass.HARD
    label: str = ""

    @abstractmethod
    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        """Return (psi, d psi / d x1, d psi / d t)"""

    def value(self, t: float, x1: np.ndarray) -> float:
        return self.evaluate(t, x1)[0]

    def gradient(self, t: float, x1: np.ndarray) -> np.ndarray:
        return self.evaluate(t, x1)[1]

    def time_derivative(self, t: float, x1: np.ndarray) -> float:
        return self.evaluate(t, x1)[2]

    @property
    def dimension(self) -> Optional[int]:
        """Required size of x1, or None when any size works"""
        return None


@dataclass(frozen=True, kw_only=True)
class Halfspace(ConstraintPrimitive):
    """psi = a . x1 + b(t)"""

    normal: Tuple[float, ...]
    offset: TimeSignal

    def __post_init__(self) -> None:
        object.__setattr__(self, "normal", tuple(float(a) for a in self.normal))
        object.__setattr__(self, "offset", as_signal(self.offset))
        object.__setattr__(self, "_a", np.array(self.normal))

    @property
    def dimension(self) -> Optional[int]:
        return len(self.normal)

    def value(self, t: float, x1: np.ndarray) -> float:
        return float(self._a @ x1) + self.offset.value(t)

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        b, b_dot = self.offset.evaluate(t)
        return float(self._a @ x1) + b, self._a.copy(), b_dot


@dataclass(frozen=True, kw_only=True)
class DiskInterior(ConstraintPrimitive):
    """psi = R(t)^2 - ||x1 - c(t)||^2"""

    center: Tuple[TimeSignal, ...]
    radius: TimeSignal

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _signals(self.center))
        object.__setattr__(self, "radius", as_signal(self.radius))

    @property
    def dimension(self) -> Optional[int]:
        return len(self.center)

    def value(self, t: float, x1: np.ndarray) -> float:
        c = np.array([s.value(t) for s in self.center])
        d = x1 - c
        return self.radius.value(t) ** 2 - float(d @ d)

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        c, c_dot = _signal_vector(self.center, t)
        radius, radius_dot = self.radius.evaluate(t)
        d = x1 - c
        psi = radius * radius - float(d @ d)
        return psi, -2.0 * d, 2.0 * radius * radius_dot + 2.0 * float(d @ c_dot)


@dataclass(frozen=True, kw_only=True)
class DiskExterior(ConstraintPrimitive):
    """
    psi = ||x1 - c(t)||^2 / R(t)^2 - 1, or ||x1 - c(t)||^2 - R(t)^2 with
    ``normalized=False`` (the form obstacles take inside a tanh wrapper)
    """

    center: Tuple[TimeSignal, ...]
    radius: TimeSignal
    normalized: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _signals(self.center))
        object.__setattr__(self, "radius", as_signal(self.radius))

    @property
    def dimension(self) -> Optional[int]:
        return len(self.center)

    def value(self, t: float, x1: np.ndarray) -> float:
        c = np.array([s.value(t) for s in self.center])
        d = x1 - c
        radius = self.radius.value(t)
        if not self.normalized:
            return float(d @ d) - radius * radius
        return float(d @ d) / radius**2 - 1.0

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        c, c_dot = _signal_vector(self.center, t)
        radius, radius_dot = self.radius.evaluate(t)
        d = x1 - c
        dd = float(d @ d)
        if not self.normalized:
            return dd - radius * radius, 2.0 * d, -2.0 * float(d @ c_dot) - 2.0 * radius * radius_dot
        inv_r2 = 1.0 / (radius * radius)
        psi = dd * inv_r2 - 1.0
        psi_t = -2.0 * float(d @ c_dot) * inv_r2 - 2.0 * dd * radius_dot * inv_r2 / radius
        return psi, 2.0 * inv_r2 * d, psi_t


_J = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True, kw_only=True)
class EllipseExterior(ConstraintPrimitive):
    """
    psi = (x1 - c(t))^T A(t) (x1 - c(t)) - 1 in the plane, with
    A(t) = R(theta(t)) diag(a_e, b_e) R(theta(t))^T.
    """

    center: Tuple[TimeSignal, ...]
    semi_axes: Tuple[float, float]
    angle: TimeSignal = field(default_factory=lambda: TimeSignal.constant(0.0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _signals(self.center))
        object.__setattr__(self, "angle", as_signal(self.angle))
        if len(self.center) != 2:
            raise ConfigError("ellipse primitives are planar: center needs 2 components")
        if len(self.semi_axes) != 2 or min(self.semi_axes) <= 0.0:
            raise ConfigError("ellipse semi_axes must be two positive numbers")
        object.__setattr__(self, "semi_axes", (float(self.semi_axes[0]), float(self.semi_axes[1])))
        object.__setattr__(self, "_diag", np.diag(self.semi_axes))

    @property
    def dimension(self) -> Optional[int]:
        return 2

    def shape_matrix(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """A(t) and its time derivative"""
        theta, theta_dot = self.angle.evaluate(t)
        rot = rotation(theta)
        a = rot @ self._diag @ rot.T
        # dR/dtheta = R J
        rdot = theta_dot * (rot @ _J)
        a_dot = rdot @ self._diag @ rot.T + rot @ self._diag @ rdot.T
        return a, a_dot

    def value(self, t: float, x1: np.ndarray) -> float:
        rot = rotation(self.angle.value(t))
        c = np.array([s.value(t) for s in self.center])
        d = x1 - c
        return float(d @ (rot @ self._diag @ rot.T) @ d) - 1.0

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        c, c_dot = _signal_vector(self.center, t)
        a, a_dot = self.shape_matrix(t)
        d = x1 - c
        ad = a @ d
        psi = float(d @ ad) - 1.0
        psi_t = float(d @ a_dot @ d) - 2.0 * float(ad @ c_dot)
        return psi, 2.0 * ad, psi_t


@dataclass(frozen=True, kw_only=True)
class TanhWrapped(ConstraintPrimitive):
    """psi = tanh(gain * q(t, x1)) for an inner disk or ellipse form q"""

    inner: ConstraintPrimitive
    gain: float

    def __post_init__(self) -> None:
        if self.gain <= 0.0:
            raise ConfigError("tanh gain must be positive")
        if not isinstance(self.inner, (DiskInterior, DiskExterior, EllipseExterior)):
            raise ConfigError("tanh wraps only disk or ellipse forms")

    @property
    def dimension(self) -> Optional[int]:
        return self.inner.dimension

    def value(self, t: float, x1: np.ndarray) -> float:
        return math.tanh(self.gain * self.inner.value(t, x1))

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        q, q_x, q_t = self.inner.evaluate(t, x1)
        psi = math.tanh(self.gain * q)
        slope = self.gain * (1.0 - psi * psi)
        return psi, slope * q_x, slope * q_t


@dataclass(frozen=True, kw_only=True)
class PowerWrapped(ConstraintPrimitive):
    """
    psi = (R(t) - ||x1 - c(t)||)^p with odd integer p.

    The distance is not differentiable at the center; the gradient there is
    reported as zero.
    """

    radius: TimeSignal
    exponent: int = 3
    center: Tuple[TimeSignal, ...] = (TimeSignal.constant(0.0), TimeSignal.constant(0.0))

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _signals(self.center))
        object.__setattr__(self, "radius", as_signal(self.radius))
        if self.exponent < 1 or self.exponent % 2 == 0:
            raise ConfigError("power exponent must be an odd positive integer")

    @property
    def dimension(self) -> Optional[int]:
        return len(self.center)

    def value(self, t: float, x1: np.ndarray) -> float:
        c = np.array([s.value(t) for s in self.center])
        return (self.radius.value(t) - float(np.linalg.norm(x1 - c))) ** self.exponent

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        c, c_dot = _signal_vector(self.center, t)
        radius, radius_dot = self.radius.evaluate(t)
        d = x1 - c
        dist = float(np.linalg.norm(d))
        p = self.exponent
        psi = (radius - dist) ** p
        slope = p * (radius - dist) ** (p - 1)
        if dist == 0.0:
            return psi, np.zeros_like(d, dtype=float), slope * radius_dot
        unit = d / dist
        return psi, -slope * unit, slope * (radius_dot + float(unit @ c_dot))


@dataclass(frozen=True, kw_only=True)
class AuxiliaryCoercive(ConstraintPrimitive):
    """psi = c_aux - ||x1||^2, added to make a family radially unbounded"""

    c_aux: float

    def __post_init__(self) -> None:
        if self.c_aux <= 0.0:
            raise ConfigError("c_aux must be positive")

    def value(self, t: float, x1: np.ndarray) -> float:
        return self.c_aux - float(x1 @ x1)

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        return self.c_aux - float(x1 @ x1), -2.0 * np.asarray(x1, dtype=float), 0.0


@dataclass(frozen=True, kw_only=True)
class FiniteDifferencePrimitive(ConstraintPrimitive):
    """
    Arbitrary callable psi(t, x1) differentiated by central differences.

    For experiments only: none of the exactness properties of the analytic
    primitives apply.
    """

    func: Callable[[float, np.ndarray], float]
    step: float = 1e-6

    def value(self, t: float, x1: np.ndarray) -> float:
        return float(self.func(t, x1))

    def evaluate(self, t: float, x1: np.ndarray) -> PrimitiveEvaluation:
        x1 = np.asarray(x1, dtype=float)
        h = self.step * max(1.0, float(np.linalg.norm(x1)))
        grad = np.empty_like(x1)
        for k in range(x1.size):
            offset = np.zeros_like(x1)
            offset[k] = h
            grad[k] = (self.func(t, x1 + offset) - self.func(t, x1 - offset)) / (2.0 * h)
        ht = self.step * max(1.0, abs(t))
        psi_t = (self.func(t + ht, x1) - self.func(t - ht, x1)) / (2.0 * ht)
        return float(self.func(t, x1)), grad, psi_t


@dataclass(frozen=True)
class ConstraintEvaluation:
    """alpha and its derivatives at one (t, x1), plus the LSE weights"""

    alpha: float
    gradient: np.ndarray
    time_derivative: float
    weights: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True)
class ConsolidatedConstraint:
    """A nonempty family of same-class primitives consolidated with sharpness nu"""

    primitives: Tuple[ConstraintPrimitive, ...]
    nu: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "primitives", tuple(self.primitives))
        if not self.primitives:
            raise ConfigError("a consolidated constraint needs at least one primitive")
        if not (self.nu > 0.0 and math.isfinite(self.nu)):
            raise ConfigError(f"nu must be a positive finite number, got {self.nu}")
        classes = {p.constraint_class for p in self.primitives}
        if len(classes) != 1:
            raise ConfigError("hard and soft primitives cannot be consolidated together")
        dims = {p.dimension for p in self.primitives if p.dimension is not None}
        if len(dims) > 1:
            raise ConfigError(f"primitives disagree on the dimension of x1: {sorted(dims)}")

    @property
    def m(self) -> int:
        return len(self.primitives)

    @property
    def constraint_class(self) -> ConstraintClass:
        return self.primitives[0].constraint_class

    @property
    def dimension(self) -> Optional[int]:
        dims = [p.dimension for p in self.primitives if p.dimension is not None]
        return dims[0] if dims else None

    def value(self, t: float, x1: np.ndarray) -> float:
        x1 = _checked_point(t, x1)
        psi = np.array([p.value(t, x1) for p in self.primitives])
        return _finite(-float(logsumexp(-self.nu * psi)) / self.nu, "alpha")

    def evaluate(self, t: float, x1: np.ndarray) -> ConstraintEvaluation:
        x1 = _checked_point(t, x1)
        parts = [p.evaluate(t, x1) for p in self.primitives]
        psi = np.array([part[0] for part in parts])
        z = -self.nu * psi
        lse = float(logsumexp(z))
        # w_j = exp(-nu psi_j) exp(nu alpha), shifted so no term exceeds 1
        weights = np.exp(z - lse)
        gradient = weights @ np.array([part[1] for part in parts], dtype=float)
        time_derivative = float(weights @ np.array([part[2] for part in parts]))
        alpha = _finite(-lse / self.nu, "alpha")
        if not (np.all(np.isfinite(gradient)) and math.isfinite(time_derivative)):
            raise NumericalError("non-finite constraint derivative", details={"t": t})
        return ConstraintEvaluation(alpha, gradient, time_derivative, weights, psi)


def _checked_point(t: float, x1: np.ndarray) -> np.ndarray:
    x1 = np.asarray(x1, dtype=float)
    if not math.isfinite(t) or not np.all(np.isfinite(x1)):
        raise NumericalError("non-finite constraint input", details={"t": t, "x1": x1.tolist()})
    return x1


def _finite(value: float, name: str) -> float:
    if not math.isfinite(value):
        raise NumericalError(f"non-finite {name}")
    return value


def consolidate(primitives: Sequence[ConstraintPrimitive], nu: float) -> ConsolidatedConstraint:
    return ConsolidatedConstraint(tuple(primitives), nu)


# Operations


def eval_alpha(c: ConsolidatedConstraint, t: float, x1: np.ndarray) -> float:
    return c.value(t, x1)


def eval_alpha_gradient(c: ConsolidatedConstraint, t: float, x1: np.ndarray) -> np.ndarray:
    return c.evaluate(t, x1).gradient


def eval_alpha_time_derivative(c: ConsolidatedConstraint, t: float, x1: np.ndarray) -> float:
    return c.evaluate(t, x1).time_derivative


def _grid_axes(search_box: Box, points: int) -> List[np.ndarray]:
    if points < 2:
        raise ConfigError("grid_points_per_axis must be at least 2")
    axes = []
    for low, high in search_box:
        if not (math.isfinite(low) and math.isfinite(high)) or high < low:
            raise ConfigError(f"invalid search box side ({low}, {high})")
        axes.append(np.linspace(low, high, points))
    return axes


def estimate_alpha_star(
    c: ConsolidatedConstraint, t: float, search_box: Box, grid_points_per_axis: int
) -> float:
    """
    Lower bound on max_x alpha(t, x) over a box: best grid value, then a
    bounded Powell refinement from the best grid point.
    """
    axes = _grid_axes(search_box, grid_points_per_axis)
    best_value = -math.inf
    best_point: Optional[np.ndarray] = None
    for point in itertools.product(*axes):
        x1 = np.array(point)
        value = c.value(t, x1)
        if value > best_value:
            best_value, best_point = value, x1

    result = minimize(
        lambda x: -c.value(t, x),
        best_point,
        method="Powell",
        bounds=list(search_box),
        options={"xtol": 1e-10, "ftol": 1e-12, "maxiter": 2000},
    )
    refined = np.clip(result.x, [lo for lo, _ in search_box], [hi for _, hi in search_box])
    return max(best_value, c.value(t, refined))


@dataclass(frozen=True)
class CoercivityReport:
    passed: bool
    interior_alpha: float
    ray_alphas: Tuple[float, ...]


def coercivity_check(
    c: ConsolidatedConstraint,
    t: float,
    interior_point: Sequence[float],
    radius: float = 1e3,
    rays: int = 16,
) -> CoercivityReport:
    """alpha far out along several rays must fall below alpha at a known interior point"""
    center = np.asarray(interior_point, dtype=float)
    n = center.size
    if n == 2:
        angles = np.linspace(0.0, 2.0 * math.pi, rays, endpoint=False)
        directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        rng = np.random.default_rng(0)
        directions = rng.normal(size=(rays, n))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    inside = c.value(t, center)
    far = tuple(c.value(t, radius * d) for d in directions)
    return CoercivityReport(all(v < inside for v in far), inside, far)


@dataclass(frozen=True)
class CriticalPoint:
    x1: Tuple[float, ...]
    alpha: float
    gradient_norm: float


@dataclass(frozen=True)
class InvexityReport:
    """Sampled critical points of alpha; any with alpha < 0 are suspicious"""

    critical_points: Tuple[CriticalPoint, ...]

    @property
    def suspicious(self) -> Tuple[CriticalPoint, ...]:
        return tuple(p for p in self.critical_points if p.alpha < 0.0)

    @property
    def passed(self) -> bool:
        return not self.suspicious


def invexity_diagnostic(
    c: ConsolidatedConstraint,
    t: float,
    search_box: Box,
    grid_points_per_axis: int = 41,
    tolerance: float = 1e-6,
    max_candidates: int = 20,
) -> InvexityReport:
    """
    Look for critical points of alpha with alpha < 0 inside a box.

    Grid-local minima of ||grad alpha|| seed a Nelder-Mead search on
    ||grad alpha||^2; points that reach ``tolerance`` count as critical.
    Finding none is evidence, not proof, that -alpha is invex there.
    """
    axes = _grid_axes(search_box, grid_points_per_axis)
    shape = tuple(len(a) for a in axes)
    norms = np.empty(shape)
    for index in itertools.product(*(range(s) for s in shape)):
        x1 = np.array([axes[k][i] for k, i in enumerate(index)])
        norms[index] = float(np.linalg.norm(c.evaluate(t, x1).gradient))

    seeds = []
    for index in itertools.product(*(range(s) for s in shape)):
        local = norms[index]
        is_min = True
        for k in range(len(shape)):
            for step in (-1, 1):
                j = index[k] + step
                if 0 <= j < shape[k]:
                    neighbour = list(index)
                    neighbour[k] = j
                    if norms[tuple(neighbour)] < local:
                        is_min = False
        if is_min:
            seeds.append((local, index))
    seeds.sort(key=lambda item: item[0])

    lows = np.array([lo for lo, _ in search_box])
    highs = np.array([hi for _, hi in search_box])
    found: List[CriticalPoint] = []
    for _, index in seeds[:max_candidates]:
        start = np.array([axes[k][i] for k, i in enumerate(index)])
        result = minimize(
            lambda x: float(np.sum(c.evaluate(t, np.clip(x, lows, highs)).gradient ** 2)),
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-16, "maxiter": 4000},
        )
        point = np.clip(result.x, lows, highs)
        evaluation = c.evaluate(t, point)
        norm = float(np.linalg.norm(evaluation.gradient))
        if norm <= tolerance:
            duplicate = any(np.linalg.norm(point - np.array(p.x1)) < 1e-6 for p in found)
            if not duplicate:
                found.append(CriticalPoint(tuple(point.tolist()), evaluation.alpha, norm))
    return InvexityReport(tuple(found))


def alpha_grid(c: ConsolidatedConstraint, t: float, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """alpha on a planar grid, indexed [row=y, column=x] as matplotlib contours expect"""
    grid = np.empty((len(ys), len(xs)))
    for i, y in enumerate(ys):
        for j, x in enumerate(xs):
            grid[i, j] = c.value(t, np.array([x, y]))
    return grid
