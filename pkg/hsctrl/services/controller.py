"""
Hard/soft constraint controller.

Step 1 drives the position-level state x1 with a reciprocal barrier on the
consolidated hard constraint alpha_h and a second one on the relaxed soft
margin e_s = eta * alpha_s - (rho_n - rho_r). The relaxation rho_r grows
only while the soft and hard gradients conflict near the hard boundary.
Layers 2..r then track the virtual controls of the layer below inside
exponentially shrinking funnels. In global mode the shifting function eta
rises from 0 to 1 over [0, Ts], so every error starts at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from hsctrl.core.exceptions import (
    BarrierBreach,
    ConfigError,
    FunnelBreach,
    NumericalError,
    SoftBarrierBreach,
)
from hsctrl.core.structured_logging import get_logger
from hsctrl.models.constraints import ConsolidatedConstraint, ConstraintClass
from hsctrl.models.switch import SwitchFunction, eval_switch, make_switch
from hsctrl.schemas.enums import BarrierKind, ControlMode, TransformKind

logger = get_logger(__name__)

G1Map = Callable[[float, np.ndarray], np.ndarray]


def identity_g1(t: float, x1: np.ndarray) -> np.ndarray:
    """Known part of the first-layer input matrix for unicycle and integrator plants"""
    return np.eye(len(x1))


# Time-varying bounds


@dataclass(frozen=True)
class NominalBound:
    """Prescribed-time bound rho_n reaching zero at the deadline T"""

    T: float
    beta: float
    rho0: float

    def __post_init__(self) -> None:
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ConfigError(f"deadline T must be positive, got {self.T}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"beta must lie in (0,1), got {self.beta}")
        if not (self.rho0 <= 0.0 and math.isfinite(self.rho0)):
            raise ConfigError(f"rho0 must be a finite non-positive number, got {self.rho0}")

    @property
    def exponent(self) -> float:
        return 1.0 / (1.0 - self.beta)


def rho_nominal(nb: NominalBound, t: float) -> float:
    if t >= nb.T:
        return 0.0
    return ((nb.T - t) / nb.T) ** nb.exponent * nb.rho0


def rho_nominal_dot(nb: NominalBound, t: float) -> float:
    if t >= nb.T:
        return 0.0
    k = nb.exponent
    return k * ((nb.T - t) / nb.T) ** (k - 1.0) * (-1.0 / nb.T) * nb.rho0


@dataclass(frozen=True)
class Funnel:
    """theta(t) = (theta0 - theta_inf) exp(-decay t) + theta_inf"""

    theta0: float
    theta_inf: float
    decay: float

    def __post_init__(self) -> None:
        if not (self.theta_inf > 0.0 and self.decay > 0.0):
            raise ConfigError("funnel theta_inf and decay must be positive")
        if not (self.theta0 >= self.theta_inf and math.isfinite(self.theta0)):
            raise ConfigError(
                f"funnel theta0 must be finite and >= theta_inf, got {self.theta0} < {self.theta_inf}"
            )


def funnel_value(f: Funnel, t: float) -> float:
    return (f.theta0 - f.theta_inf) * math.exp(-f.decay * t) + f.theta_inf


def funnel_dot(f: Funnel, t: float) -> float:
    return -f.decay * (f.theta0 - f.theta_inf) * math.exp(-f.decay * t)


@dataclass(frozen=True)
class ShiftingFunction:
    """eta(t) = sin(pi t / (2 Ts)) on [0, Ts), then 1"""

    Ts: float

    def __post_init__(self) -> None:
        if not (self.Ts > 0.0 and math.isfinite(self.Ts)):
            raise ConfigError(f"settling time Ts must be positive, got {self.Ts}")

    def value(self, t: float) -> float:
        if t >= self.Ts:
            return 1.0
        return math.sin(math.pi * t / (2.0 * self.Ts))

    def derivative(self, t: float) -> float:
        if t >= self.Ts:
            return 0.0
        return math.pi / (2.0 * self.Ts) * math.cos(math.pi * t / (2.0 * self.Ts))


def transform_T(ehat: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Funnel transformation ln((1 + ehat) / (1 - ehat)), odd and strictly
    increasing on (-1, 1). Raises FunnelBreach for |ehat| >= 1.
    """
    arr = np.asarray(ehat, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) >= 1.0):
        worst = float(np.max(np.abs(arr))) if arr.size else math.nan
        raise FunnelBreach(layer=None, component=None, ehat=worst)
    out = np.log1p(arr) - np.log1p(-arr)
    return float(out) if out.ndim == 0 else out


# Configuration


@dataclass(frozen=True)
class ControllerConfig:
    """
    Complete controller parameterization for an n-dimensional, r-layer plant.

    ``funnels`` holds one row of n funnels per layer 2..r and ``layer_gains``
    the matching gains k_2..k_r.
    """

    n: int
    hard: ConsolidatedConstraint
    soft: ConsolidatedConstraint
    nominal: NominalBound
    k_h: float = 1.0
    k_s: float = 1.0
    k_r: float = 1.5
    delta_h: float = 0.5
    delta_gamma: float = 10.0
    layer_gains: Tuple[float, ...] = ()
    funnels: Tuple[Tuple[Funnel, ...], ...] = ()
    mode: ControlMode = ControlMode.SEMIGLOBAL
    shifting: Optional[ShiftingFunction] = None
    g1: G1Map = identity_g1
    barrier: BarrierKind = BarrierKind.RECIPROCAL
    transform: TransformKind = TransformKind.LOG
    phi_h_switch: SwitchFunction = field(init=False, repr=False, compare=False)
    phi_gamma_switch: SwitchFunction = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "layer_gains", tuple(float(k) for k in self.layer_gains))
        object.__setattr__(self, "funnels", tuple(tuple(row) for row in self.funnels))
        if self.n < 1:
            raise ConfigError(f"n must be at least 1, got {self.n}")
        for name in ("k_h", "k_s", "k_r", "delta_h", "delta_gamma"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive, got {value}")
        if any(not k > 0.0 for k in self.layer_gains):
            raise ConfigError("layer gains must be positive")
        if len(self.funnels) != len(self.layer_gains):
            raise ConfigError(
                f"need one funnel row per layer gain, got {len(self.funnels)} rows "
                f"for {len(self.layer_gains)} gains"
            )
        if any(len(row) != self.n for row in self.funnels):
            raise ConfigError(f"every funnel row needs exactly n={self.n} funnels")
        if self.hard.constraint_class != ConstraintClass.HARD:
            raise ConfigError("the hard family must consist of hard primitives")
        if self.soft.constraint_class != ConstraintClass.SOFT:
            raise ConfigError("the soft family must consist of soft primitives")
        for family in (self.hard, self.soft):
            if family.dimension is not None and family.dimension != self.n:
                raise ConfigError(f"constraint dimension {family.dimension} does not match n={self.n}")
        if self.mode == ControlMode.GLOBAL and self.shifting is None:
            raise ConfigError("global mode needs a shifting function")
        if self.mode == ControlMode.GLOBAL and self.shifting.Ts > self.nominal.T:
            raise ConfigError(
                f"settling time Ts={self.shifting.Ts} must not exceed the deadline T={self.nominal.T}"
            )
        if self.mode == ControlMode.GLOBAL and not self.nominal.rho0 < 0.0:
            # e_s(0) = -rho0 while eta(0) = 0
            raise ConfigError(f"global mode needs a strictly negative rho0, got {self.nominal.rho0}")
        if self.barrier != BarrierKind.RECIPROCAL:
            raise ConfigError(f"barrier kind {self.barrier.value!r} is not implemented")
        if self.transform != TransformKind.LOG:
            raise ConfigError(f"transform kind {self.transform.value!r} is not implemented")

        object.__setattr__(self, "phi_h_switch", make_switch(self.delta_h, 0.0))
        object.__setattr__(self, "phi_gamma_switch", make_switch(0.0, -self.delta_gamma))

    @property
    def r(self) -> int:
        return len(self.layer_gains) + 1

    def eta(self, t: float) -> float:
        if self.mode == ControlMode.GLOBAL and self.shifting is not None:
            return self.shifting.value(t)
        return 1.0

    def with_updates(self, **changes) -> "ControllerConfig":
        return replace(self, **changes)


# Diagnostics


@dataclass(frozen=True)
class LayerDiagnostics:
    layer: int
    e: np.ndarray
    ehat: np.ndarray
    eps: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class ControlDiagnostics:
    """Every intermediate quantity of one control evaluation"""

    t: float
    alpha_h: float
    alpha_s: float
    grad_alpha_h: np.ndarray
    grad_alpha_s: np.ndarray
    eta: float
    rho_n: float
    rho_r: float
    rho_s: float
    e_s: float
    eps_h: float
    eps_s: float
    u_h: np.ndarray
    u_s: np.ndarray
    s1: np.ndarray
    gamma: float
    phi_h: float
    phi_gamma: float
    rho_r_dot: float
    layers: Tuple[LayerDiagnostics, ...] = ()
    u: Optional[np.ndarray] = None

    @property
    def soft_enforced(self) -> bool:
        """The soft barrier is active once eta has reached 1"""
        return self.eta >= 1.0


@dataclass(frozen=True)
class _HardTerms:
    alpha_h: float
    grad_h: np.ndarray
    eps_h: float
    u_h: np.ndarray
    phi_h: float
    alpha_s: float
    grad_s: np.ndarray
    gamma: float
    phi_gamma: float
    rho_r_dot: float


def _hard_terms(t: float, x1: np.ndarray, rho_r: float, cfg: ControllerConfig) -> _HardTerms:
    hard = cfg.hard.evaluate(t, x1)
    if not hard.alpha > 0.0:
        raise BarrierBreach(hard.alpha, t=t)
    soft = cfg.soft.evaluate(t, x1)
    g1 = np.asarray(cfg.g1(t, x1), dtype=float)

    eps_h = 1.0 / hard.alpha
    u_h = cfg.k_h * eps_h * eps_h * hard.gradient
    phi_h = eval_switch(cfg.phi_h_switch, hard.alpha)
    gamma = eps_h * float(soft.gradient @ (g1 @ hard.gradient))
    phi_gamma = eval_switch(cfg.phi_gamma_switch, gamma)
    rho_r_dot = -phi_gamma * phi_h * float(soft.gradient @ (g1 @ u_h)) - cfg.k_r * rho_r
    return _HardTerms(
        alpha_h=hard.alpha,
        grad_h=hard.gradient,
        eps_h=eps_h,
        u_h=u_h,
        phi_h=phi_h,
        alpha_s=soft.alpha,
        grad_s=soft.gradient,
        gamma=gamma,
        phi_gamma=phi_gamma,
        rho_r_dot=rho_r_dot,
    )


# Operations


def relaxation_rhs(t: float, x1: np.ndarray, rho_r: float, cfg: ControllerConfig) -> float:
    """d rho_r / dt; negative-definite decay away from active hard/soft conflicts"""
    return _hard_terms(t, np.asarray(x1, dtype=float), rho_r, cfg).rho_r_dot


def step1_control(
    t: float, x1: np.ndarray, rho_r: float, cfg: ControllerConfig
) -> Tuple[np.ndarray, ControlDiagnostics]:
    x1 = np.asarray(x1, dtype=float)
    terms = _hard_terms(t, x1, rho_r, cfg)

    rho_n = rho_nominal(cfg.nominal, t)
    rho_s = rho_n - rho_r
    eta = cfg.eta(t)
    e_s = eta * terms.alpha_s - rho_s
    if not e_s > 0.0:
        raise SoftBarrierBreach(e_s, t=t)
    eps_s = 1.0 / e_s
    u_s = cfg.k_s * eps_s * eps_s * terms.grad_s
    s1 = u_s + terms.phi_h * terms.u_h
    if not (np.all(np.isfinite(s1)) and math.isfinite(terms.rho_r_dot)):
        raise NumericalError("non-finite step-1 control", details={"t": t})

    diag = ControlDiagnostics(
        t=t,
        alpha_h=terms.alpha_h,
        alpha_s=terms.alpha_s,
        grad_alpha_h=terms.grad_h,
        grad_alpha_s=terms.grad_s,
        eta=eta,
        rho_n=rho_n,
        rho_r=rho_r,
        rho_s=rho_s,
        e_s=e_s,
        eps_h=terms.eps_h,
        eps_s=eps_s,
        u_h=terms.u_h,
        u_s=u_s,
        s1=s1,
        gamma=terms.gamma,
        phi_h=terms.phi_h,
        phi_gamma=terms.phi_gamma,
        rho_r_dot=terms.rho_r_dot,
    )
    return s1, diag


def layer_control(
    i: int, t: float, e_i: np.ndarray, cfg: ControllerConfig
) -> Tuple[np.ndarray, LayerDiagnostics]:
    """Virtual (or actual, for i = r) control of layer i from its tracking error"""
    if not 2 <= i <= cfg.r:
        raise ConfigError(f"layer index must lie in [2, {cfg.r}], got {i}")
    e_i = np.asarray(e_i, dtype=float)
    theta = np.array([funnel_value(f, t) for f in cfg.funnels[i - 2]])
    eta = cfg.eta(t)
    ehat = eta * e_i / theta
    outside = np.flatnonzero(~(np.abs(ehat) < 1.0))
    if outside.size:
        j = int(outside[0])
        raise FunnelBreach(layer=i, component=j + 1, ehat=float(ehat[j]), t=t)
    eps = np.asarray(transform_T(ehat), dtype=float)
    xi = 2.0 * eta / (theta * (1.0 - ehat * ehat))
    s = -cfg.layer_gains[i - 2] * xi * eps
    return s, LayerDiagnostics(i, e_i, ehat, eps, xi, theta, s)


def full_control(
    t: float, x: np.ndarray, rho_r: float, cfg: ControllerConfig
) -> Tuple[np.ndarray, ControlDiagnostics]:
    """Actual input u = s_r for the stacked measured state x = (x1, ..., xr)"""
    x = np.asarray(x, dtype=float)
    n, r = cfg.n, cfg.r
    if x.shape != (n * r,):
        raise ConfigError(f"state must have n*r={n * r} entries, got shape {x.shape}")
    if not (math.isfinite(t) and math.isfinite(rho_r) and np.all(np.isfinite(x))):
        raise NumericalError("non-finite controller input", details={"t": t})

    s, diag = step1_control(t, x[:n], rho_r, cfg)
    layers: List[LayerDiagnostics] = []
    for i in range(2, r + 1):
        s, layer = layer_control(i, t, x[(i - 1) * n: i * n] - s, cfg)
        layers.append(layer)
    if not np.all(np.isfinite(s)):
        raise NumericalError("non-finite control output", details={"t": t})
    return s, replace(diag, layers=tuple(layers), u=s)


# Initial-condition validation


@dataclass(frozen=True)
class InitialCheck:
    name: str
    passed: bool
    message: str
    skipped: bool = False


@dataclass(frozen=True)
class InitialValidation:
    checks: Tuple[InitialCheck, ...]
    config: ControllerConfig
    tuned: bool = False

    @property
    def passed(self) -> bool:
        return all(check.passed or check.skipped for check in self.checks)

    @property
    def first_failure(self) -> Optional[InitialCheck]:
        return next((c for c in self.checks if not (c.passed or c.skipped)), None)


def _skip_remaining(cfg: ControllerConfig, from_layer: int, reason: str) -> List[InitialCheck]:
    return [InitialCheck(f"funnel_layer_{i}", False, reason, skipped=True) for i in range(from_layer, cfg.r + 1)]


def validate_initial(
    cfg: ControllerConfig,
    x0: np.ndarray,
    auto_tune: bool = False,
    *,
    auto_rho0: Optional[bool] = None,
    auto_funnels: Optional[bool] = None,
) -> InitialValidation:
    """
    Check that the controller is well-defined at t = 0.

    A start outside the hard set raises ConfigError in every mode. In
    semi-global mode rho0 < alpha_s(0) and |e_i(0)| < theta_i(0) are
    checked layer by layer; with ``auto_tune`` failing values are replaced
    (rho0 by alpha_s(0) - 1, theta0 by 1.1 |e| + 0.1) and the tuned config
    is returned. ``auto_rho0`` and ``auto_funnels`` override ``auto_tune``
    for one kind of value. Global mode needs no further checks.
    """
    auto_rho0 = auto_tune if auto_rho0 is None else auto_rho0
    auto_funnels = auto_tune if auto_funnels is None else auto_funnels
    x0 = np.asarray(x0, dtype=float)
    n, r = cfg.n, cfg.r
    if x0.shape != (n * r,):
        raise ConfigError(f"initial state must have n*r={n * r} entries, got shape {x0.shape}")
    x1 = x0[:n]

    alpha_h0 = cfg.hard.value(0.0, x1)
    if not alpha_h0 > 0.0:
        raise ConfigError(
            f"initial state violates the hard constraints: alpha_h(0)={alpha_h0:.6g} <= 0; "
            "initial hard feasibility (alpha_h(0, x1(0)) > 0) is required in every mode",
            details={"alpha_h": alpha_h0, "x1": x1.tolist()},
        )
    checks: List[InitialCheck] = [InitialCheck("hard_initial", True, f"alpha_h(0)={alpha_h0:.6g}")]

    if cfg.mode == ControlMode.GLOBAL:
        checks.append(InitialCheck("rho0", True, "not required in global mode", skipped=True))
        checks.extend(_skip_remaining(cfg, 2, "not required in global mode"))
        return InitialValidation(tuple(checks), cfg)

    tuned = False
    alpha_s0 = cfg.soft.value(0.0, x1)
    rho0 = cfg.nominal.rho0
    if rho0 < alpha_s0:
        checks.append(InitialCheck("rho0", True, f"rho0={rho0:.6g} < alpha_s(0)={alpha_s0:.6g}"))
    elif auto_rho0:
        rho0 = min(rho0, alpha_s0 - 1.0)
        cfg = cfg.with_updates(nominal=replace(cfg.nominal, rho0=rho0))
        tuned = True
        checks.append(InitialCheck("rho0", True, f"rho0 tuned to {rho0:.6g}"))
        logger.info("Tuned rho0", rho0=rho0, alpha_s0=alpha_s0)
    else:
        checks.append(
            InitialCheck("rho0", False, f"rho0={rho0:.6g} must be below alpha_s(0)={alpha_s0:.6g}")
        )
        checks.extend(_skip_remaining(cfg, 2, "rho0 check failed"))
        return InitialValidation(tuple(checks), cfg, tuned)

    s, _ = step1_control(0.0, x1, 0.0, cfg)
    for i in range(2, r + 1):
        e = x0[(i - 1) * n: i * n] - s
        row = list(cfg.funnels[i - 2])
        bad = [j for j, f in enumerate(row) if not abs(e[j]) < f.theta0]
        if bad and not auto_funnels:
            detail = ", ".join(f"|e_{i},{j + 1}(0)|={abs(e[j]):.6g} >= {row[j].theta0:.6g}" for j in bad)
            checks.append(InitialCheck(f"funnel_layer_{i}", False, detail))
            checks.extend(_skip_remaining(cfg, i + 1, f"layer {i} funnel check failed"))
            return InitialValidation(tuple(checks), cfg, tuned)
        for j in bad:
            row[j] = replace(row[j], theta0=max(1.1 * abs(e[j]) + 0.1, row[j].theta_inf))
        if bad:
            funnels = list(cfg.funnels)
            funnels[i - 2] = tuple(row)
            cfg = cfg.with_updates(funnels=tuple(funnels))
            tuned = True
            logger.info("Tuned funnels", layer=i, theta0=[f.theta0 for f in row])
        checks.append(
            InitialCheck(f"funnel_layer_{i}", True, "tuned" if bad else f"max |e|={np.max(np.abs(e)):.6g}")
        )
        s, _ = layer_control(i, 0.0, e, cfg)

    return InitialValidation(tuple(checks), cfg, tuned)
