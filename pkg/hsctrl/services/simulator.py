"""
Fixed-step RK4 integration of the closed loop.

The integrated state is the plant's internal state augmented with the
relaxation rho_r. Every RK stage evaluates the full controller at the
stage's measured state; the first stage of each step doubles as the
logged record for that step.
"""

from __future__ import annotations

import math
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from hsctrl.core.exceptions import (
    BarrierBreach,
    ConfigError,
    FunnelBreach,
    NumericalError,
    SoftBarrierBreach,
)
from hsctrl.core.structured_logging import RunLogger
from hsctrl.schemas.enums import Monitor
from hsctrl.services.controller import ControlDiagnostics, ControllerConfig, full_control
from hsctrl.services.plant import PlantSpec

logger = structlog.get_logger(__name__)


ALL_MONITORS: FrozenSet[Monitor] = frozenset(Monitor)


@dataclass(frozen=True)
class SimConfig:
    """Integration step, horizon and logging/monitoring options (times in s)"""

    dt: float = 1e-3
    t_final: float = 20.0
    log_stride: int = 1
    monitors: FrozenSet[Monitor] = ALL_MONITORS
    rho_r_tolerance: float = 1e-9
    deadlock_tolerance: float = 1e-6
    deadlock_window: float = 1.0
    sustain_window: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.dt <= 0.01:
            raise ConfigError(f"dt must lie in (0, 0.01], got {self.dt}")
        if not (self.t_final >= 0.0 and math.isfinite(self.t_final)):
            raise ConfigError(f"t_final must be finite and non-negative, got {self.t_final}")
        if self.log_stride < 1:
            raise ConfigError(f"log_stride must be at least 1, got {self.log_stride}")
        object.__setattr__(self, "monitors", frozenset(Monitor(m) for m in self.monitors))

    @property
    def steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(frozen=True)
class MonitorFlags:
    """True means the monitored property holds (or the monitor is disabled)"""

    hard_invariance: bool = True
    soft_invariance: bool = True
    funnels: bool = True
    relaxation_sign: bool = True
    finite: bool = True

    @property
    def passed(self) -> bool:
        return not self.failures()

    def failures(self) -> Tuple[Monitor, ...]:
        return tuple(m for m in Monitor if not getattr(self, m.value))


@dataclass(frozen=True)
class SimRecord:
    t: float
    plant_state: np.ndarray
    x: np.ndarray
    u: np.ndarray
    rho_r: float
    diagnostics: ControlDiagnostics
    flags: MonitorFlags = field(default_factory=MonitorFlags)


class SimStatusKind(str, Enum):
    COMPLETED = "completed"
    BARRIER_BREACH = "barrier_breach"
    SOFT_BARRIER_BREACH = "soft_barrier_breach"
    FUNNEL_BREACH = "funnel_breach"
    NUMERICAL_ERROR = "numerical_error"


@dataclass(frozen=True)
class SimStatus:
    kind: SimStatusKind = SimStatusKind.COMPLETED
    t: Optional[float] = None
    layer: Optional[int] = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.kind == SimStatusKind.COMPLETED


@dataclass(frozen=True)
class SimSummary:
    min_alpha_h: float
    max_rho_r: float
    soft_satisfied_from: Optional[float]
    soft_violation_intervals: Tuple[Tuple[float, float], ...]
    deadlock_suspected: bool
    monitor_failures: int


@dataclass(frozen=True)
class SimResult:
    records: Tuple[SimRecord, ...]
    status: SimStatus
    summary: SimSummary
    last_valid: Optional[SimRecord] = None


def _finite_record(x: np.ndarray, u: np.ndarray, rho_r: float, d: ControlDiagnostics) -> bool:
    scalars = (d.alpha_h, d.alpha_s, d.e_s, d.rho_n, d.rho_s, d.rho_r_dot, rho_r)
    return (
        all(math.isfinite(v) for v in scalars)
        and bool(np.all(np.isfinite(x)))
        and bool(np.all(np.isfinite(u)))
    )


def run_monitors(
    record: SimRecord,
    enabled: FrozenSet[Monitor] = ALL_MONITORS,
    rho_r_tolerance: float = 1e-9,
) -> MonitorFlags:
    d = record.diagnostics
    checks = {
        Monitor.HARD_INVARIANCE: lambda: d.alpha_h > 0.0,
        # in global mode the soft margin is only guaranteed once eta = 1
        Monitor.SOFT_INVARIANCE: lambda: d.e_s > 0.0 or not d.soft_enforced,
        Monitor.FUNNELS: lambda: all(bool(np.all(np.abs(layer.ehat) < 1.0)) for layer in d.layers),
        Monitor.RELAXATION_SIGN: lambda: record.rho_r >= -rho_r_tolerance,
        Monitor.FINITE: lambda: _finite_record(record.x, record.u, record.rho_r, d),
    }
    return MonitorFlags(**{m.value: (check() if m in enabled else True) for m, check in checks.items()})


def _status_from(exc: Exception, t: float) -> SimStatus:
    exc_t = getattr(exc, "t", None)
    at = t if exc_t is None else exc_t
    if isinstance(exc, BarrierBreach):
        return SimStatus(SimStatusKind.BARRIER_BREACH, at, 1, str(exc))
    if isinstance(exc, SoftBarrierBreach):
        return SimStatus(SimStatusKind.SOFT_BARRIER_BREACH, at, 1, str(exc))
    if isinstance(exc, FunnelBreach):
        return SimStatus(SimStatusKind.FUNNEL_BREACH, at, exc.layer, str(exc))
    return SimStatus(SimStatusKind.NUMERICAL_ERROR, at, None, str(exc))


def _runs(times: Sequence[float], mask: Sequence[bool]) -> List[Tuple[float, float]]:
    """Maximal runs of consecutive records where ``mask`` holds, as (first t, last t)"""
    runs: List[Tuple[float, float]] = []
    start: Optional[float] = None
    for k, (t, flag) in enumerate(zip(times, mask)):
        if flag and start is None:
            start = t
        if not flag and start is not None:
            runs.append((start, times[k - 1]))
            start = None
    if start is not None:
        runs.append((start, times[-1]))
    return runs


def summarize(records: Sequence[SimRecord], sim: SimConfig) -> SimSummary:
    if not records:
        return SimSummary(math.nan, math.nan, None, (), False, 0)
    times = [rec.t for rec in records]
    alpha_s = [rec.diagnostics.alpha_s for rec in records]
    t_end = times[-1]

    violations = tuple(_runs(times, [a < 0.0 for a in alpha_s]))
    satisfied_from = None
    for start, stop in _runs(times, [a >= 0.0 for a in alpha_s]):
        if stop - start >= sim.sustain_window or stop == t_end:
            satisfied_from = start
            break

    stalled = [
        rec.diagnostics.alpha_s < 0.0 and float(np.linalg.norm(rec.diagnostics.s1)) < sim.deadlock_tolerance
        for rec in records
    ]
    deadlock = any(stop - start > sim.deadlock_window for start, stop in _runs(times, stalled))

    return SimSummary(
        min_alpha_h=min(rec.diagnostics.alpha_h for rec in records),
        max_rho_r=max(rec.rho_r for rec in records),
        soft_satisfied_from=satisfied_from,
        soft_violation_intervals=violations,
        deadlock_suspected=deadlock,
        monitor_failures=sum(1 for rec in records if not rec.flags.passed),
    )


def simulate(
    plant: PlantSpec,
    ctrl: ControllerConfig,
    sim: SimConfig,
    x0: np.ndarray,
    run_id: Optional[str] = None,
) -> SimResult:
    """
    Integrate from the measured initial state ``x0`` until t_final or the
    first breach. Breaches end the run with a non-completed status; the
    records logged up to that point are kept.
    """
    if (plant.n, plant.r) != (ctrl.n, ctrl.r):
        raise ConfigError(
            f"plant is {plant.n}x{plant.r} but the controller is configured for {ctrl.n}x{ctrl.r}"
        )
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (plant.n * plant.r,):
        raise ConfigError(f"initial state must have {plant.n * plant.r} entries, got shape {x0.shape}")

    run_id = run_id or uuid.uuid4().hex[:8]
    dt = sim.dt
    steps = sim.steps

    def stage(t: float, aug: np.ndarray):
        state, rho_r = aug[:-1], float(aug[-1])
        x = plant.measure(state)
        u, diag = full_control(t, x, rho_r, ctrl)
        return np.append(plant.rhs(t, state, u), diag.rho_r_dot), x, u, diag

    aug = np.append(plant.lift(x0), 0.0)
    records: List[SimRecord] = []
    last: Optional[SimRecord] = None
    status = SimStatus()
    reported: set = set()

    with RunLogger(logger, run_id, plant=plant.name, dt=dt, steps=steps, mode=ctrl.mode.value):
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(steps + 1):
                t = k * dt
                try:
                    k1, x, u, diag = stage(t, aug)
                except (BarrierBreach, SoftBarrierBreach, FunnelBreach, NumericalError) as exc:
                    status = _status_from(exc, t)
                    break
                rho_r = float(aug[-1])
                plain = SimRecord(t, aug[:-1].copy(), x, u, rho_r, diag)
                if k % sim.log_stride == 0:
                    flags = run_monitors(plain, sim.monitors, sim.rho_r_tolerance)
                    for failed in set(flags.failures()) - reported:
                        reported.add(failed)
                        logger.warning("Monitor failed", run_id=run_id, monitor=failed.value, t=t)
                    last = SimRecord(t, plain.plant_state, x, u, rho_r, diag, flags)
                    records.append(last)
                else:
                    last = plain
                if k == steps:
                    break

                try:
                    k2 = stage(t + dt / 2.0, aug + dt / 2.0 * k1)[0]
                    k3 = stage(t + dt / 2.0, aug + dt / 2.0 * k2)[0]
                    k4 = stage(t + dt, aug + dt * k3)[0]
                except (BarrierBreach, SoftBarrierBreach, FunnelBreach, NumericalError) as exc:
                    status = _status_from(exc, t)
                    break
                aug = aug + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not np.all(np.isfinite(aug)):
                    status = SimStatus(SimStatusKind.NUMERICAL_ERROR, t + dt, None, "state diverged")
                    break

        if not status.ok:
            logger.warning(
                "Simulation halted", run_id=run_id, status=status.kind.value, t=status.t, layer=status.layer
            )
        summary = summarize(records, sim)
        logger.info(
            "Simulation summary",
            run_id=run_id,
            status=status.kind.value,
            records=len(records),
            min_alpha_h=summary.min_alpha_h,
            max_rho_r=summary.max_rho_r,
            deadlock_suspected=summary.deadlock_suspected,
        )

    return SimResult(tuple(records), status, summary, last)
