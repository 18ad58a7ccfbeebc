"""
Scenario file schema.

Scenario files are TOML documents validated by these models. Every model
rejects unknown keys. Units: times in s, lengths in m, angles in rad,
frequencies in rad/s.
"""

from __future__ import annotations

from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hsctrl.schemas.enums import BarrierKind, ControlMode, DisturbanceKind, Monitor, TransformKind


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# Time signals


class ConstantSignalSpec(StrictModel):
    kind: Literal["constant"]
    value: float


class LinearSignalSpec(StrictModel):
    kind: Literal["linear"]
    slope: float
    offset: float = 0.0


class SineSignalSpec(StrictModel):
    kind: Literal["sine"]
    amplitude: float = 1.0
    frequency: float = Field(..., description="rad/s")
    phase: float = Field(0.0, description="rad")
    offset: float = 0.0


class CosineSignalSpec(StrictModel):
    kind: Literal["cosine"]
    amplitude: float = 1.0
    frequency: float = Field(..., description="rad/s")
    phase: float = Field(0.0, description="rad")
    offset: float = 0.0


class SumSignalSpec(StrictModel):
    kind: Literal["sum"]
    terms: List["SignalField"] = Field(..., min_length=1)


class ProductSignalSpec(StrictModel):
    kind: Literal["product"]
    factors: List["SignalField"] = Field(..., min_length=1)


class ScaledSignalSpec(StrictModel):
    kind: Literal["scaled"]
    factor: float
    signal: "SignalField"


class ExpSignalSpec(StrictModel):
    kind: Literal["exp"]
    signal: "SignalField"


SignalSpec = Annotated[
    Union[
        ConstantSignalSpec,
        LinearSignalSpec,
        SineSignalSpec,
        CosineSignalSpec,
        SumSignalSpec,
        ProductSignalSpec,
        ScaledSignalSpec,
        ExpSignalSpec,
    ],
    Field(discriminator="kind"),
]

# A plain number stands for a constant signal
SignalField = Union[float, SignalSpec]

for _model in (SumSignalSpec, ProductSignalSpec, ScaledSignalSpec, ExpSignalSpec):
    _model.model_rebuild()


# Constraint primitives


class PrimitiveBase(StrictModel):
    label: str = ""


class HalfspaceSpec(PrimitiveBase):
    """psi = normal . x1 + offset(t)"""

    kind: Literal["halfspace"]
    normal: List[float] = Field(..., min_length=1)
    offset: SignalField = 0.0


class DiskInteriorSpec(PrimitiveBase):
    """psi = radius(t)^2 - |x1 - center(t)|^2"""

    kind: Literal["disk_interior"]
    center: List[SignalField] = Field(..., min_length=1)
    radius: SignalField


class DiskExteriorSpec(PrimitiveBase):
    """psi = |x1 - center(t)|^2 / radius(t)^2 - 1, or |x1 - center(t)|^2 - radius(t)^2 unnormalized"""

    kind: Literal["disk_exterior"]
    center: List[SignalField] = Field(..., min_length=1)
    radius: SignalField
    normalized: bool = Field(True, description="false gives |x1 - center|^2 - radius^2")


class EllipseExteriorSpec(PrimitiveBase):
    """Exterior of a rotated ellipse in the plane"""

    kind: Literal["ellipse_exterior"]
    center: List[SignalField] = Field(..., min_length=2, max_length=2)
    semi_axes: Tuple[float, float] = Field(..., description="diagonal of the shape matrix before rotation")
    angle: SignalField = Field(0.0, description="rad")

    @field_validator("semi_axes")
    @classmethod
    def positive_axes(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if min(v) <= 0.0:
            raise ValueError("semi-axes must be positive")
        return v


InnerSpec = Annotated[
    Union[DiskInteriorSpec, DiskExteriorSpec, EllipseExteriorSpec], Field(discriminator="kind")
]


class TanhSpec(PrimitiveBase):
    """psi = tanh(gain * inner)"""

    kind: Literal["tanh"]
    gain: float = Field(..., gt=0)
    inner: InnerSpec


class PowerSpec(PrimitiveBase):
    """psi = (radius(t) - |x1 - center|)^exponent"""

    kind: Literal["power"]
    radius: SignalField
    exponent: int = 3
    center: List[SignalField] = Field(default_factory=lambda: [0.0, 0.0])

    @field_validator("exponent")
    @classmethod
    def odd_exponent(cls, v: int) -> int:
        if v < 1 or v % 2 == 0:
            raise ValueError("exponent must be a positive odd integer")
        return v


class AuxiliarySpec(PrimitiveBase):
    """psi = c_aux - |x1|^2"""

    kind: Literal["auxiliary"]
    c_aux: float = Field(..., gt=0)


PrimitiveSpec = Annotated[
    Union[
        HalfspaceSpec,
        DiskInteriorSpec,
        DiskExteriorSpec,
        EllipseExteriorSpec,
        TanhSpec,
        PowerSpec,
        AuxiliarySpec,
    ],
    Field(discriminator="kind"),
]


def primitive_dimension(spec: PrimitiveSpec) -> Optional[int]:
    if isinstance(spec, HalfspaceSpec):
        return len(spec.normal)
    if isinstance(spec, (DiskInteriorSpec, DiskExteriorSpec, PowerSpec)):
        return len(spec.center)
    if isinstance(spec, EllipseExteriorSpec):
        return 2
    if isinstance(spec, TanhSpec):
        return primitive_dimension(spec.inner)
    return None


# Plants


class ChainedIntegratorSpec(StrictModel):
    kind: Literal["chained_integrator"]
    n: int = Field(..., ge=1)
    r: int = Field(..., ge=1)


class UnicycleSpec(StrictModel):
    kind: Literal["unicycle"]
    mass: float = Field(3.6, gt=0, description="kg")
    inertia: float = Field(0.0405, gt=0, description="kg m^2")
    damping: Tuple[float, float] = (0.3, 0.04)
    vcp_offset: float = Field(0.2, gt=0, description="m")
    initial_heading: float = Field(0.0, description="rad")
    disturbance: Union[DisturbanceKind, List[SignalField]] = DisturbanceKind.NONE

    @field_validator("damping")
    @classmethod
    def non_negative_damping(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if min(v) < 0.0:
            raise ValueError("damping must be non-negative")
        return v

    @field_validator("disturbance")
    @classmethod
    def two_channels(cls, v):
        if isinstance(v, list) and len(v) != 2:
            raise ValueError("a custom disturbance needs exactly two signals")
        return v

    @property
    def n(self) -> int:
        return 2

    @property
    def r(self) -> int:
        return 2


PlantSection = Annotated[Union[ChainedIntegratorSpec, UnicycleSpec], Field(discriminator="kind")]


# Controller


class FunnelSpec(StrictModel):
    """Funnel for every component of one layer; theta0 may be tuned from the initial error"""

    theta0: Union[Literal["auto"], float] = "auto"
    theta_inf: float = Field(0.1, gt=0)
    decay: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def theta0_above_limit(self) -> "FunnelSpec":
        if self.theta0 != "auto" and self.theta0 < self.theta_inf:
            raise ValueError("theta0 must be at least theta_inf")
        return self


class ControllerSection(StrictModel):
    nu: float = Field(10.0, gt=0)
    k_h: float = Field(1.0, gt=0)
    k_s: float = Field(1.0, gt=0)
    k_r: float = Field(1.5, gt=0)
    layer_gains: Optional[List[float]] = None
    delta_h: float = Field(0.5, gt=0)
    delta_gamma: float = Field(10.0, gt=0)
    deadline: float = Field(4.0, gt=0, description="s, the time T at which rho_n reaches zero")
    beta: float = 0.3
    rho0: Union[Literal["auto"], float] = "auto"
    mode: ControlMode = ControlMode.SEMIGLOBAL
    settling_time: Optional[float] = Field(None, gt=0, description="s, Ts of the shifting function")
    funnels: Optional[List[FunnelSpec]] = None
    barrier: BarrierKind = BarrierKind.RECIPROCAL
    transform: TransformKind = TransformKind.LOG

    @field_validator("beta")
    @classmethod
    def beta_range(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("beta must lie in (0,1)")
        return v

    @field_validator("rho0")
    @classmethod
    def rho0_non_positive(cls, v):
        if v != "auto" and v > 0.0:
            raise ValueError("rho0 must be non-positive")
        return v

    @field_validator("layer_gains")
    @classmethod
    def positive_gains(cls, v):
        if v is not None and any(k <= 0.0 for k in v):
            raise ValueError("layer gains must be positive")
        return v

    @model_validator(mode="after")
    def settling_before_deadline(self) -> "ControllerSection":
        if self.settling_time is not None and self.settling_time > self.deadline:
            raise ValueError("settling_time must not exceed deadline")
        return self


class SimSection(StrictModel):
    dt: float = Field(1e-3, gt=0, le=0.01, description="s")
    t_final: float = Field(20.0, ge=0, description="s")
    log_stride: int = Field(1, ge=1)
    monitors: List[Monitor] = Field(default_factory=lambda: list(Monitor))
    deadlock_tolerance: float = Field(1e-6, gt=0)
    deadlock_window: float = Field(1.0, gt=0, description="s")
    sustain_window: float = Field(1.0, gt=0, description="s")


class InitialSection(StrictModel):
    x: List[float] = Field(..., min_length=1, description="stacked measured state (x1, ..., xr)")


class PlotSection(StrictModel):
    box: Optional[List[Tuple[float, float]]] = None
    snapshots: Optional[List[float]] = None
    grid_points: int = Field(120, ge=10)


class DiagnosticsSection(StrictModel):
    search_box: Optional[List[Tuple[float, float]]] = None
    grid_points_per_axis: int = Field(41, ge=2)


class ScenarioFile(StrictModel):
    name: str
    description: str = ""
    plant: PlantSection
    hard: List[PrimitiveSpec]
    soft: List[PrimitiveSpec]
    controller: ControllerSection = Field(default_factory=ControllerSection)
    sim: SimSection = Field(default_factory=SimSection)
    initial: InitialSection
    plot: PlotSection = Field(default_factory=PlotSection)
    diagnostics: DiagnosticsSection = Field(default_factory=DiagnosticsSection)

    @field_validator("hard")
    @classmethod
    def at_least_one_hard(cls, v):
        if not v:
            raise ValueError("at least one hard constraint is required (m_h >= 1)")
        return v

    @field_validator("soft")
    @classmethod
    def at_least_one_soft(cls, v):
        if not v:
            raise ValueError("at least one soft constraint is required (m_s >= 1)")
        return v

    @model_validator(mode="after")
    def cross_references(self) -> "ScenarioFile":
        n, r = self.plant.n, self.plant.r
        if len(self.initial.x) != n * r:
            raise ValueError(f"initial.x must have n*r={n * r} entries, got {len(self.initial.x)}")
        for family, specs in (("hard", self.hard), ("soft", self.soft)):
            for spec in specs:
                dim = primitive_dimension(spec)
                if dim is not None and dim != n:
                    raise ValueError(f"{family} primitive {spec.kind!r} acts on {dim} dimensions, plant has n={n}")
        if self.controller.layer_gains is not None and len(self.controller.layer_gains) != r - 1:
            raise ValueError(f"controller.layer_gains needs r-1={r - 1} entries")
        if self.controller.funnels is not None and len(self.controller.funnels) != r - 1:
            raise ValueError(f"controller.funnels needs r-1={r - 1} entries")
        for section, box in (("plot.box", self.plot.box), ("diagnostics.search_box", self.diagnostics.search_box)):
            if box is not None and len(box) != n:
                raise ValueError(f"{section} needs one (low, high) pair per dimension")
        return self
