# Scenario file schema and shared enums
from .enums import BarrierKind, ControlMode, DisturbanceKind, Monitor, TransformKind
from .scenario import ScenarioFile

__all__ = [
    "BarrierKind",
    "ControlMode",
    "DisturbanceKind",
    "Monitor",
    "TransformKind",
    "ScenarioFile",
]
