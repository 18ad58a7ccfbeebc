# Constraint math: time signals, primitives, consolidation and switches
from .constraints import (
    AuxiliaryCoercive,
    ConsolidatedConstraint,
    ConstraintClass,
    ConstraintPrimitive,
    DiskExterior,
    DiskInterior,
    EllipseExterior,
    FiniteDifferencePrimitive,
    Halfspace,
    PowerWrapped,
    TanhWrapped,
    consolidate,
)
from .signals import SignalKind, TimeSignal
from .switch import SwitchFunction, eval_switch, make_switch

__all__ = [
    "AuxiliaryCoercive",
    "ConsolidatedConstraint",
    "ConstraintClass",
    "ConstraintPrimitive",
    "DiskExterior",
    "DiskInterior",
    "EllipseExterior",
    "FiniteDifferencePrimitive",
    "Halfspace",
    "PowerWrapped",
    "TanhWrapped",
    "consolidate",
    "SignalKind",
    "TimeSignal",
    "SwitchFunction",
    "eval_switch",
    "make_switch",
]
