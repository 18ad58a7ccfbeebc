"""
Scalar time signals with analytic derivatives.

A TimeSignal is an immutable expression tree over a handful of kinds
(constants, ramps, sinusoids and their sums, products, scalings and
exponentials). Every node evaluates both its value and its exact time
derivative, which is what the constraint primitives need for their
partial time derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union


class SignalKind(str, Enum):
    """Kinds of time signal nodes"""
    CONSTANT = "constant"
    LINEAR = "linear"
    SINE = "sine"
    COSINE = "cosine"
    SUM = "sum"
    PRODUCT = "product"
    SCALED = "scaled"
    EXP = "exp"


SignalLike = Union["TimeSignal", float, int]


@dataclass(frozen=True)
class TimeSignal:
    """
    One node of a time signal expression.

    Leaf kinds use the numeric parameters:

    - constant: ``offset``
    - linear: ``amplitude * t + offset``
    - sine: ``amplitude * sin(frequency * t + phase) + offset``
    - cosine: ``amplitude * cos(frequency * t + phase) + offset``

    Composite kinds use ``children`` (sum, product, exp) and ``amplitude``
    as the factor of ``scaled``. Frequencies are in rad/s, phases in rad.
    """

    kind: SignalKind
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    offset: float = 0.0
    children: Tuple["TimeSignal", ...] = ()

    # Constructors

    @classmethod
    def constant(cls, value: float) -> "TimeSignal":
        return cls(SignalKind.CONSTANT, offset=float(value))

    @classmethod
    def linear(cls, slope: float, offset: float = 0.0) -> "TimeSignal":
        return cls(SignalKind.LINEAR, amplitude=float(slope), offset=float(offset))

    @classmethod
    def sine(
        cls, amplitude: float, frequency: float, phase: float = 0.0, offset: float = 0.0
    ) -> "TimeSignal":
        return cls(
            SignalKind.SINE,
            amplitude=float(amplitude),
            frequency=float(frequency),
            phase=float(phase),
            offset=float(offset),
        )

    @classmethod
    def cosine(
        cls, amplitude: float, frequency: float, phase: float = 0.0, offset: float = 0.0
    ) -> "TimeSignal":
        return cls(
            SignalKind.COSINE,
            amplitude=float(amplitude),
            frequency=float(frequency),
            phase=float(phase),
            offset=float(offset),
        )

    @classmethod
    def sum(cls, *terms: SignalLike) -> "TimeSignal":
        if not terms:
            return cls.constant(0.0)
        return cls(SignalKind.SUM, children=tuple(as_signal(term) for term in terms))

    @classmethod
    def product(cls, *factors: SignalLike) -> "TimeSignal":
        if not factors:
            return cls.constant(1.0)
        return cls(SignalKind.PRODUCT, children=tuple(as_signal(f) for f in factors))

    @classmethod
    def scaled(cls, factor: float, signal: SignalLike) -> "TimeSignal":
        return cls(SignalKind.SCALED, amplitude=float(factor), children=(as_signal(signal),))

    @classmethod
    def exp(cls, signal: SignalLike) -> "TimeSignal":
        return cls(SignalKind.EXP, children=(as_signal(signal),))

    def __post_init__(self) -> None:
        arity = len(self.children)
        if self.kind in (SignalKind.SCALED, SignalKind.EXP) and arity != 1:
            raise ValueError(f"{self.kind.value} signal takes exactly one child, got {arity}")
        if self.kind in (SignalKind.SUM, SignalKind.PRODUCT) and arity == 0:
            raise ValueError(f"{self.kind.value} signal needs at least one child")

    # Operators, so presets read like the formulas they encode

    def __add__(self, other: SignalLike) -> "TimeSignal":
        return TimeSignal.sum(self, other)

    __radd__ = __add__

    def __mul__(self, other: SignalLike) -> "TimeSignal":
        if isinstance(other, (int, float)):
            return TimeSignal.scaled(other, self)
        return TimeSignal.product(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "TimeSignal":
        return TimeSignal.scaled(-1.0, self)

    def __sub__(self, other: SignalLike) -> "TimeSignal":
        return TimeSignal.sum(self, -as_signal(other))

    # Evaluation

    @property
    def is_constant(self) -> bool:
        """True when the derivative is identically zero"""
        if self.kind == SignalKind.CONSTANT:
            return True
        if self.kind == SignalKind.LINEAR:
            return self.amplitude == 0.0
        if self.kind in (SignalKind.SINE, SignalKind.COSINE):
            return self.amplitude == 0.0 or self.frequency == 0.0
        if self.kind == SignalKind.SCALED:
            return self.amplitude == 0.0 or self.children[0].is_constant
        return all(child.is_constant for child in self.children)

    def value(self, t: float) -> float:
        kind = self.kind
        if kind == SignalKind.CONSTANT:
            return self.offset
        if kind == SignalKind.LINEAR:
            return self.amplitude * t + self.offset
        if kind == SignalKind.SINE:
            return self.amplitude * math.sin(self.frequency * t + self.phase) + self.offset
        if kind == SignalKind.COSINE:
            return self.amplitude * math.cos(self.frequency * t + self.phase) + self.offset
        if kind == SignalKind.SUM:
            return math.fsum(child.value(t) for child in self.children)
        if kind == SignalKind.PRODUCT:
            return math.prod(child.value(t) for child in self.children)
        if kind == SignalKind.SCALED:
            return self.amplitude * self.children[0].value(t)
        return math.exp(self.children[0].value(t))

    def derivative(self, t: float) -> float:
        kind = self.kind
        if kind == SignalKind.CONSTANT:
            return 0.0
        if kind == SignalKind.LINEAR:
            return self.amplitude
        if kind == SignalKind.SINE:
            return self.amplitude * self.frequency * math.cos(self.frequency * t + self.phase)
        if kind == SignalKind.COSINE:
            return -self.amplitude * self.frequency * math.sin(self.frequency * t + self.phase)
        if kind == SignalKind.SUM:
            return math.fsum(child.derivative(t) for child in self.children)
        if kind == SignalKind.PRODUCT:
            values = [child.value(t) for child in self.children]
            total = 0.0
            for k, child in enumerate(self.children):
                others = math.prod(values[:k]) * math.prod(values[k + 1:])
                total += child.derivative(t) * others
            return total
        if kind == SignalKind.SCALED:
            return self.amplitude * self.children[0].derivative(t)
        inner = self.children[0]
        return math.exp(inner.value(t)) * inner.derivative(t)

    def evaluate(self, t: float) -> Tuple[float, float]:
        """Value and derivative at ``t``"""
        return self.value(t), self.derivative(t)


def as_signal(value: SignalLike) -> TimeSignal:
    """Promote plain numbers to constant signals"""
    if isinstance(value, TimeSignal):
        return value
    return TimeSignal.constant(float(value))
