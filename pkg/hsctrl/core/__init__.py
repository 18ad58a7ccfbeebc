# Core configuration and utilities
from .config import settings
from .exceptions import (
    BarrierBreach,
    ConfigError,
    FunnelBreach,
    HSControlError,
    NumericalError,
    ParseError,
    SchemaError,
    SoftBarrierBreach,
)

__all__ = [
    "settings",
    "HSControlError",
    "ConfigError",
    "ParseError",
    "SchemaError",
    "NumericalError",
    "BarrierBreach",
    "SoftBarrierBreach",
    "FunnelBreach",
]
