"""
Exception hierarchy and error reporting for the controller toolkit
"""

from typing import Any, Dict, Optional

import structlog
from pydantic import ValidationError

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BREACH = 2


class HSControlError(Exception):
    """Base exception for the toolkit"""

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_CONFIG,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.error_code = error_code
        self.details = details or {}
        super().__init__(self.message)


class ConfigError(HSControlError):
    """Raised when a runtime object is built from inconsistent parameters"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_CONFIG,
            error_code="CONFIG_ERROR",
            details=details,
        )


class ParseError(HSControlError):
    """Raised when a scenario file is not syntactically valid"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(
            message=f"{message}{location}",
            exit_code=EXIT_CONFIG,
            error_code="PARSE_ERROR",
            details={"line": line, "column": column},
        )


class SchemaError(HSControlError):
    """Raised when a scenario file is well-formed but violates the schema"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(
            message=f"{field}: {message}",
            exit_code=EXIT_CONFIG,
            error_code="SCHEMA_ERROR",
            details={"field": field},
        )


class NumericalError(HSControlError):
    """Raised when a computation receives or produces non-finite values"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_BREACH,
            error_code="NUMERICAL_ERROR",
            details=details,
        )


class BarrierBreach(HSControlError):
    """Raised when the consolidated hard constraint is no longer positive"""

    def __init__(self, alpha_h: float, t: Optional[float] = None):
        self.alpha_h = alpha_h
        self.t = t
        self.layer = 1
        super().__init__(
            message=f"hard barrier breached: alpha_h={alpha_h:.6g}",
            exit_code=EXIT_BREACH,
            error_code="BARRIER_BREACH",
            details={"alpha_h": alpha_h, "t": t, "layer": 1},
        )


class SoftBarrierBreach(HSControlError):
    """Raised when the virtual soft-set margin e_s is no longer positive"""

    def __init__(self, e_s: float, t: Optional[float] = None):
        self.e_s = e_s
        self.t = t
        self.layer = 1
        super().__init__(
            message=f"soft barrier breached: e_s={e_s:.6g}",
            exit_code=EXIT_BREACH,
            error_code="SOFT_BARRIER_BREACH",
            details={"e_s": e_s, "t": t, "layer": 1},
        )


class FunnelBreach(HSControlError):
    """Raised when a normalized layer error leaves (-1, 1)"""

    def __init__(
        self,
        layer: Optional[int],
        component: Optional[int],
        ehat: float,
        t: Optional[float] = None,
    ):
        self.layer = layer
        self.component = component
        self.ehat = ehat
        self.t = t
        where = f"layer {layer}" if layer is not None else "transform"
        if component is not None:
            where += f", component {component}"
        super().__init__(
            message=f"funnel breached at {where}: |ehat|={abs(ehat):.6g} >= 1",
            exit_code=EXIT_BREACH,
            error_code="FUNNEL_BREACH",
            details={"layer": layer, "component": component, "ehat": ehat, "t": t},
        )


def schema_error_from_validation(exc: ValidationError) -> SchemaError:
    """Convert a pydantic validation error into a SchemaError naming the field"""
    errors = exc.errors()
    if not errors:
        return SchemaError("<root>", str(exc))
    first = errors[0]
    field = ".".join(str(loc) for loc in first["loc"]) or "<root>"
    message = first["msg"]
    # pydantic prefixes messages raised from validators
    if message.startswith("Value error, "):
        message = message[len("Value error, "):]
    return SchemaError(field, message)


def report_error(exception: HSControlError, run_id: Optional[str] = None) -> int:
    """Log a toolkit error and return the process exit code it maps to"""
    logger.error(
        "hsctrl error",
        error_code=exception.error_code,
        message=exception.message,
        exit_code=exception.exit_code,
        details=exception.details,
        run_id=run_id,
    )
    return exception.exit_code
