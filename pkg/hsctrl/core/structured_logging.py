"""
Structured logging configuration for the controller toolkit
"""

import sys
import time
from typing import Any, Dict, Optional

# Import standard library logging first to avoid circular import
import logging as stdlib_logging

import structlog
from structlog.stdlib import LoggerFactory


def configure_logging(level: Optional[str] = None, json_lines: Optional[bool] = None) -> None:
    """Configure structured logging for the process"""
    from hsctrl.core.config import settings

    level = (level or settings.log_level).upper()
    json_lines = settings.LOG_JSON if json_lines is None else json_lines

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer() if json_lines else structlog.dev.ConsoleRenderer(),
        ],
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    stdlib_logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(stdlib_logging, level),
    )

    # Reduce noise from third-party libraries
    stdlib_logging.getLogger("matplotlib").setLevel(stdlib_logging.WARNING)


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a structured logger instance"""
    return structlog.get_logger(name)


class RunLogger:
    """Context manager logging the start, end and failure of one simulation run"""

    def __init__(self, logger: structlog.stdlib.BoundLogger, run_id: str, **context: Any):
        self.logger = logger
        self.run_id = run_id
        self.context = context
        self.start_time: Optional[float] = None

    def __enter__(self) -> "RunLogger":
        self.start_time = time.perf_counter()
        self.logger.info("Run started", run_id=self.run_id, **self.context)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        duration = time.perf_counter() - (self.start_time or time.perf_counter())
        if exc_type:
            self.logger.error(
                "Run failed",
                run_id=self.run_id,
                duration=duration,
                error_type=exc_type.__name__,
                error_message=str(exc_val),
            )
        else:
            self.logger.info("Run completed", run_id=self.run_id, duration=duration)


def log_error(error: Exception, context: Optional[Dict[str, Any]] = None) -> None:
    """Log errors with structured context"""
    logger = get_logger("hsctrl.error")

    error_info = {
        "error_type": type(error).__name__,
        "error_message": str(error),
        "context": context or {},
    }

    logger.error("Application error", **error_info)
