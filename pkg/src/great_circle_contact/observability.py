"""
Logging setup and lightweight tracing helpers.

structlog is configured once per process; the tracing helpers keep the
decorator/span-event shape so numerical kernels can be instrumented without
caring whether anything consumes the events.
"""

import functools
import logging
import os
import sys
import time
from typing import Any, Callable, Dict, Optional

import structlog

logger = structlog.get_logger()


def setup_logging(level: Optional[str] = None, log_format: Optional[str] = None) -> None:
    """
    Configure structlog for CLI runs.

    Args:
        level: Log level name; defaults to GCC_LOG_LEVEL or WARNING
        log_format: "console" or "json"; defaults to GCC_LOG_FORMAT or console
    """
    level_name = (level or os.getenv("GCC_LOG_LEVEL", "WARNING")).upper()
    fmt = (log_format or os.getenv("GCC_LOG_FORMAT", "console")).lower()
    numeric_level = getattr(logging, level_name, logging.WARNING)

    renderer = (
        structlog.processors.JSONRenderer()
        if fmt == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )

    # stderr only, looked up per logger: stdout carries the reports
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=lambda *_: structlog.PrintLogger(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
    logger.debug("Logging configured", level=level_name, format=fmt)


def trace_function(func=None, *, name: Optional[str] = None, attributes: Optional[Dict[str, Any]] = None):
    """
    Trace a function call as a debug event with its elapsed time.

    Usable bare (@trace_function) or with arguments (@trace_function(name="x")).
    """

    def decorate(f: Callable) -> Callable:
        span_name = name or f.__qualname__
        span_attributes = dict(attributes or {})

        @functools.wraps(f)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            saved = structlog.contextvars.get_contextvars()
            structlog.contextvars.bind_contextvars(span=span_name)
            try:
                return f(*args, **kwargs)
            finally:
                logger.debug(
                    "Span finished",
                    elapsed_ms=round(1000.0 * (time.perf_counter() - start), 3),
                    **span_attributes,
                )
                # span attributes set inside the call do not leak out of it
                structlog.contextvars.clear_contextvars()
                structlog.contextvars.bind_contextvars(**saved)

        return wrapper

    if func is None:
        return decorate
    return decorate(func)


def add_span_event(name: str, attributes: Optional[dict] = None) -> None:
    """Record a named event inside the current span."""
    logger.debug(name, **(attributes or {}))


def set_span_attribute(key: str, value: Any) -> None:
    """Attach a key/value to the current span's subsequent events."""
    structlog.contextvars.bind_contextvars(**{key: value})
