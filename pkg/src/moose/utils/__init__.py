"""Utility modules for MOOSE.

``moose.utils.config`` is imported directly; it depends on the model, data and
training packages, which themselves import the helpers below.
"""

from .helpers import (
    SimpleTimer,
    format_error_message,
    validate_choice,
    validate_positive,
    validate_range,
)
from .logger import attach_run_log, detach_run_log, get_logger, setup_logger

__all__ = [
    "SimpleTimer",
    "attach_run_log",
    "detach_run_log",
    "format_error_message",
    "get_logger",
    "setup_logger",
    "validate_choice",
    "validate_positive",
    "validate_range",
]
