"""Simple utility helpers for validation, timing and error formatting."""

import logging
import time
from typing import Any, Optional, Sequence


def validate_positive(value: Any, field_name: str, allow_zero: bool = False) -> int:
    """
    Validate a positive integer with a clear error message.

    Args:
        value: Value to validate
        field_name: Name of the field for error messages
        allow_zero: Whether zero is accepted

    Returns:
        Validated integer

    Raises:
        ValueError: If validation fails
    """
    if isinstance(value, bool) or not isinstance(value, (int,)):
        raise ValueError(f"{field_name} must be an integer, got {type(value).__name__}")

    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"{field_name} must be {bound}, got {value}")

    return int(value)


def validate_range(
    value: Any,
    field_name: str,
    low: Optional[float] = None,
    high: Optional[float] = None,
    high_inclusive: bool = True,
) -> float:
    """
    Validate a real number against optional bounds.

    Args:
        value: Value to validate
        field_name: Name of the field for error messages
        low: Inclusive lower bound (optional)
        high: Upper bound (optional)
        high_inclusive: Whether the upper bound is inclusive

    Returns:
        Validated float

    Raises:
        ValueError: If validation fails
    """
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{field_name} must be a number, got {type(value).__name__}")

    number = float(value)
    if number != number:
        raise ValueError(f"{field_name} cannot be NaN")
    if low is not None and number < low:
        raise ValueError(f"{field_name} must be >= {low}, got {number}")
    if high is not None:
        if high_inclusive and number > high:
            raise ValueError(f"{field_name} must be <= {high}, got {number}")
        if not high_inclusive and number >= high:
            raise ValueError(f"{field_name} must be < {high}, got {number}")

    return number


def validate_choice(value: Any, field_name: str, choices: Sequence[str]) -> str:
    """
    Validate that a string is one of the allowed choices.

    Raises:
        ValueError: If the value is not one of ``choices``
    """
    if value not in choices:
        options = ", ".join(choices)
        raise ValueError(f"{field_name} must be one of: {options}; got {value!r}")
    return str(value)


class SimpleTimer:
    """Simple context manager for timing operations."""

    def __init__(self, operation_name: str, logger: Optional[logging.Logger] = None):
        self.operation_name = operation_name
        self.logger = logger or logging.getLogger(__name__)
        self.start_time: Optional[float] = None
        self.duration = 0.0

    def __enter__(self) -> "SimpleTimer":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        if self.start_time is not None:
            self.duration = time.perf_counter() - self.start_time
        self.logger.debug(f"{self.operation_name} completed in {self.duration:.2f}s")


def format_error_message(error: Exception, context: str = "") -> str:
    """
    Format error message consistently.

    Args:
        error: Exception to format
        context: Additional context for the error

    Returns:
        Formatted error message
    """
    error_type = type(error).__name__
    error_msg = str(error)

    if context:
        return f"{context}: {error_type}: {error_msg}"
    else:
        return f"{error_type}: {error_msg}"
