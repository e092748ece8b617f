"""Logging for MOOSE: console output on stderr plus an optional per-run log file."""

import logging
import sys
from pathlib import Path
from typing import Optional

PACKAGE_LOGGER = "moose"
RUN_LOG_NAME = "train.log"

VERBOSE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
CONSOLE_FORMAT = "%(levelname)s: %(message)s"
FILE_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _console_formatter(verbose: bool) -> logging.Formatter:
    if verbose:
        return logging.Formatter(VERBOSE_FORMAT, datefmt=DATE_FORMAT)
    return logging.Formatter(CONSOLE_FORMAT)


def setup_logger(name: str = PACKAGE_LOGGER, verbose: bool = False) -> logging.Logger:
    """
    Send ``name`` to stderr, at DEBUG when ``verbose`` and INFO otherwise.

    Module loggers (``moose.flow.cache`` and friends) propagate to the package
    logger, so it gets the same handler when ``name`` is a child. A logger that
    already has handlers is returned unchanged.
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    level = logging.DEBUG if verbose else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(_console_formatter(verbose))

    targets = [logger]
    package = logging.getLogger(PACKAGE_LOGGER)
    if package is not logger and not package.handlers:
        targets.append(package)
    for target in targets:
        target.setLevel(level)
        target.addHandler(handler)
        target.propagate = False
    return logger


def attach_run_log(logger: logging.Logger, run_dir: Path) -> logging.FileHandler:
    """Mirror ``logger`` into ``<run_dir>/train.log``, replacing an older file."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(run_dir / RUN_LOG_NAME, mode="w", encoding="utf-8")
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
    logger.addHandler(handler)
    return handler


def detach_run_log(logger: logging.Logger, handler: logging.Handler) -> None:
    logger.removeHandler(handler)
    handler.close()


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """The package logger, or one of its ``moose.*`` children."""
    return logging.getLogger(name or PACKAGE_LOGGER)
