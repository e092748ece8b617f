"""Tests for validation helpers, timing and logger setup."""

import logging

import pytest

from moose.utils import (
    SimpleTimer,
    attach_run_log,
    detach_run_log,
    format_error_message,
    get_logger,
    setup_logger,
    validate_choice,
    validate_positive,
    validate_range,
)
from moose.utils.logger import RUN_LOG_NAME


class TestValidation:
    def test_positive(self):
        assert validate_positive(3, "epochs") == 3
        assert validate_positive(0, "patience", allow_zero=True) == 0

    @pytest.mark.parametrize("value", [0, -1, 2.0, True, "3"])
    def test_positive_rejects(self, value):
        with pytest.raises(ValueError, match="epochs"):
            validate_positive(value, "epochs")

    def test_range(self):
        assert validate_range(0.5, "alpha", 0.0, 1.0) == 0.5
        assert validate_range(1, "alpha", 0.0, 1.0) == 1.0
        with pytest.raises(ValueError, match="momentum"):
            validate_range(1.0, "momentum", 0.0, 1.0, high_inclusive=False)
        with pytest.raises(ValueError, match="NaN"):
            validate_range(float("nan"), "lr")
        with pytest.raises(ValueError):
            validate_range(-0.1, "lr", low=0.0)

    def test_choice(self):
        assert validate_choice("zeroed", "flow_input", ("estimated", "zeroed")) == "zeroed"
        with pytest.raises(ValueError, match="flow_input"):
            validate_choice("none", "flow_input", ("estimated", "zeroed"))


def test_format_error_message():
    error = ValueError("bad shape")
    assert format_error_message(error) == "ValueError: bad shape"
    expected = "Training failed: ValueError: bad shape"
    assert format_error_message(error, "Training failed") == expected


def test_simple_timer_logs_duration(mocker):
    logger = mocker.Mock(spec=logging.Logger)
    with SimpleTimer("Epoch 1", logger) as timer:
        pass
    assert timer.duration >= 0.0
    message = logger.debug.call_args[0][0]
    assert message.startswith("Epoch 1 completed in")


class TestLogger:
    @pytest.fixture(autouse=True)
    def clean(self):
        names = ("moose", "moose.test")
        for name in names:
            logging.getLogger(name).handlers.clear()
        yield
        for name in names:
            logging.getLogger(name).handlers.clear()

    def test_setup_is_idempotent(self):
        logger = setup_logger()
        assert setup_logger() is logger
        assert len(logger.handlers) == 1
        assert logger.level == logging.INFO
        assert get_logger() is logger

    def test_verbose_enables_debug(self):
        assert setup_logger(verbose=True).level == logging.DEBUG

    def test_child_logger_routes_package_logs(self):
        setup_logger("moose.test")
        assert logging.getLogger("moose").handlers
        assert get_logger("moose.test").handlers

    def test_run_log_mirrors_records(self, tmp_path):
        logger = setup_logger()
        handler = attach_run_log(logger, tmp_path / "run")
        logger.info("Epoch 1: loss 0.5")
        detach_run_log(logger, handler)
        logger.info("after detach")
        text = (tmp_path / "run" / RUN_LOG_NAME).read_text()
        assert "INFO moose: Epoch 1: loss 0.5" in text
        assert "after detach" not in text
        assert handler not in logger.handlers
