"""Flops command: parameter and multiply-accumulate accounting for a config."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

from ..models import mac_breakdown, param_breakdown
from ..reports import ConsoleReporter
from ..utils.config import RunConfig
from ..utils.helpers import format_error_message


@dataclass
class FlopsResult:
    """Result of flops command execution."""

    success: bool
    params: int = 0
    macs: int = 0
    param_breakdown: Dict[str, int] = field(default_factory=dict)
    mac_breakdown: Dict[str, int] = field(default_factory=dict)
    report: str = ""
    error: Optional[str] = None


class FlopsCommand:
    """Command that counts parameters and MACs without building the model."""

    def __init__(self, config: RunConfig, logger: logging.Logger) -> None:
        self.config = config
        self.logger = logger

    def execute(self) -> FlopsResult:
        try:
            model_config = self.config.moose_config()
            params = param_breakdown(model_config)
            macs = mac_breakdown(model_config)
            report = ConsoleReporter().accounting_report(params, macs)
            return FlopsResult(
                success=True,
                params=sum(params.values()),
                macs=sum(macs.values()),
                param_breakdown=dict(params),
                mac_breakdown=dict(macs),
                report=report,
            )

        except Exception as e:
            self.logger.error(format_error_message(e, "Accounting failed"))
            return FlopsResult(success=False, error=str(e))
