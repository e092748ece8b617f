"""Train command: fit a model and keep its checkpoints and metric log."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..models import MooseModel
from ..reports import ConsoleReporter
from ..training import Trainer, TrainResult
from ..utils.config import RunConfig
from ..utils.helpers import format_error_message
from ..utils.logger import attach_run_log, detach_run_log
from .common import load_dataset


@dataclass
class TrainCommandResult:
    """Result of train command execution."""

    success: bool
    result: Optional[TrainResult] = None
    report: str = ""
    error: Optional[str] = None


class TrainCommand:
    """Command for training MOOSE on the synthetic dataset."""

    def __init__(self, config: RunConfig, logger: logging.Logger) -> None:
        self.config = config
        self.logger = logger

    def execute(self, out_dir: Optional[Path] = None) -> TrainCommandResult:
        """
        Execute train command.

        Args:
            out_dir: Run directory for checkpoints and ``metrics.csv``
                (defaults to the configured ``out_dir``)

        Returns:
            TrainCommandResult with the training outcome and rendered report
        """
        target = Path(out_dir) if out_dir is not None else self.config.out_dir
        run_log: Optional[logging.FileHandler] = None
        try:
            run_log = attach_run_log(self.logger, target)
            model_config = self.config.moose_config()
            train_config = self.config.train_config()
            dataset = load_dataset(self.config, self.logger)

            model = MooseModel(model_config, self.logger)
            self.logger.info(
                f"Training {model_config.fusion.value}/{model_config.aggregation.value} model "
                f"({model.num_parameters()} parameters) into {target}"
            )
            trainer = Trainer(
                model,
                train_config,
                logger=self.logger,
                out_dir=target,
                run_config=self.config.to_dict(),
            )
            result = trainer.train(dataset)

            report = ConsoleReporter().training_report(
                result, model_config, model.num_parameters()
            )
            return TrainCommandResult(success=True, result=result, report=report)

        except Exception as e:
            self.logger.error(format_error_message(e, "Training failed"))
            return TrainCommandResult(success=False, error=str(e))

        finally:
            if run_log is not None:
                detach_run_log(self.logger, run_log)
