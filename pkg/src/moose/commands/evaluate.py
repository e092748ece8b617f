"""Eval command: replay a checkpoint on one split."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..reports import ConsoleReporter
from ..training import EvalResult, evaluate
from ..utils.config import RunConfig
from ..utils.helpers import format_error_message
from .common import default_checkpoint, load_dataset, load_model


@dataclass
class EvalCommandResult:
    """Result of eval command execution."""

    success: bool
    result: Optional[EvalResult] = None
    report: str = ""
    error: Optional[str] = None


class EvalCommand:
    """Command that scores a saved model on a dataset split."""

    def __init__(self, config: RunConfig, logger: logging.Logger) -> None:
        self.config = config
        self.logger = logger

    def execute(self, checkpoint: Optional[Path] = None, split: str = "test") -> EvalCommandResult:
        """
        Execute eval command.

        The dataset is rebuilt from the run settings stored with the checkpoint so
        the scored clips are the ones the model was trained against.
        """
        path = Path(checkpoint) if checkpoint is not None else default_checkpoint(self.config)
        try:
            model, run_config, _ = load_model(path, self.config, self.logger)
            dataset = load_dataset(run_config, self.logger)
            clips = dataset.split(split)
            self.logger.info(f"Evaluating on {len(clips)} {split} clips")
            result = evaluate(model, clips, class_names=run_config.class_names)
            report = ConsoleReporter().evaluation_report(result, split, path)
            return EvalCommandResult(success=True, result=result, report=report)

        except Exception as e:
            self.logger.error(format_error_message(e, "Evaluation failed"))
            return EvalCommandResult(success=False, error=str(e))
