"""Viz command: attention heatmap overlays for one clip."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..utils.config import RunConfig
from ..utils.helpers import format_error_message
from ..viz import VizExport, export_clip
from .common import load_dataset, load_model


@dataclass
class VizResult:
    """Result of viz command execution."""

    success: bool
    export: Optional[VizExport] = None
    error: Optional[str] = None


class VizCommand:
    """Command that renders both attention heatmaps for every frame of a clip."""

    def __init__(self, config: RunConfig, logger: logging.Logger) -> None:
        self.config = config
        self.logger = logger

    def execute(
        self,
        clip_id: str,
        checkpoint: Optional[Path] = None,
        out_dir: Optional[Path] = None,
    ) -> VizResult:
        """
        Execute viz command.

        Args:
            clip_id: Dataset clip to visualize
            checkpoint: Trained model (an untrained model from the config when omitted)
            out_dir: Image root (defaults to ``<out_dir>/viz``)

        Returns:
            VizResult describing the written images
        """
        target = Path(out_dir) if out_dir is not None else self.config.out_dir / "viz"
        try:
            model, run_config, _ = load_model(checkpoint, self.config, self.logger)
            clip = load_dataset(run_config, self.logger).find(clip_id)
            export = export_clip(model, clip, target, logger=self.logger)
            return VizResult(success=True, export=export)

        except Exception as e:
            self.logger.error(format_error_message(e, "Visualization failed"))
            return VizResult(success=False, error=str(e))
