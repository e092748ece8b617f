"""Dataset and model resolution shared by the commands."""

import logging
from pathlib import Path
from typing import Optional, Tuple

from ..data import SyntheticDataset, load_or_generate
from ..models import MooseModel
from ..training import BEST_DIR, Checkpoint, load_checkpoint
from ..utils.config import RunConfig


def load_dataset(config: RunConfig, logger: logging.Logger) -> SyntheticDataset:
    """The dataset stored under ``data_dir``, or the same one generated in memory."""
    return load_or_generate(
        config.data_dir,
        config.synthetic_spec(),
        config.clips_per_class,
        config.seed,
        logger,
    )


def default_checkpoint(config: RunConfig) -> Path:
    return config.out_dir / BEST_DIR


def load_model(
    checkpoint: Optional[Path], config: RunConfig, logger: logging.Logger
) -> Tuple[MooseModel, RunConfig, Optional[Checkpoint]]:
    """
    Rebuild the model saved in ``checkpoint`` with the run settings it was trained with.

    Without a checkpoint the model is freshly initialized from ``config``.
    """
    if checkpoint is None:
        return MooseModel(config.moose_config(), logger), config, None

    saved = load_checkpoint(checkpoint)
    run_config = RunConfig(saved.run_config) if saved.run_config else config
    model = saved.build_model(logger)
    logger.info(f"Loaded checkpoint {checkpoint} ({model.num_parameters()} parameters)")
    return model, run_config, saved
