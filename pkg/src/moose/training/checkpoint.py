"""Checkpoint directories: one tensor file per parameter plus a YAML manifest."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import yaml

from ..data.tensor_file import SUFFIX, TensorFileError, read_tensor, write_tensor
from ..models import ModelConfigError, MooseConfig, MooseModel

MANIFEST_NAME = "manifest.yml"
PARAMS_DIR = "params"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Exception raised for missing or inconsistent checkpoints."""

    pass


@dataclass
class Checkpoint:
    """Parameter values and the manifest they were saved with."""

    state: Dict[str, np.ndarray]
    model_config: MooseConfig
    run_config: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def build_model(self, logger: Optional[logging.Logger] = None) -> MooseModel:
        model = MooseModel(self.model_config, logger)
        try:
            model.load_state(self.state)
        except ModelConfigError as e:
            raise CheckpointError(str(e)) from e
        return model


def save_checkpoint(
    directory: Path,
    model: MooseModel,
    run_config: Optional[Dict[str, Any]] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write ``params/<name>.mtsr`` for every parameter and ``manifest.yml``."""
    directory = Path(directory)
    params_dir = directory / PARAMS_DIR
    params_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for name, tensor in model.parameters().items():
        write_tensor(params_dir / f"{name}{SUFFIX}", tensor)
        names.append(name)

    manifest = {
        "format": FORMAT_VERSION,
        "model": model.config.to_dict(),
        "run": dict(run_config or {}),
        "metadata": dict(metadata or {}),
        "parameters": names,
    }
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, sort_keys=False)
    return directory


def load_checkpoint(directory: Path) -> Checkpoint:
    """Read a checkpoint written by :func:`save_checkpoint`."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise CheckpointError(f"Checkpoint manifest not found: {manifest_path}")

    with open(manifest_path, "r", encoding="utf-8") as f:
        try:
            manifest = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise CheckpointError(f"Invalid checkpoint manifest {manifest_path}: {e}") from e

    if manifest.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint format {manifest.get('format')!r}")

    try:
        model_config = MooseConfig.from_dict(manifest.get("model", {}))
    except ValueError as e:
        raise CheckpointError(f"Invalid model settings in {manifest_path}: {e}") from e

    state: Dict[str, np.ndarray] = {}
    for name in manifest.get("parameters", []):
        path = directory / PARAMS_DIR / f"{name}{SUFFIX}"
        try:
            state[name] = read_tensor(path).data
        except FileNotFoundError as e:
            raise CheckpointError(f"Checkpoint is missing parameter file {path}") from e
        except TensorFileError as e:
            raise CheckpointError(f"Corrupt parameter file {path}: {e}") from e

    return Checkpoint(
        state=state,
        model_config=model_config,
        run_config=manifest.get("run", {}),
        metadata=manifest.get("metadata", {}),
    )
