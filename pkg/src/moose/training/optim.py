"""SGD with momentum and weight decay under a cosine-annealed learning rate."""

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from ..core import Tensor
from ..utils.helpers import validate_positive, validate_range


class TrainingHaltedError(RuntimeError):
    """Exception raised when an update would propagate non-finite values."""

    pass


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, schedule and stopping settings."""

    lr_max: float = 0.005
    lr_min: float = 0.0
    epochs: int = 100
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 8
    patience: int = 10
    augment_flip: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        """Simple validation after initialization."""
        validate_range(self.lr_min, "lr_min", low=0.0)
        validate_range(self.lr_max, "lr_max", low=0.0)
        if self.lr_max <= self.lr_min:
            raise ValueError(f"lr_max ({self.lr_max}) must exceed lr_min ({self.lr_min})")
        validate_positive(self.epochs, "epochs")
        validate_range(self.momentum, "momentum", low=0.0, high=1.0, high_inclusive=False)
        validate_range(self.weight_decay, "weight_decay", low=0.0)
        validate_positive(self.batch_size, "batch_size")
        validate_positive(self.patience, "patience", allow_zero=True)


@dataclass
class SgdState:
    """Momentum buffers keyed by parameter name."""

    momentum: Dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0


def cosine_lr(t: float, cfg: TrainConfig) -> float:
    """
    Cosine annealing from ``lr_max`` at ``t = 0`` down to ``lr_min`` at ``t = epochs``.

    The trainer steps once per epoch with ``t = epoch - 1``: epoch 1 trains at
    ``lr_max`` and the final epoch at ``cosine_lr(epochs - 1)``, one step short of
    ``lr_min``.
    """
    if t < 0 or t > cfg.epochs:
        raise ValueError(f"schedule step {t} outside [0, {cfg.epochs}]")
    cosine = 1.0 + math.cos(math.pi * t / cfg.epochs)
    return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * cosine


def sgd_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: SgdState,
    lr: float,
    cfg: TrainConfig,
    decay: Optional[Mapping[str, bool]] = None,
) -> SgdState:
    """
    One in-place update: ``m <- momentum * m + (g + wd * w)``, ``w <- w - lr * m``.

    Args:
        params: Named parameters, updated in place
        grads: Gradient per parameter name
        state: Momentum buffers, updated in place
        lr: Learning rate for this step
        cfg: Momentum and weight decay
        decay: Per-name switch for weight decay (all decayed when omitted)

    Returns:
        The updated state

    Raises:
        TrainingHaltedError: If any gradient is NaN or infinite
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise TrainingHaltedError(f"non-finite gradient for parameter {name}")

    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        step = np.asarray(grad, dtype=np.float64).reshape(param.shape)
        if cfg.weight_decay > 0 and (decay is None or decay.get(name, True)):
            step = step + cfg.weight_decay * param.data
        buffer = state.momentum.get(name)
        buffer = step if buffer is None else cfg.momentum * buffer + step
        state.momentum[name] = buffer
        param.data[...] = param.data - lr * buffer

    state.steps += 1
    return state
