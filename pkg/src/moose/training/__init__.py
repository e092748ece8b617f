"""Optimization, metrics, checkpoints and the training loop."""

from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .metrics import MetricError, cross_entropy, per_class_accuracy, topk_accuracy, topk_hits
from .optim import SgdState, TrainConfig, TrainingHaltedError, cosine_lr, sgd_step
from .trainer import (
    BEST_DIR,
    LAST_DIR,
    METRIC_FIELDS,
    METRICS_NAME,
    EvalResult,
    MetricRecord,
    Trainer,
    TrainResult,
    evaluate,
    train,
)

__all__ = [
    "BEST_DIR",
    "LAST_DIR",
    "METRIC_FIELDS",
    "METRICS_NAME",
    "Checkpoint",
    "CheckpointError",
    "EvalResult",
    "MetricError",
    "MetricRecord",
    "SgdState",
    "TrainConfig",
    "TrainResult",
    "Trainer",
    "TrainingHaltedError",
    "cosine_lr",
    "cross_entropy",
    "evaluate",
    "load_checkpoint",
    "per_class_accuracy",
    "save_checkpoint",
    "sgd_step",
    "topk_accuracy",
    "topk_hits",
    "train",
]
