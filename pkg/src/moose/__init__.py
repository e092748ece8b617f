"""
MOOSE: a video encoder over frames and their optical flow

A two-pathway video encoder that pairs every frame with its optical flow,
fuses the pathways with arrow-masked cross-attention and aggregates the
per-frame units causally into a clip embedding.
"""

__version__ = "0.1.0"

from .core import Tensor
from .data import SyntheticDataset, SyntheticSpec, VideoClip
from .flow import FlowField, FlowParams, HornSchunckSolver
from .models import MooseConfig, MooseModel, count_flops, count_params
from .training import TrainConfig, Trainer

__all__ = [
    "__version__",
    "FlowField",
    "FlowParams",
    "HornSchunckSolver",
    "MooseConfig",
    "MooseModel",
    "SyntheticDataset",
    "SyntheticSpec",
    "Tensor",
    "TrainConfig",
    "Trainer",
    "VideoClip",
    "count_flops",
    "count_params",
]
