"""Command implementations for the MOOSE CLI."""

from .evaluate import EvalCommand, EvalCommandResult
from .flops import FlopsCommand, FlopsResult
from .generate import GenerateCommand, GenerateResult
from .train import TrainCommand, TrainCommandResult
from .viz import VizCommand, VizResult

__all__ = [
    "EvalCommand",
    "EvalCommandResult",
    "FlopsCommand",
    "FlopsResult",
    "GenerateCommand",
    "GenerateResult",
    "TrainCommand",
    "TrainCommandResult",
    "VizCommand",
    "VizResult",
]
