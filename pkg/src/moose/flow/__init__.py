"""Dense optical-flow estimation feeding the temporal pathway."""

from .cache import FlowCache
from .horn_schunck import (
    LUMA_WEIGHTS,
    STENCIL_MACS,
    FlowError,
    FlowField,
    FlowParams,
    FlowSolution,
    HornSchunckSolver,
    clip_flow,
    estimate_flow,
    flow_energy,
    image_derivatives,
    to_luminance,
)

__all__ = [
    "LUMA_WEIGHTS",
    "STENCIL_MACS",
    "FlowCache",
    "FlowError",
    "FlowField",
    "FlowParams",
    "FlowSolution",
    "HornSchunckSolver",
    "clip_flow",
    "estimate_flow",
    "flow_energy",
    "image_derivatives",
    "to_luminance",
]
