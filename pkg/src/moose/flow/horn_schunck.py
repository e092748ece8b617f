"""Dense optical flow between consecutive frames with the Horn-Schunck method.

The solver minimizes the discrete energy

    sum_p (Ix u + Iy v + It)^2 + alpha^2 * sum_edges (du^2 + dv^2)

over the 4-neighbour pixel graph (Neumann boundaries) with block-Jacobi sweeps.
Each sweep solves every pixel's 2x2 system exactly given its neighbours, which
keeps the energy non-increasing.

Arrays follow the frame layout ``[C, W, H]``: axis -2 is horizontal (x, u) and
axis -1 is vertical (y, v).
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional, Union

import numpy as np
from scipy import ndimage

from ..core import Tensor
from ..utils.helpers import validate_positive, validate_range

if TYPE_CHECKING:
    from ..data.clip import VideoClip

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
# Multiply-accumulates per pixel per sweep: neighbour sums for u and v (8),
# the constraint residual (2) and the two updates (2).
STENCIL_MACS = 12
MIN_EXTENT = 3

_CENTRAL = np.array([-0.5, 0.0, 0.5])
_NEIGHBOURS = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])

FrameLike = Union[Tensor, np.ndarray]


class FlowError(ValueError):
    """Exception raised for invalid optical-flow inputs."""

    pass


@dataclass(frozen=True)
class FlowParams:
    """Horn-Schunck solver settings."""

    alpha: float = 1.0
    iterations: int = 100
    intensity_scale: float = 255.0

    def __post_init__(self) -> None:
        validate_range(self.alpha, "Flow alpha")
        if self.alpha <= 0:
            raise ValueError(f"Flow alpha must be > 0, got {self.alpha}")
        validate_positive(self.iterations, "Flow iterations")
        validate_range(self.intensity_scale, "Flow intensity_scale", low=0.0)


@dataclass
class FlowSolution:
    """Solver output for a stack of frame pairs."""

    flow: np.ndarray
    energies: List[np.ndarray] = field(default_factory=list)


@dataclass
class FlowField:
    """Velocity fields for every consecutive frame pair of a clip, ``[T, 2, W, H]``."""

    flows: Tensor
    source_pairs: int

    def __post_init__(self) -> None:
        shape = self.flows.shape
        if len(shape) != 4 or shape[1] != 2:
            raise FlowError(f"FlowField needs shape [T, 2, W, H], got {shape}")
        if shape[0] != self.source_pairs:
            raise FlowError(
                f"FlowField has {shape[0]} fields but source_pairs is {self.source_pairs}"
            )
        if not np.all(np.isfinite(self.flows.data)):
            raise FlowError("FlowField contains non-finite values")

    @classmethod
    def zeros(cls, pairs: int, width: int, height: int) -> "FlowField":
        return cls(flows=Tensor(np.zeros((pairs, 2, width, height))), source_pairs=pairs)

    def normalized(self) -> np.ndarray:
        """Per-clip standardization of each channel; constant channels map to zero."""
        data = self.flows.data
        mean = data.mean(axis=(0, 2, 3), keepdims=True)
        std = data.std(axis=(0, 2, 3), keepdims=True)
        centered = data - mean
        safe = np.where(std > 1e-12, std, 1.0)
        return np.where(std > 1e-12, centered / safe, 0.0)

    def flipped(self) -> "FlowField":
        """Flow of the horizontally mirrored clip: mirror x and negate u."""
        mirrored = self.flows.data[:, :, ::-1, :].copy()
        mirrored[:, 0] *= -1.0
        return FlowField(flows=Tensor(mirrored), source_pairs=self.source_pairs)


def _as_array(frame: FrameLike) -> np.ndarray:
    return frame.data if isinstance(frame, Tensor) else np.asarray(frame, dtype=np.float64)


def to_luminance(frames: np.ndarray) -> np.ndarray:
    """Collapse the channel axis (-3) of ``[..., C, W, H]`` to luminance."""
    channels = frames.shape[-3]
    if channels == 1:
        return frames[..., 0, :, :]
    if channels == 3:
        return np.moveaxis(frames, -3, -1) @ LUMA_WEIGHTS
    raise FlowError(f"frames must have 1 or 3 channels, got {channels}")


def image_derivatives(first: np.ndarray, second: np.ndarray) -> tuple:
    """Central-difference spatial derivatives of the pair average and temporal difference."""
    mid = 0.5 * (first + second)
    ix = ndimage.correlate1d(mid, _CENTRAL, axis=-2, mode="nearest")
    iy = ndimage.correlate1d(mid, _CENTRAL, axis=-1, mode="nearest")
    it = second - first
    return ix, iy, it


def _neighbour_sum(values: np.ndarray) -> np.ndarray:
    kernel = _NEIGHBOURS.reshape((1,) * (values.ndim - 2) + (3, 3))
    return ndimage.correlate(values, kernel, mode="constant", cval=0.0)


def flow_energy(
    u: np.ndarray,
    v: np.ndarray,
    ix: np.ndarray,
    iy: np.ndarray,
    it: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """Horn-Schunck energy per frame pair (sums over the last two axes)."""
    data = np.sum((ix * u + iy * v + it) ** 2, axis=(-2, -1))
    smooth = (
        np.sum(np.diff(u, axis=-2) ** 2, axis=(-2, -1))
        + np.sum(np.diff(u, axis=-1) ** 2, axis=(-2, -1))
        + np.sum(np.diff(v, axis=-2) ** 2, axis=(-2, -1))
        + np.sum(np.diff(v, axis=-1) ** 2, axis=(-2, -1))
    )
    return np.asarray(data + alpha**2 * smooth)


class HornSchunckSolver:
    """Variational dense-flow solver working on stacks of luminance pairs."""

    def __init__(
        self, params: Optional[FlowParams] = None, logger: Optional[logging.Logger] = None
    ) -> None:
        self.params = params or FlowParams()
        self.logger = logger or logging.getLogger(__name__)

    def solve(
        self, first: np.ndarray, second: np.ndarray, track_energy: bool = False
    ) -> FlowSolution:
        """
        Solve flow for luminance images ``[..., W, H]`` (any leading stack axes).

        Args:
            first: Luminance at time t, values in [0, 1]
            second: Luminance at time t+1
            track_energy: Record the energy before the first and after every sweep

        Returns:
            FlowSolution with flow ``[..., 2, W, H]`` in pixels per frame
        """
        if first.shape != second.shape:
            raise FlowError(f"frame shapes differ: {first.shape} vs {second.shape}")
        width, height = first.shape[-2:]
        if width < MIN_EXTENT or height < MIN_EXTENT:
            raise FlowError(
                f"frames must be at least {MIN_EXTENT}x{MIN_EXTENT}, got {width}x{height}"
            )

        scale = self.params.intensity_scale
        ix, iy, it = image_derivatives(first * scale, second * scale)
        alpha_sq = self.params.alpha**2

        counts = _neighbour_sum(np.ones(first.shape[-2:]))
        denominator = alpha_sq * counts + ix**2 + iy**2

        u = np.zeros_like(first)
        v = np.zeros_like(first)
        energies: List[np.ndarray] = []
        if track_energy:
            energies.append(flow_energy(u, v, ix, iy, it, self.params.alpha))

        for _ in range(self.params.iterations):
            u_bar = _neighbour_sum(u) / counts
            v_bar = _neighbour_sum(v) / counts
            # u_bar/v_bar are neighbour means; alpha^2 * count folds back the edge weights
            residual = (ix * u_bar + iy * v_bar + it) / denominator
            u = u_bar - ix * residual
            v = v_bar - iy * residual
            if track_energy:
                energies.append(flow_energy(u, v, ix, iy, it, self.params.alpha))

        return FlowSolution(flow=np.stack([u, v], axis=-3), energies=energies)


def estimate_flow(
    frame_a: FrameLike, frame_b: FrameLike, params: Optional[FlowParams] = None
) -> Tensor:
    """
    Estimate the velocity field between two frames.

    Args:
        frame_a: Frame at time t, ``[C, W, H]``
        frame_b: Frame at time t+1, same shape
        params: Solver settings (defaults: alpha 1.0, 100 sweeps)

    Returns:
        Tensor ``[2, W, H]``; channel 0 is u (horizontal), channel 1 is v (vertical)
    """
    a, b = _as_array(frame_a), _as_array(frame_b)
    if a.shape != b.shape:
        raise FlowError(f"frame shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 3:
        raise FlowError(f"frames must be [C, W, H], got shape {a.shape}")
    solution = HornSchunckSolver(params).solve(to_luminance(a), to_luminance(b))
    return Tensor(solution.flow)


def clip_flow(clip: "VideoClip", params: Optional[FlowParams] = None) -> FlowField:
    """Flow for every consecutive frame pair of a clip (T+1 frames give T fields)."""
    frames = _as_array(clip.frames)
    if frames.ndim != 4:
        raise FlowError(f"clip frames must be [T+1, C, W, H], got shape {frames.shape}")
    if frames.shape[0] < 2:
        raise FlowError(f"clip needs at least 2 frames for flow, got {frames.shape[0]}")
    luminance = to_luminance(frames)
    solution = HornSchunckSolver(params).solve(luminance[:-1], luminance[1:])
    pairs = frames.shape[0] - 1
    return FlowField(flows=Tensor(solution.flow), source_pairs=pairs)
