"""Heatmap blending and flow arrows drawn as anti-aliased OpenCV line segments."""

from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple, Union

import cv2
import numpy as np

from ..core import Tensor
from ..flow import to_luminance
from ..utils.helpers import validate_positive, validate_range
from .colormap import apply_colormap
from .heatmap import HeatMap
from .image_io import VizError

ARROW_COLOR = (1.0, 1.0, 1.0)
SUBPIXEL_BITS = 4

ArrayLike = Union[Tensor, np.ndarray]


def _data(value: ArrayLike) -> np.ndarray:
    return value.data if isinstance(value, Tensor) else np.asarray(value, dtype=np.float64)


@dataclass
class ArrowSet:
    """Flow arrows ``(x, y, u, v)`` anchored on a regular grid, one row per arrow."""

    arrows: np.ndarray
    width: int
    height: int
    grid_step: int = 1
    scale: float = 1.0

    def __post_init__(self) -> None:
        self.arrows = np.asarray(self.arrows, dtype=np.float64).reshape(-1, 4)
        if len(self.arrows):
            x, y = self.arrows[:, 0], self.arrows[:, 1]
            if x.min() < 0 or y.min() < 0 or x.max() >= self.width or y.max() >= self.height:
                raise VizError(
                    f"arrow anchors must lie inside the {self.width}x{self.height} frame"
                )

    def __len__(self) -> int:
        return len(self.arrows)

    def __iter__(self) -> Iterator[Tuple[float, float, float, float]]:
        for x, y, u, v in self.arrows:
            yield float(x), float(y), float(u), float(v)


def grayscale(frame: ArrayLike) -> np.ndarray:
    """Luminance of a ``[C, W, H]`` frame (or a ``[W, H]`` one as is)."""
    data = _data(frame)
    if data.ndim == 2:
        return data
    if data.ndim != 3:
        raise VizError(f"frame must be [C, W, H], got shape {data.shape}")
    try:
        return to_luminance(data)
    except ValueError as e:
        raise VizError(str(e)) from e


def overlay(frame: ArrayLike, heatmap: HeatMap, alpha: float = 0.5) -> np.ndarray:
    """Blend ``(1 - alpha) * gray(frame) + alpha * colormap(heat)`` into an RGB ``[3, W, H]``."""
    validate_range(alpha, "alpha", 0.0, 1.0, high_inclusive=True)
    gray = grayscale(frame)
    heat = heatmap.values.data
    if gray.shape != heat.shape:
        raise VizError(f"frame is {gray.shape} but heatmap is {heat.shape}")
    base = np.broadcast_to(gray, (3,) + gray.shape)
    return (1.0 - alpha) * base + alpha * apply_colormap(heat)


def sample_arrows(flow: ArrayLike, grid_step: int, scale: float = 1.0) -> ArrowSet:
    """
    Sample a ``[2, W, H]`` flow field every ``grid_step`` pixels.

    Anchors sit at ``grid_step // 2 + k * grid_step`` on both axes; each arrow
    carries the flow at its anchor times ``scale``.
    """
    validate_positive(grid_step, "grid_step")
    data = _data(flow)
    if data.ndim != 3 or data.shape[0] != 2:
        raise VizError(f"flow must be [2, W, H], got shape {data.shape}")
    _, width, height = data.shape
    xs = np.arange(grid_step // 2, width, grid_step)
    ys = np.arange(grid_step // 2, height, grid_step)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    u = data[0, gx, gy] * scale
    v = data[1, gx, gy] * scale
    arrows = np.stack([gx, gy, u, v], axis=1).astype(np.float64)
    return ArrowSet(arrows=arrows, width=width, height=height, grid_step=grid_step, scale=scale)


def arrow_coverage(arrows: ArrowSet) -> np.ndarray:
    """
    Anti-aliased coverage in [0, 1] of all arrows, as a ``[W, H]`` map.

    Segments run from each anchor to ``anchor + (u, v)`` at sub-pixel precision
    and are clipped to the frame; an arrow with zero flow covers only its anchor.
    """
    mask = np.zeros((arrows.height, arrows.width), dtype=np.uint8)
    one = 1 << SUBPIXEL_BITS
    for x, y, u, v in arrows:
        if u == 0.0 and v == 0.0:
            mask[int(round(y)), int(round(x))] = 255
            continue
        start = (int(round(x * one)), int(round(y * one)))
        end = (int(round((x + u) * one)), int(round((y + v) * one)))
        cv2.line(mask, start, end, 255, thickness=1, lineType=cv2.LINE_AA, shift=SUBPIXEL_BITS)
    return mask.T.astype(np.float64) / 255.0


def overlay_arrows(
    image: ArrayLike, arrows: ArrowSet, color: Sequence[float] = ARROW_COLOR
) -> np.ndarray:
    """Blend ``color`` over ``image`` ``[C, W, H]`` in proportion to the arrows' coverage."""
    canvas = np.array(_data(image), dtype=np.float64)
    if canvas.ndim == 2:
        canvas = canvas[None]
    if canvas.ndim != 3 or canvas.shape[1:] != (arrows.width, arrows.height):
        raise VizError(
            f"image {canvas.shape} does not match arrow frame {arrows.width}x{arrows.height}"
        )
    cover = arrow_coverage(arrows)[None]
    rgb = np.asarray(color, dtype=np.float64)[: canvas.shape[0], None, None]
    return (1.0 - cover) * canvas + cover * rgb
