"""Cls-token attention maps upsampled to frame resolution."""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import ndimage

from ..core import Tensor
from ..models import (
    FLOW_PRIOR_PURPOSE,
    SPATIAL_SELF,
    TEMPORAL_SELF,
    VISUAL_PRIOR_PURPOSE,
    AttentionRecorder,
    PatchGrid,
)
from .image_io import VizError

SPATIAL_SOURCE = "spatial"
FLOW_SOURCE = "flow"
SOURCES = (SPATIAL_SOURCE, FLOW_SOURCE)

# Where each heatmap looks first: the fusion cross-attention whose keys are the
# source's patches, else the last self-attention layer of that pathway.
_CROSS_PURPOSE = {SPATIAL_SOURCE: VISUAL_PRIOR_PURPOSE, FLOW_SOURCE: FLOW_PRIOR_PURPOSE}
_SELF_PURPOSE = {SPATIAL_SOURCE: SPATIAL_SELF, FLOW_SOURCE: TEMPORAL_SELF}


@dataclass
class HeatMap:
    """Per-frame attention map ``[W, H]`` in [0, 1] with its pre-normalization range."""

    values: Tensor
    frame: int
    source: str
    raw_min: float = 0.0
    raw_max: float = 0.0

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise VizError(f"heatmap must be [W, H], got shape {self.values.shape}")
        data = self.values.data
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise VizError("heatmap values must lie in [0, 1]")
        if self.source not in SOURCES:
            raise VizError(f"heatmap source must be one of {SOURCES}, got {self.source!r}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


def attention_source(recorder: AttentionRecorder, direction: str) -> Tuple[int, str]:
    """The ``(layer, purpose)`` holding cls attention over ``direction``'s patches."""
    if direction not in SOURCES:
        raise VizError(f"direction must be one of {SOURCES}, got {direction!r}")
    cross = _CROSS_PURPOSE[direction]
    if recorder.has(cross):
        return recorder.layers(cross)[-1], cross
    own = _SELF_PURPOSE[direction]
    if recorder.has(own):
        return recorder.layers(own)[-1], own
    raise VizError(f"no recorded attention for the {direction} heatmap; run a forward first")


def extract_cls_attention(recorder: AttentionRecorder, frame: int, direction: str) -> Tensor:
    """
    Cls-query attention over the ``N`` patch keys of one frame, averaged over heads.

    The slice excludes the cls key and is renormalized to sum to one.
    """
    if recorder is None or len(recorder) == 0:
        raise VizError("no recorded forward pass to extract attention from")
    layer, purpose = attention_source(recorder, direction)
    weights = recorder.weights(layer, purpose)  # [T, Lq, Lk]
    if weights.ndim != 3:
        raise VizError(f"expected per-frame weights [T, Lq, Lk], got {weights.shape}")
    if not 0 <= frame < weights.shape[0]:
        raise VizError(f"frame {frame} outside 0..{weights.shape[0] - 1}")
    row = weights[frame, 0, 1:]
    total = row.sum()
    return Tensor(row / total if total > 0 else row)


def normalize_minmax(values: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant input maps to all zeros."""
    low, high = float(values.min()), float(values.max())
    if high - low <= 0.0:
        return np.zeros_like(values, dtype=np.float64)
    return (values - low) / (high - low)


def render_heatmap(
    attn: Union[Tensor, np.ndarray],
    grid: PatchGrid,
    width: int,
    height: int,
    frame: int = 0,
    source: str = SPATIAL_SOURCE,
) -> HeatMap:
    """
    Min-max normalize patch attention, lay it on the patch grid and upsample bilinearly.

    Patch centers map exactly onto grid samples; pixels beyond the outer centers
    take the edge value.
    """
    values = attn.data if isinstance(attn, Tensor) else np.asarray(attn, dtype=np.float64)
    if values.ndim != 1 or values.size != grid.num_patches:
        raise VizError(
            f"attention has {values.size} entries, grid {grid.grid_w}x{grid.grid_h} "
            f"needs {grid.num_patches}"
        )
    if (width, height) != (grid.width, grid.height):
        raise VizError(f"frame {width}x{height} does not match grid {grid.width}x{grid.height}")

    normed = normalize_minmax(values)
    cells = normed.reshape(grid.grid_h, grid.grid_w).T  # [grid_w, grid_h]

    p = grid.patch_size
    gx = np.clip((np.arange(width) - (p - 1) / 2.0) / p, 0.0, grid.grid_w - 1)
    gy = np.clip((np.arange(height) - (p - 1) / 2.0) / p, 0.0, grid.grid_h - 1)
    coords = np.meshgrid(gx, gy, indexing="ij")
    upsampled = ndimage.map_coordinates(cells, coords, order=1, mode="nearest")

    return HeatMap(
        values=Tensor(np.clip(upsampled, 0.0, 1.0)),
        frame=frame,
        source=source,
        raw_min=float(values.min()),
        raw_max=float(values.max()),
    )
