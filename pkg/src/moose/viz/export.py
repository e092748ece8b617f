"""Write per-frame attention overlays for one clip."""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional

from ..flow import FlowField, clip_flow
from ..models import AttentionRecorder, MooseModel
from ..utils.helpers import SimpleTimer
from .heatmap import FLOW_SOURCE, SOURCES, HeatMap, extract_cls_attention, render_heatmap
from .image_io import write_image
from .overlay import overlay, overlay_arrows, sample_arrows

if TYPE_CHECKING:
    from ..data.clip import VideoClip

META_NAME = "meta.csv"
META_FIELDS = ("frame", "source", "raw_min", "raw_max")
IMAGE_SUFFIX = ".ppm"

DEFAULT_ALPHA = 0.5
DEFAULT_GRID_STEP = 4
DEFAULT_ARROW_SCALE = 2.0


@dataclass
class VizExport:
    """Files written for one clip."""

    clip_id: str
    directory: Path
    images: List[Path] = field(default_factory=list)
    heatmaps: List[HeatMap] = field(default_factory=list)
    meta_path: Optional[Path] = None
    predicted: int = -1


def frame_filename(frame: int, source: str) -> str:
    return f"frame_{frame}_{source}{IMAGE_SUFFIX}"


def export_clip(
    model: MooseModel,
    clip: "VideoClip",
    out_dir: Path,
    flow: Optional[FlowField] = None,
    alpha: float = DEFAULT_ALPHA,
    grid_step: int = DEFAULT_GRID_STEP,
    arrow_scale: float = DEFAULT_ARROW_SCALE,
    logger: Optional[logging.Logger] = None,
) -> VizExport:
    """
    Run one recorded forward and write both heatmap overlays for every frame.

    Output goes to ``<out_dir>/<clip_id>/frame_<t>_{spatial|flow}.ppm``; the flow
    overlay also carries the estimated flow as arrows. ``meta.csv`` keeps each
    heatmap's range before normalization.
    """
    log = logger or logging.getLogger(__name__)
    config = model.config
    if flow is None:
        flow = clip_flow(clip, config.flow)

    recorder = AttentionRecorder()
    with SimpleTimer(f"Recorded forward for {clip.clip_id}", log):
        logits = model.forward(clip, flow, recorder)

    directory = Path(out_dir) / clip.clip_id
    result = VizExport(
        clip_id=clip.clip_id, directory=directory, predicted=int(logits.data.argmax())
    )
    grid = config.grid
    for t in range(clip.num_units):
        frame = clip.frames.data[t]
        for source in SOURCES:
            attn = extract_cls_attention(recorder, t, source)
            heat = render_heatmap(attn, grid, config.width, config.height, frame=t, source=source)
            image = overlay(frame, heat, alpha)
            if source == FLOW_SOURCE:
                arrows = sample_arrows(flow.flows.data[t], grid_step, arrow_scale)
                image = overlay_arrows(image, arrows)
            result.images.append(write_image(directory / frame_filename(t, source), image))
            result.heatmaps.append(heat)

    result.meta_path = directory / META_NAME
    with open(result.meta_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(META_FIELDS)
        for heat in result.heatmaps:
            writer.writerow([heat.frame, heat.source, repr(heat.raw_min), repr(heat.raw_max)])

    log.info(f"Wrote {len(result.images)} overlays for {clip.clip_id} to {directory}")
    return result
