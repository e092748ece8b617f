"""Attention heatmaps, flow arrows and PGM/PPM output."""

from .colormap import BLUE_RED_LUT, LUT_SIZE, apply_colormap
from .export import META_NAME, VizExport, export_clip, frame_filename
from .heatmap import (
    FLOW_SOURCE,
    SOURCES,
    SPATIAL_SOURCE,
    HeatMap,
    attention_source,
    extract_cls_attention,
    normalize_minmax,
    render_heatmap,
)
from .image_io import MAXVAL, VizError, decode_image, encode_image, read_image, write_image
from .overlay import (
    ArrowSet,
    arrow_coverage,
    grayscale,
    overlay,
    overlay_arrows,
    sample_arrows,
)

__all__ = [
    "BLUE_RED_LUT",
    "FLOW_SOURCE",
    "LUT_SIZE",
    "MAXVAL",
    "META_NAME",
    "SOURCES",
    "SPATIAL_SOURCE",
    "ArrowSet",
    "HeatMap",
    "VizError",
    "VizExport",
    "apply_colormap",
    "arrow_coverage",
    "attention_source",
    "decode_image",
    "encode_image",
    "export_clip",
    "extract_cls_attention",
    "frame_filename",
    "grayscale",
    "normalize_minmax",
    "overlay",
    "overlay_arrows",
    "read_image",
    "render_heatmap",
    "sample_arrows",
    "write_image",
]
