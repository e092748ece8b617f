"""Synthetic motion clips, dataset storage and the binary tensor container."""

from .clip import VideoClip
from .dataset_store import DatasetStore, load_or_generate
from .synthetic import (
    CLASS_SETS,
    DIRECTION_CLASSES,
    FLIP_CLASSES,
    REVERSAL_CLASSES,
    SPLITS,
    ClipRenderer,
    DatasetError,
    SyntheticDataset,
    SyntheticSpec,
    class_names_for,
    clip_seed,
    generate,
    make_clip,
)
from .tensor_file import (
    BadMagicError,
    DimOverflowError,
    TensorFileError,
    TruncatedPayloadError,
    UnsupportedVersionError,
    decode_tensor,
    encode_tensor,
    read_tensor,
    write_tensor,
)

__all__ = [
    "CLASS_SETS",
    "DIRECTION_CLASSES",
    "FLIP_CLASSES",
    "REVERSAL_CLASSES",
    "SPLITS",
    "BadMagicError",
    "ClipRenderer",
    "DatasetError",
    "DatasetStore",
    "DimOverflowError",
    "SyntheticDataset",
    "SyntheticSpec",
    "TensorFileError",
    "TruncatedPayloadError",
    "UnsupportedVersionError",
    "VideoClip",
    "class_names_for",
    "clip_seed",
    "decode_tensor",
    "encode_tensor",
    "generate",
    "load_or_generate",
    "make_clip",
    "read_tensor",
    "write_tensor",
]
