"""Binary PGM (P5) and PPM (P6) images, maxval 255, read and written through Pillow.

Images in memory are ``[C, W, H]`` floats in [0, 1] (``[W, H]`` is accepted for
grayscale); Pillow arrays are ``[H, W]`` or ``[H, W, 3]``, rows top to bottom.
"""

from io import BytesIO
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..core import Tensor

MAXVAL = 255
PNM_FORMAT = "PPM"
MAGICS = (b"P5", b"P6")

PathLike = Union[str, Path]


class VizError(ValueError):
    """Exception raised for invalid rendering inputs or image files."""

    pass


def _as_image(image: Union[Tensor, np.ndarray]) -> np.ndarray:
    data = image.data if isinstance(image, Tensor) else np.asarray(image, dtype=np.float64)
    if data.ndim == 2:
        data = data[None]
    if data.ndim != 3 or data.shape[0] not in (1, 3):
        raise VizError(f"image must be [C, W, H] with 1 or 3 channels, got shape {data.shape}")
    return data


def quantize(image: Union[Tensor, np.ndarray]) -> np.ndarray:
    """Round ``[C, W, H]`` floats to bytes, clipping to [0, 1] first."""
    data = _as_image(image)
    return np.round(np.clip(data, 0.0, 1.0) * MAXVAL).astype(np.uint8)


def to_pil(image: Union[Tensor, np.ndarray]) -> Image.Image:
    """Mode ``L`` for one channel, ``RGB`` for three."""
    pixels = quantize(image)
    if pixels.shape[0] == 1:
        return Image.fromarray(np.ascontiguousarray(pixels[0].T))
    return Image.fromarray(np.ascontiguousarray(pixels.transpose(2, 1, 0)))


def from_pil(img: Image.Image) -> np.ndarray:
    if img.mode not in ("L", "RGB"):
        raise VizError(f"only 8-bit gray or RGB images are supported, got mode {img.mode}")
    pixels = np.asarray(img, dtype=np.float64)
    if pixels.ndim == 2:
        pixels = pixels[:, :, None]
    return pixels.transpose(2, 1, 0) / MAXVAL


def encode_image(image: Union[Tensor, np.ndarray]) -> bytes:
    buffer = BytesIO()
    to_pil(image).save(buffer, format=PNM_FORMAT)
    return buffer.getvalue()


def write_image(path: PathLike, image: Union[Tensor, np.ndarray]) -> Path:
    """Write a grayscale image as PGM or a color image as PPM."""
    target = Path(path)
    img = to_pil(image)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        img.save(target, format=PNM_FORMAT)
    except OSError as e:
        raise VizError(f"cannot write image {target}: {e}") from e
    return target


def decode_image(raw: bytes) -> np.ndarray:
    """Decode P5/P6 bytes into ``[C, W, H]`` floats; other netpbm variants are rejected."""
    if raw[:2] not in MAGICS:
        raise VizError(f"unsupported image magic {raw[:2]!r}")
    try:
        img = Image.open(BytesIO(raw), formats=[PNM_FORMAT])
        img.load()
    except (OSError, SyntaxError, ValueError) as e:
        raise VizError(f"unreadable image: {e}") from e
    return from_pil(img)


def read_image(path: PathLike) -> np.ndarray:
    """Read a PGM/PPM written by :func:`write_image` as ``[C, W, H]`` floats."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise VizError(f"cannot read image {path}: {e}") from e
    return decode_image(raw)
