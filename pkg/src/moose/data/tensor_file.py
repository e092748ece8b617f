"""Bit-exact binary tensor container (``.mtsr``).

Layout, all integers little-endian::

    b"MTSR" | version u32 | ndim u32 | dims u32 x ndim | float64 payload (row-major)
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np

from ..core import Tensor

MAGIC = b"MTSR"
VERSION = 1
MAX_DIM = 0xFFFFFFFF
# Refuse headers that would describe more than 2**40 elements.
MAX_ELEMENTS = 1 << 40
SUFFIX = ".mtsr"

PathLike = Union[str, Path]


class TensorFileError(Exception):
    """Base exception for tensor container errors."""

    pass


class BadMagicError(TensorFileError):
    """File does not start with the container magic."""

    pass


class UnsupportedVersionError(TensorFileError):
    """Container version is not understood."""

    pass


class TruncatedPayloadError(TensorFileError):
    """Header or payload ends before the declared length."""

    pass


class DimOverflowError(TensorFileError):
    """A dimension or the element count does not fit the format."""

    pass


def encode_tensor(tensor: Union[Tensor, np.ndarray]) -> bytes:
    data = tensor.data if isinstance(tensor, Tensor) else np.asarray(tensor, dtype=np.float64)
    for extent in data.shape:
        if extent > MAX_DIM:
            raise DimOverflowError(f"dimension {extent} does not fit in u32")
    header = MAGIC + struct.pack("<II", VERSION, data.ndim)
    header += struct.pack(f"<{data.ndim}I", *data.shape)
    return header + np.ascontiguousarray(data, dtype="<f8").tobytes()


def decode_tensor(raw: bytes) -> Tensor:
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < 12:
        raise TruncatedPayloadError("header truncated before version/ndim")
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")

    dims_end = 12 + 4 * ndim
    if len(raw) < dims_end:
        raise TruncatedPayloadError(f"header truncated: {ndim} dims declared")
    dims = struct.unpack_from(f"<{ndim}I", raw, 12)

    count = 1
    for extent in dims:
        count *= extent
        if count > MAX_ELEMENTS:
            raise DimOverflowError(f"declared shape {dims} exceeds {MAX_ELEMENTS} elements")

    expected = dims_end + 8 * count
    if len(raw) < expected:
        raise TruncatedPayloadError(
            f"payload truncated: expected {8 * count} bytes, found {len(raw) - dims_end}"
        )
    if len(raw) > expected:
        raise TensorFileError(f"{len(raw) - expected} trailing bytes after payload")

    payload = np.frombuffer(raw, dtype="<f8", count=count, offset=dims_end)
    return Tensor(payload.reshape(dims).astype(np.float64))


def write_tensor(path: PathLike, tensor: Union[Tensor, np.ndarray]) -> None:
    """Write ``tensor`` to ``path`` in the container format."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_tensor(tensor))


def read_tensor(path: PathLike) -> Tensor:
    """Read a tensor written by :func:`write_tensor`."""
    return decode_tensor(Path(path).read_bytes())
