"""Tests for the .mtsr tensor container."""

import struct

import numpy as np
import pytest

from moose.core import Tensor
from moose.data import (
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


def test_header_layout():
    raw = encode_tensor(Tensor(np.zeros((2, 3))))
    assert raw[:4] == b"MTSR"
    assert struct.unpack_from("<IIII", raw, 4) == (1, 2, 2, 3)
    assert len(raw) == 4 + 8 + 8 + 6 * 8


def test_payload_is_little_endian_row_major():
    raw = encode_tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert struct.unpack_from("<4d", raw, 20) == (1.0, 2.0, 3.0, 4.0)


def test_special_values_are_bit_exact(tmp_path):
    data = np.array([0.0, -0.0, np.inf, -np.inf, 5e-324, 1.0 / 3.0, np.nan])
    path = tmp_path / "special.mtsr"
    write_tensor(path, data)
    restored = read_tensor(path).data
    np.testing.assert_array_equal(restored.view(np.uint64), data.view(np.uint64))


@pytest.mark.parametrize("shape", [(), (5,), (2, 1, 3), (1, 1, 4, 4)])
def test_shapes_survive(shape):
    data = np.random.default_rng(0).normal(size=shape)
    restored = decode_tensor(encode_tensor(data))
    assert restored.shape == shape
    np.testing.assert_array_equal(restored.data, data)


def test_write_creates_parent_directories(tmp_path):
    path = tmp_path / "nested" / "dir" / "x.mtsr"
    write_tensor(path, np.ones(3))
    assert path.exists()


def test_bad_magic():
    raw = encode_tensor(np.ones(2))
    with pytest.raises(BadMagicError):
        decode_tensor(b"XTSR" + raw[4:])
    with pytest.raises(BadMagicError):
        decode_tensor(b"MT")


def test_unsupported_version():
    raw = bytearray(encode_tensor(np.ones(2)))
    raw[4:8] = struct.pack("<I", 2)
    with pytest.raises(UnsupportedVersionError):
        decode_tensor(bytes(raw))


def test_truncated_header():
    with pytest.raises(TruncatedPayloadError):
        decode_tensor(b"MTSR" + struct.pack("<I", 1))
    with pytest.raises(TruncatedPayloadError):
        decode_tensor(b"MTSR" + struct.pack("<II", 1, 3) + struct.pack("<I", 2))


def test_truncated_payload():
    raw = encode_tensor(np.ones((3, 3)))
    with pytest.raises(TruncatedPayloadError):
        decode_tensor(raw[:-1])


def test_trailing_bytes():
    raw = encode_tensor(np.ones(2))
    with pytest.raises(TensorFileError):
        decode_tensor(raw + b"\x00")


def test_oversized_shape_declaration():
    raw = b"MTSR" + struct.pack("<II", 1, 3) + struct.pack("<3I", 1 << 20, 1 << 20, 2)
    with pytest.raises(DimOverflowError):
        decode_tensor(raw)


def test_errors_share_a_base_class():
    for error in (BadMagicError, UnsupportedVersionError, TruncatedPayloadError):
        assert issubclass(error, TensorFileError)
