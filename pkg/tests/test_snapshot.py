# tests/test_snapshot.py

import struct

import numpy as np
import pytest
from src.errors import (
    BadMagicError,
    ChecksumError,
    DimensionMismatchError,
    RepresentationError,
    TruncatedSnapshotError,
    VersionMismatchError,
)
from src.field import PHYSICAL, GridSpec, QField, forward_transform
from src.snapshot import encode_snapshot, read_snapshot, write_snapshot


def random_field(sizes=(32, 32), seed=0) -> QField:
    grid = GridSpec(dim=len(sizes), sizes=sizes, domain_length=tuple(0.5 + i for i in range(len(sizes))))
    return QField(grid, PHYSICAL, np.random.default_rng(seed).standard_normal((4,) + sizes))


def test_round_trip_is_byte_exact(tmp_path):
    field = random_field()
    path = str(tmp_path / "field.qfld")

    write_snapshot(field, path)
    loaded = read_snapshot(path)

    # Assertions
    assert loaded.grid == field.grid, "Grid should survive the round trip."
    assert loaded.data.tobytes() == field.data.tobytes(), "Payload should be byte-identical."
    assert encode_snapshot(loaded) == encode_snapshot(field), "Re-encoding should reproduce the file."


def test_layout_header(tmp_path):
    field = random_field(sizes=(8, 16, 8))
    blob = encode_snapshot(field)

    # Assertions
    assert blob[:4] == b"QFLD", "File should start with the magic."
    version, dim = struct.unpack_from("<HB", blob, 4)
    assert (version, dim) == (1, 3), "Header should carry version 1 and dim 3."
    assert struct.unpack_from("<3I", blob, 7) == (8, 16, 8), "Sizes should follow the dimension."
    payload_start = 7 + 12 + 24 + 1
    first = np.frombuffer(blob[payload_start:payload_start + 8], dtype="<f8")[0]
    assert first == field.data[0, 0, 0, 0], "Payload should start with the w component."
    assert len(blob) == payload_start + 8 * 4 * 8 * 16 * 8 + 8, "File should end with an 8-byte checksum."


def test_spectral_field_is_rejected(tmp_path):
    with pytest.raises(RepresentationError):
        write_snapshot(forward_transform(random_field()), str(tmp_path / "bad.qfld"))


def test_truncated_file(tmp_path):
    path = tmp_path / "field.qfld"
    write_snapshot(random_field(), str(path))
    blob = path.read_bytes()

    for cut in (3, 10, len(blob) // 2, len(blob) - 1):
        path.write_bytes(blob[:cut])
        with pytest.raises(TruncatedSnapshotError):
            read_snapshot(str(path))


def test_bad_magic_and_version(tmp_path):
    blob = bytearray(encode_snapshot(random_field()))
    path = tmp_path / "field.qfld"

    path.write_bytes(b"XXXX" + bytes(blob[4:]))
    with pytest.raises(BadMagicError):
        read_snapshot(str(path))

    blob[4:6] = struct.pack("<H", 2)
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionMismatchError):
        read_snapshot(str(path))


def test_checksum_failure(tmp_path):
    blob = bytearray(encode_snapshot(random_field()))
    blob[100] ^= 0xFF
    path = tmp_path / "field.qfld"
    path.write_bytes(bytes(blob))

    with pytest.raises(ChecksumError):
        read_snapshot(str(path))


def test_dimension_mismatch_names_both_shapes(tmp_path):
    path = str(tmp_path / "field.qfld")
    write_snapshot(random_field(sizes=(32, 32)), path)

    with pytest.raises(DimensionMismatchError) as exc:
        read_snapshot(path, expected_grid=GridSpec(dim=2, sizes=(64, 64)))

    # Assertions
    assert "[32, 32]" in str(exc.value) and "[64, 64]" in str(exc.value), "Both shapes should be named."
