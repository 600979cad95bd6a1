# src/snapshot.py

from typing import Optional
import hashlib
import logging
import struct

import numpy as np

from .errors import (
    BadMagicError,
    ChecksumError,
    ConfigurationError,
    DimensionMismatchError,
    SnapshotError,
    TruncatedSnapshotError,
    VersionMismatchError,
)
from .field import PHYSICAL, GridSpec, QField

logger = logging.getLogger(__name__)

MAGIC = b"QFLD"
FORMAT_VERSION = 1
TAG_PHYSICAL = 0
CHECKSUM_SIZE = 8

_PREAMBLE = struct.Struct("<4sHB")
_TAG = struct.Struct("<B")


def payload_checksum(payload: bytes) -> bytes:
    """64-bit BLAKE2b digest of the payload bytes."""
    return hashlib.blake2b(payload, digest_size=CHECKSUM_SIZE).digest()


def encode_snapshot(field: QField) -> bytes:
    """
    Serializes a physical field into the snapshot layout.

    Layout (little-endian): magic "QFLD", u16 version, u8 dim, u32 sizes,
    f64 domain lengths, u8 representation tag, the four components one after
    another as f64, then an 8-byte checksum of the payload.

    Args:
        field (QField): Physical field.

    Returns:
        bytes: The encoded snapshot.
    """
    field.require(PHYSICAL)
    grid = field.grid
    header = _PREAMBLE.pack(MAGIC, FORMAT_VERSION, grid.dim)
    header += struct.pack(f"<{grid.dim}I", *grid.sizes)
    header += struct.pack(f"<{grid.dim}d", *grid.domain_length)
    header += _TAG.pack(TAG_PHYSICAL)
    payload = np.ascontiguousarray(field.data, dtype="<f8").tobytes()
    return header + payload + payload_checksum(payload)


def decode_snapshot(blob: bytes, expected_grid: Optional[GridSpec] = None, source: str = "<bytes>") -> QField:
    """
    Parses a snapshot produced by encode_snapshot.

    Args:
        blob (bytes): The file contents.
        expected_grid (Optional[GridSpec]): Grid the caller requires.
        source (str): Name used in error messages.

    Returns:
        QField: The physical field.

    Raises:
        BadMagicError: If the magic bytes are wrong.
        VersionMismatchError: If the format version is not supported.
        TruncatedSnapshotError: If the file ends early.
        ChecksumError: If the payload checksum does not match.
        DimensionMismatchError: If the grid differs from expected_grid.
        SnapshotError: For any other malformed header.
    """
    if len(blob) >= len(MAGIC) and blob[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{source}: not a snapshot (magic {blob[:len(MAGIC)]!r})")
    if len(blob) < _PREAMBLE.size:
        raise TruncatedSnapshotError(f"{source}: truncated header ({len(blob)} bytes)")

    _, version, dim = _PREAMBLE.unpack_from(blob, 0)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{source}: format version {version}, expected {FORMAT_VERSION}")
    if dim not in (2, 3):
        raise SnapshotError(f"{source}: unsupported dimension {dim}")

    offset = _PREAMBLE.size
    header_size = offset + 4 * dim + 8 * dim + _TAG.size
    if len(blob) < header_size:
        raise TruncatedSnapshotError(f"{source}: truncated header ({len(blob)} of {header_size} bytes)")
    sizes = struct.unpack_from(f"<{dim}I", blob, offset)
    offset += 4 * dim
    lengths = struct.unpack_from(f"<{dim}d", blob, offset)
    offset += 8 * dim
    (tag,) = _TAG.unpack_from(blob, offset)
    offset += _TAG.size
    if tag != TAG_PHYSICAL:
        raise SnapshotError(f"{source}: unsupported representation tag {tag}")

    try:
        grid = GridSpec(dim=dim, sizes=tuple(sizes), domain_length=tuple(lengths))
    except ConfigurationError as e:
        raise SnapshotError(f"{source}: invalid grid in header: {e}")

    payload_size = 8 * 4 * grid.n_points
    expected_size = header_size + payload_size + CHECKSUM_SIZE
    if len(blob) < expected_size:
        raise TruncatedSnapshotError(f"{source}: truncated ({len(blob)} of {expected_size} bytes)")
    if len(blob) > expected_size:
        raise SnapshotError(f"{source}: {len(blob) - expected_size} trailing bytes")

    payload = blob[offset:offset + payload_size]
    checksum = blob[offset + payload_size:]
    if payload_checksum(payload) != checksum:
        raise ChecksumError(f"{source}: payload checksum mismatch")

    if expected_grid is not None and (expected_grid.sizes != grid.sizes or expected_grid.dim != grid.dim):
        raise DimensionMismatchError(
            f"{source}: snapshot grid {list(grid.sizes)} does not match expected grid {list(expected_grid.sizes)}"
        )

    data = np.frombuffer(payload, dtype="<f8").reshape((4,) + grid.sizes).astype(np.float64)
    return QField(grid, PHYSICAL, data)


def write_snapshot(field: QField, path: str) -> None:
    """
    Writes a physical field to a snapshot file.
    """
    blob = encode_snapshot(field)
    with open(path, "wb") as f:
        f.write(blob)
    logger.debug(f"Snapshot written to {path} ({len(blob)} bytes)")


def read_snapshot(path: str, expected_grid: Optional[GridSpec] = None) -> QField:
    """
    Reads a snapshot file written by write_snapshot.

    Args:
        path (str): Path of the snapshot.
        expected_grid (Optional[GridSpec]): Grid the caller requires.

    Returns:
        QField: The physical field, byte-identical to the one written.
    """
    with open(path, "rb") as f:
        blob = f.read()
    return decode_snapshot(blob, expected_grid=expected_grid, source=path)
