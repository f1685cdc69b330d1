"""Readers and writers for the on-disk artifacts shared by every component.

Three formats:

* Feature tensors: the FTNS container — magic ``FTNS``, u16 little-endian
  version (= 1), u8 dtype code (1 = float32 little-endian), u8 rank, then
  rank u32 little-endian extents, then the row-major payload (last axis
  fastest).  Rank is 3 for feature tensors, ordered [rows, cols, channels].
* Class masks: single-channel 8-bit PNG whose pixel values are class ids;
  255 is reserved for "unlabeled/unknown".
* Point labels: UTF-8 CSV with header ``x,y,class_id``; x is the column
  index, y the row index, both 0-based.

All round trips are lossless; readers validate eagerly and raise the
specific errors from :mod:`pointprop.errors`.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    BadMagicError,
    BadPointFileError,
    ClassIdOutOfRangeError,
    DuplicatePointError,
    InvalidShapeError,
    NotGrayscale8Error,
    OutOfBoundsError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    UnsupportedVersionError,
)

FTNS_MAGIC = b"FTNS"
FTNS_VERSION = 1
DTYPE_F32_LE = 1
MAX_RANK = 8
RESERVED_ID = 255

_HEADER_FIXED = struct.Struct("<4sHBB")


def read_tensor(path: str | Path) -> np.ndarray:
    """Read an FTNS file into a float32 array with the stored shape."""
    with open(path, "rb") as fh:
        return read_tensor_bytes(fh.read())


def read_tensor_bytes(buf: bytes) -> np.ndarray:
    """Parse FTNS bytes; validates magic, version, dtype, rank and length."""
    if len(buf) < 4 or buf[:4] != FTNS_MAGIC:
        raise BadMagicError("not an FTNS file (bad magic)")
    if len(buf) < _HEADER_FIXED.size:
        raise TruncatedPayloadError("header truncated")
    _, version, dtype_code, rank = _HEADER_FIXED.unpack_from(buf)
    if version != FTNS_VERSION:
        raise UnsupportedVersionError(f"unsupported FTNS version {version}")
    if dtype_code != DTYPE_F32_LE:
        raise UnsupportedDtypeError(f"unsupported dtype code {dtype_code}")
    if rank < 1 or rank > MAX_RANK:
        raise InvalidShapeError(f"rank {rank} outside 1..{MAX_RANK}")
    header_end = _HEADER_FIXED.size + 4 * rank
    if len(buf) < header_end:
        raise TruncatedPayloadError("extent table truncated")
    shape = struct.unpack_from(f"<{rank}I", buf, _HEADER_FIXED.size)
    if any(extent == 0 for extent in shape):
        raise InvalidShapeError(f"zero extent in shape {shape}")
    count = 1
    for extent in shape:
        count *= extent
    expected = header_end + 4 * count
    if len(buf) != expected:
        raise TruncatedPayloadError(
            f"payload length mismatch: expected {expected} bytes, got {len(buf)}"
        )
    data = np.frombuffer(buf, dtype="<f4", count=count, offset=header_end)
    return data.reshape(shape).astype(np.float32, copy=True)


def write_tensor(tensor: np.ndarray, path: str | Path) -> None:
    """Write an array as FTNS; shape must be non-empty with positive extents."""
    path = Path(path)
    buf = tensor_to_bytes(tensor)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(buf)


def tensor_to_bytes(tensor: np.ndarray) -> bytes:
    arr = np.asarray(tensor)
    if arr.ndim < 1 or arr.ndim > MAX_RANK:
        raise InvalidShapeError(f"rank {arr.ndim} outside 1..{MAX_RANK}")
    if any(extent == 0 for extent in arr.shape):
        raise InvalidShapeError(f"zero extent in shape {arr.shape}")
    if any(extent > 0xFFFFFFFF for extent in arr.shape):
        raise InvalidShapeError("extent exceeds u32 range")
    arr = np.ascontiguousarray(arr, dtype="<f4")
    header = _HEADER_FIXED.pack(FTNS_MAGIC, FTNS_VERSION, DTYPE_F32_LE, arr.ndim)
    extents = struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + extents + arr.tobytes()


def read_mask(path: str | Path) -> np.ndarray:
    """Read a class mask from an 8-bit grayscale PNG as a (h, w) uint8 array."""
    with Image.open(path) as img:
        if img.mode != "L":
            raise NotGrayscale8Error(
                f"mask must be single-channel 8-bit PNG, got mode {img.mode!r}"
            )
        return np.asarray(img, dtype=np.uint8).copy()


def mask_from_png_bytes(buf: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(buf)) as img:
        if img.mode != "L":
            raise NotGrayscale8Error(
                f"mask must be single-channel 8-bit PNG, got mode {img.mode!r}"
            )
        return np.asarray(img, dtype=np.uint8).copy()


def write_mask(mask: np.ndarray, path: str | Path) -> None:
    """Write a (h, w) uint8 class mask as an 8-bit grayscale PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(mask_to_png_bytes(mask))


def mask_to_png_bytes(mask: np.ndarray) -> bytes:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise InvalidShapeError(f"mask must be 2-D, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise NotGrayscale8Error(f"mask must be uint8, got dtype {arr.dtype}")
    out = io.BytesIO()
    Image.fromarray(arr, mode="L").save(out, format="PNG")
    return out.getvalue()


def validate_mask(mask: np.ndarray, num_classes: int) -> None:
    """Check that every value is either reserved (255) or < num_classes."""
    values = np.unique(np.asarray(mask))
    bad = values[(values != RESERVED_ID) & (values >= num_classes)]
    if bad.size:
        raise ClassIdOutOfRangeError(
            f"class ids {bad.tolist()} out of range for {num_classes} classes"
        )


def read_points(path: str | Path) -> list[tuple[int, int, int]]:
    """Read point labels from CSV, preserving row order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["x", "y", "class_id"]:
            raise BadPointFileError(f"expected header 'x,y,class_id', got {header}")
        points = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise BadPointFileError(f"line {lineno}: expected 3 columns, got {len(row)}")
            try:
                x, y, class_id = (int(v) for v in row)
            except ValueError as exc:
                raise BadPointFileError(f"line {lineno}: non-integer value") from exc
            points.append((x, y, class_id))
    return points


def write_points(points: list[tuple[int, int, int]], path: str | Path) -> None:
    """Write point labels as CSV with the canonical header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "class_id"])
        writer.writerows(points)


def validate_points(
    points: list[tuple[int, int, int]], width: int, height: int
) -> None:
    """Check bounds and coordinate uniqueness for a point-label list."""
    seen: set[tuple[int, int]] = set()
    for x, y, _ in points:
        if not (0 <= x < width and 0 <= y < height):
            raise OutOfBoundsError(f"point ({x}, {y}) outside {width}x{height}")
        if (x, y) in seen:
            raise DuplicatePointError(f"duplicate point at ({x}, {y})")
        seen.add((x, y))
