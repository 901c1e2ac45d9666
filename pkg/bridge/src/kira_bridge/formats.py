"""Engine file formats, written independently from the engine itself.

The bridge talks to the engine only through files, so this module carries
its own implementation of the byte layouts:

* ``KIRAIMG1`` / ``KIRAATT1`` — 8-byte ASCII magic, u32 width, u32 height,
  then width*height little-endian float32 cells, row-major.
* ``KIRAEMB1`` — magic, u32 dim, u32 count, count*dim float32, then count
  newline-delimited chunk ids in UTF-8.

All writes are all-or-nothing: the payload goes to a temp file in the
target directory and is atomically renamed into place, so a crashed or
failed export can never leave a partial file behind.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC_IMAGE = b"KIRAIMG1"
MAGIC_ATTENTION = b"KIRAATT1"
MAGIC_EMBEDDINGS = b"KIRAEMB1"


class FormatError(ValueError):
    """Raised when a file does not match its declared format."""


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write via temp file + rename so the target is never partial."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_magic(data: bytes, magic: bytes, path: Path) -> None:
    if data[:8] != magic:
        raise FormatError(f"{path}: expected magic {magic!r}, got {data[:8]!r}")


def read_image_grid(path: str | Path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    _check_magic(data, MAGIC_IMAGE, path)
    width, height = struct.unpack("<II", data[8:16])
    if len(data) != 16 + width * height * 4:
        raise FormatError(f"{path}: truncated image payload")
    return np.frombuffer(data, dtype="<f4", offset=16).reshape(height, width)


def write_attention_map(path: str | Path, grid: np.ndarray) -> None:
    grid = np.asarray(grid, dtype=np.float32)
    if grid.ndim != 2:
        raise FormatError(f"attention map must be 2-D, got shape {grid.shape}")
    height, width = grid.shape
    payload = (
        MAGIC_ATTENTION + struct.pack("<II", width, height)
        + grid.astype("<f4").tobytes()
    )
    atomic_write_bytes(path, payload)


def read_attention_map(path: str | Path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    _check_magic(data, MAGIC_ATTENTION, path)
    width, height = struct.unpack("<II", data[8:16])
    if len(data) != 16 + width * height * 4:
        raise FormatError(f"{path}: truncated attention payload")
    return np.frombuffer(data, dtype="<f4", offset=16).reshape(height, width)


def write_embeddings(path: str | Path, ids: list[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise FormatError(
            f"embedding matrix shape {matrix.shape} does not match {len(ids)} ids"
        )
    count, dim = matrix.shape
    payload = MAGIC_EMBEDDINGS + struct.pack("<II", dim, count)
    payload += matrix.astype("<f4").tobytes()
    payload += "".join(f"{i}\n" for i in ids).encode("utf-8")
    atomic_write_bytes(path, payload)


def read_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    data = path.read_bytes()
    _check_magic(data, MAGIC_EMBEDDINGS, path)
    dim, count = struct.unpack("<II", data[8:16])
    matrix = np.frombuffer(data, dtype="<f4", offset=16, count=dim * count)
    matrix = matrix.reshape(count, dim)
    ids = data[16 + dim * count * 4 :].decode("utf-8").splitlines()
    if len(ids) != count:
        raise FormatError(f"{path}: expected {count} ids, got {len(ids)}")
    return ids, matrix


def write_jsonl(path: str | Path, records: list[dict]) -> None:
    payload = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    atomic_write_bytes(path, payload.encode("utf-8"))


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records
