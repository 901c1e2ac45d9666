"""Binary and JSONL file formats used on disk.

All binary formats are little-endian with an 8-byte ASCII magic:

* ``KIRAIMG1`` — image grid: u32 width, u32 height, then width*height float32
  row-major intensities.
* ``KIRAATT1`` — attention map, same layout as the image grid.
* ``KIRAEMB1`` — embeddings: u32 dim, u32 count, count*dim float32, then
  count newline-delimited chunk ids in UTF-8.
* ``KIRAHEAD`` — projection head: u32 in_dim, u32 out_dim, float32 weights
  row-major (out_dim x in_dim), then out_dim float32 bias values.

Corpus manifests and captions are JSON lines; training traces are CSV.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC_IMAGE = b"KIRAIMG1"
MAGIC_ATTENTION = b"KIRAATT1"
MAGIC_EMBEDDINGS = b"KIRAEMB1"
MAGIC_HEAD = b"KIRAHEAD"


class FormatError(ValueError):
    """Raised when a file does not match its declared format."""


def _check_magic(data: bytes, magic: bytes, path: Path) -> None:
    if data[:8] != magic:
        raise FormatError(f"{path}: expected magic {magic!r}, got {data[:8]!r}")


def _write_grid(path: str | Path, magic: bytes, grid: np.ndarray) -> None:
    grid = np.asarray(grid, dtype=np.float32)
    if grid.ndim != 2:
        raise FormatError(f"grid must be 2-D, got shape {grid.shape}")
    height, width = grid.shape
    payload = magic + struct.pack("<II", width, height) + grid.astype("<f4").tobytes()
    Path(path).write_bytes(payload)


def _read_grid(path: str | Path, magic: bytes) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    _check_magic(data, magic, path)
    width, height = struct.unpack("<II", data[8:16])
    expected = 16 + width * height * 4
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(data)}")
    grid = np.frombuffer(data, dtype="<f4", offset=16).reshape(height, width)
    return grid.astype(np.float32)


def write_image_grid(path: str | Path, grid: np.ndarray) -> None:
    _write_grid(path, MAGIC_IMAGE, grid)


def read_image_grid(path: str | Path) -> np.ndarray:
    return _read_grid(path, MAGIC_IMAGE)


def write_attention_map(path: str | Path, grid: np.ndarray) -> None:
    _write_grid(path, MAGIC_ATTENTION, grid)


def read_attention_map(path: str | Path) -> np.ndarray:
    return _read_grid(path, MAGIC_ATTENTION)


def write_embeddings(path: str | Path, ids: list[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise FormatError(
            f"embedding matrix shape {matrix.shape} does not match {len(ids)} ids"
        )
    count, dim = matrix.shape
    body = MAGIC_EMBEDDINGS + struct.pack("<II", dim, count)
    body += matrix.astype("<f4").tobytes()
    body += "".join(f"{i}\n" for i in ids).encode("utf-8")
    Path(path).write_bytes(body)


def read_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    data = path.read_bytes()
    _check_magic(data, MAGIC_EMBEDDINGS, path)
    dim, count = struct.unpack("<II", data[8:16])
    vec_end = 16 + dim * count * 4
    matrix = np.frombuffer(data, dtype="<f4", offset=16, count=dim * count)
    matrix = matrix.reshape(count, dim).astype(np.float32)
    ids = data[vec_end:].decode("utf-8").splitlines()
    if len(ids) != count:
        raise FormatError(f"{path}: expected {count} ids, got {len(ids)}")
    return ids, matrix


def write_head(path: str | Path, weight: np.ndarray, bias: np.ndarray) -> None:
    weight = np.asarray(weight, dtype=np.float32)
    bias = np.asarray(bias, dtype=np.float32)
    out_dim, in_dim = weight.shape
    if bias.shape != (out_dim,):
        raise FormatError(f"bias shape {bias.shape} does not match {out_dim} rows")
    body = MAGIC_HEAD + struct.pack("<II", in_dim, out_dim)
    body += weight.astype("<f4").tobytes() + bias.astype("<f4").tobytes()
    Path(path).write_bytes(body)


def read_head(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    data = path.read_bytes()
    _check_magic(data, MAGIC_HEAD, path)
    in_dim, out_dim = struct.unpack("<II", data[8:16])
    n_w = in_dim * out_dim
    weight = np.frombuffer(data, dtype="<f4", offset=16, count=n_w)
    weight = weight.reshape(out_dim, in_dim).astype(np.float32)
    bias = np.frombuffer(data, dtype="<f4", offset=16 + n_w * 4, count=out_dim)
    return weight, bias.astype(np.float32)


def write_jsonl(path: str | Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def write_trace_csv(path: str | Path, trace: list[tuple[int, float, float]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss,recall_at_1\n")
        for epoch, loss, recall in trace:
            fh.write(f"{epoch},{loss:.6f},{recall:.6f}\n")
