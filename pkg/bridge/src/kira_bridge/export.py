"""Exporters: corpus directory -> engine-format embedding/caption/attention
files plus a checksummed manifest.

Input is a built corpus directory as the engine lays it out: a
``manifest.jsonl`` with one record per chunk (chunk_id, doc_id, bbox) and
an ``images/`` directory of KIRAIMG1 document images. Output files go to a
separate export directory; every write is atomic and the export manifest
records a sha256 per file so a consumer can verify the round trip.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .backends import (
    IMAGE_DIM,
    AttentionBackend,
    CaptionBackend,
    ImageBackend,
)

MANIFEST_NAME = "export_manifest.json"

DIMS = {"image": IMAGE_DIM, "text": 384}


class ExportError(RuntimeError):
    """Raised when a corpus input is missing or a backend output is invalid."""


@dataclass
class ChunkRef:
    chunk_id: str
    doc_id: str
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1


@dataclass
class ExportManifest:
    models: dict[str, str]
    corpus_dir: str
    outputs: dict[str, str]  # kind -> relative path (attention: directory)
    checksums: dict[str, str]  # relative file path -> sha256 hex
    dims: dict[str, int] = field(default_factory=lambda: dict(DIMS))

    def save(self, root: str | Path) -> Path:
        path = Path(root) / MANIFEST_NAME
        payload = {
            "models": self.models,
            "corpus_dir": self.corpus_dir,
            "outputs": self.outputs,
            "checksums": self.checksums,
            "dims": self.dims,
        }
        formats.atomic_write_bytes(
            path, json.dumps(payload, indent=2, sort_keys=True).encode("utf-8")
        )
        return path

    @classmethod
    def load(cls, root: str | Path) -> "ExportManifest":
        payload = json.loads(
            (Path(root) / MANIFEST_NAME).read_text(encoding="utf-8")
        )
        return cls(
            models=payload["models"],
            corpus_dir=payload["corpus_dir"],
            outputs=payload["outputs"],
            checksums=payload["checksums"],
            dims=payload["dims"],
        )

    def verify(self, root: str | Path) -> list[str]:
        """Re-hash every output file; returns mismatched relative paths."""
        root = Path(root)
        bad = []
        for rel, expected in sorted(self.checksums.items()):
            path = root / rel
            if not path.exists() or _sha256(path) != expected:
                bad.append(rel)
        return bad


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_corpus_manifest(corpus_dir: str | Path) -> list[ChunkRef]:
    path = Path(corpus_dir) / "manifest.jsonl"
    if not path.exists():
        raise ExportError(f"no corpus manifest at {path}")
    refs = []
    for rec in formats.read_jsonl(path):
        refs.append(
            ChunkRef(
                chunk_id=rec["chunk_id"],
                doc_id=rec["doc_id"],
                bbox=tuple(rec["bbox"]),
            )
        )
    if not refs:
        raise ExportError(f"{path}: empty corpus manifest")
    return refs


def _load_images(corpus_dir: Path, refs: list[ChunkRef]) -> dict[str, np.ndarray]:
    images: dict[str, np.ndarray] = {}
    for ref in refs:
        if ref.doc_id in images:
            continue
        path = corpus_dir / "images" / f"{ref.doc_id}.kimg"
        if not path.exists():
            raise ExportError(f"missing image for chunk {ref.chunk_id}: {path}")
        images[ref.doc_id] = formats.read_image_grid(path).astype(np.float64)
    return images


def _crop(image: np.ndarray, bbox: tuple[int, int, int, int]) -> np.ndarray:
    x0, y0, x1, y1 = bbox
    return image[y0:y1, x0:x1]


def export_image_embeddings(
    corpus_dir: str | Path, backend: ImageBackend, out_path: str | Path
) -> tuple[list[str], np.ndarray]:
    """One unit vector per chunk crop, in corpus manifest order."""
    corpus_dir = Path(corpus_dir)
    refs = read_corpus_manifest(corpus_dir)
    images = _load_images(corpus_dir, refs)
    vectors = []
    for ref in refs:
        vec = np.asarray(backend.embed_image(_crop(images[ref.doc_id], ref.bbox)))
        if vec.shape != (IMAGE_DIM,):
            raise ExportError(
                f"{ref.chunk_id}: backend returned shape {vec.shape}, "
                f"expected ({IMAGE_DIM},)"
            )
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-6:
            vec = vec / norm
        vectors.append(vec)
    ids = [r.chunk_id for r in refs]
    matrix = np.stack(vectors).astype(np.float32)
    formats.write_embeddings(out_path, ids, matrix)
    return ids, matrix


def export_captions(
    corpus_dir: str | Path,
    backend: CaptionBackend,
    out_path: str | Path,
    prompt: str = "describe this image region",
) -> list[dict]:
    """One caption per chunk, keyed by chunk_id, written all-or-nothing."""
    corpus_dir = Path(corpus_dir)
    refs = read_corpus_manifest(corpus_dir)
    images = _load_images(corpus_dir, refs)
    records = []
    for ref in refs:
        text = backend.caption(_crop(images[ref.doc_id], ref.bbox), prompt)
        if not text.strip():
            raise ExportError(f"{ref.chunk_id}: backend produced an empty caption")
        records.append({"chunk_id": ref.chunk_id, "caption": text})
    formats.write_jsonl(out_path, records)
    return records


def export_attention(
    corpus_dir: str | Path, backend: AttentionBackend, out_dir: str | Path
) -> list[Path]:
    """One KIRAATT1 map per document image."""
    corpus_dir = Path(corpus_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    refs = read_corpus_manifest(corpus_dir)
    images = _load_images(corpus_dir, refs)
    written = []
    for doc_id in sorted(images):
        att = np.asarray(backend.attention(images[doc_id]))
        if att.ndim != 2:
            raise ExportError(f"{doc_id}: attention map must be 2-D, got {att.shape}")
        if (att < 0).any():
            raise ExportError(f"{doc_id}: attention map has negative cells")
        path = out_dir / f"{doc_id}.katt"
        formats.write_attention_map(path, att)
        written.append(path)
    return written


def run_export(
    corpus_dir: str | Path,
    out_dir: str | Path,
    image_backend: ImageBackend,
    caption_backend: CaptionBackend,
    attention_backend: AttentionBackend,
    prompt: str = "describe this image region",
) -> ExportManifest:
    """Full export: embeddings + captions + attention + checksummed manifest."""
    corpus_dir = Path(corpus_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    emb_path = out_dir / "external.kiraemb"
    cap_path = out_dir / "captions.jsonl"
    att_dir = out_dir / "attention"
    export_image_embeddings(corpus_dir, image_backend, emb_path)
    export_captions(corpus_dir, caption_backend, cap_path, prompt)
    att_files = export_attention(corpus_dir, attention_backend, att_dir)

    checksums = {
        str(p.relative_to(out_dir)): _sha256(p)
        for p in [emb_path, cap_path, *att_files]
    }
    manifest = ExportManifest(
        models={
            "image": image_backend.model_id,
            "caption": caption_backend.model_id,
            "attention": attention_backend.model_id,
        },
        corpus_dir=str(corpus_dir),
        outputs={
            "embeddings": emb_path.name,
            "captions": cap_path.name,
            "attention": att_dir.name,
        },
        checksums=checksums,
    )
    manifest.save(out_dir)
    return manifest
