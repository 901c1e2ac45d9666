"""Hierarchical chunking: saliency maps, region detection, chunk trees.

A document image is chunked at three levels: one *document* chunk covering
the whole image, one *region* chunk per detected salient region, and a
grid_n x grid_n grid of *patch* chunks. Regions come from thresholding a
saliency map at mu + 0.5*sigma and labeling 4-connected components.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

# 4-connectivity structure for component labeling.
_STRUCTURE_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class BBox:
    """Pixel bounding box, inclusive-exclusive."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"degenerate bbox {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def contains(self, other: "BBox") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and other.x1 <= self.x1
            and other.y1 <= self.y1
        )


@dataclass
class Chunk:
    """One indexed retrieval unit. Embedding/caption are filled at ingestion."""

    chunk_id: str
    doc_id: str
    level: str  # document | region | patch
    bbox: BBox
    parent_id: str | None = None
    embedding: np.ndarray | None = None
    caption: str = ""
    provenance: str = ""

    def validate(self) -> None:
        if self.level == "document":
            if self.parent_id is not None:
                raise ValueError(f"{self.chunk_id}: document chunk has a parent")
        elif self.level in ("region", "patch"):
            if self.parent_id is None:
                raise ValueError(f"{self.chunk_id}: {self.level} chunk lacks a parent")
        else:
            raise ValueError(f"{self.chunk_id}: unknown level {self.level!r}")
        if self.embedding is not None:
            norm = float(np.linalg.norm(self.embedding))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"{self.chunk_id}: embedding norm {norm}")


def compute_attention_map(image: np.ndarray, cell: int) -> np.ndarray:
    """Per-cell intensity variance of the image — a saliency proxy.

    `cell` must divide both image dimensions.
    """
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    if cell <= 0 or height % cell or width % cell:
        raise ValueError(f"cell {cell} does not divide image shape {image.shape}")
    blocks = image.reshape(height // cell, cell, width // cell, cell)
    return blocks.var(axis=(1, 3))


def detect_regions(attention: np.ndarray, cell: int = 1) -> list[BBox]:
    """Threshold at mu + 0.5*sigma (population), label 4-connected components.

    Returns one tight bbox per component in pixel coordinates (cell size
    `cell`), ordered by descending component area, ties by (y0, x0).
    Single-cell components are kept; a constant map yields no regions
    (strict > at the threshold).
    """
    attention = np.asarray(attention, dtype=np.float64)
    if attention.size == 0:
        raise ValueError("empty attention map")
    threshold = attention.mean() + 0.5 * attention.std()
    mask = attention > threshold
    labels, n_components = ndimage.label(mask, structure=_STRUCTURE_4)
    regions: list[tuple[int, int, int, BBox]] = []
    for index, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        ys, xs = sl
        area = int((labels[sl] == index).sum())
        bbox = BBox(
            x0=xs.start * cell,
            y0=ys.start * cell,
            x1=xs.stop * cell,
            y1=ys.stop * cell,
        )
        regions.append((-area, bbox.y0, bbox.x0, bbox))
    regions.sort(key=lambda r: r[:3])
    return [r[3] for r in regions]


def patch_grid(width: int, height: int, grid_n: int) -> list[BBox]:
    """grid_n x grid_n near-equal patches tiling the full image."""
    xs = [round(i * width / grid_n) for i in range(grid_n + 1)]
    ys = [round(i * height / grid_n) for i in range(grid_n + 1)]
    boxes = []
    for gy in range(grid_n):
        for gx in range(grid_n):
            boxes.append(BBox(xs[gx], ys[gy], xs[gx + 1], ys[gy + 1]))
    return boxes


def chunk_document(
    doc_id: str,
    image: np.ndarray,
    attention: np.ndarray,
    cell: int,
    grid_n: int = 3,
) -> list[Chunk]:
    """Build the chunk tree for one document image.

    Returns the document chunk first, then region chunks (detector order),
    then patch chunks in row-major order. Embeddings and captions are left
    for the caller to fill.
    """
    if grid_n < 1:
        raise ValueError(f"grid_n must be >= 1, got {grid_n}")
    height, width = np.asarray(image).shape
    doc_chunk_id = f"{doc_id}:doc"
    doc_bbox = BBox(0, 0, width, height)
    chunks = [
        Chunk(
            chunk_id=doc_chunk_id,
            doc_id=doc_id,
            level="document",
            bbox=doc_bbox,
            provenance=f"{doc_id} document {width}x{height}",
        )
    ]
    for i, bbox in enumerate(detect_regions(attention, cell=cell)):
        chunks.append(
            Chunk(
                chunk_id=f"{doc_id}:reg{i}",
                doc_id=doc_id,
                level="region",
                bbox=bbox,
                parent_id=doc_chunk_id,
                provenance=f"{doc_id} region {bbox.width}x{bbox.height}"
                f" at ({bbox.x0},{bbox.y0})",
            )
        )
    for i, bbox in enumerate(patch_grid(width, height, grid_n)):
        chunks.append(
            Chunk(
                chunk_id=f"{doc_id}:pat{i}",
                doc_id=doc_id,
                level="patch",
                bbox=bbox,
                parent_id=doc_chunk_id,
                provenance=f"{doc_id} patch {bbox.width}x{bbox.height}"
                f" at ({bbox.x0},{bbox.y0})",
            )
        )
    return chunks


def crop(image: np.ndarray, bbox: BBox) -> np.ndarray:
    return np.asarray(image)[bbox.y0 : bbox.y1, bbox.x0 : bbox.x1]
