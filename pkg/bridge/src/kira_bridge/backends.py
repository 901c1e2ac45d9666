"""Pluggable model backends.

The exporter only needs three capabilities: image embedding, captioning,
and attention extraction. Each is a small protocol so real pretrained
models (a CLIP-style image tower, a BLIP-style captioner, a DINO-style
attention head) can be wrapped and injected without the exporter knowing
anything about ML runtimes.

The deterministic backends below are self-contained stand-ins for offline
runs and tests: seeded, dependency-free, and shaped exactly like the real
thing (768-d unit image vectors, nonnegative attention grids).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

import numpy as np

IMAGE_DIM = 768


@runtime_checkable
class ImageBackend(Protocol):
    model_id: str

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        """Unit-normalized (IMAGE_DIM,) vector for one image crop."""


@runtime_checkable
class CaptionBackend(Protocol):
    model_id: str

    def caption(self, image: np.ndarray, prompt: str) -> str:
        """One caption string for the image under the prompt."""


@runtime_checkable
class AttentionBackend(Protocol):
    model_id: str

    def attention(self, image: np.ndarray) -> np.ndarray:
        """Nonnegative 2-D saliency grid for one document image."""


def _cell_stats(image: np.ndarray, grid: int) -> np.ndarray:
    """Per-cell mean/std/edge features on a grid x grid partition."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    if h < grid or w < grid:
        raise ValueError(f"image {image.shape} smaller than grid {grid}")
    image = image[: h - h % grid, : w - w % grid]
    blocks = image.reshape(grid, image.shape[0] // grid, grid, -1)
    means = blocks.mean(axis=(1, 3))
    stds = blocks.std(axis=(1, 3))
    gy, gx = np.gradient(image)
    edges = np.abs(gy).reshape(grid, -1).mean(axis=1)
    return np.concatenate([means.ravel() - 0.5, stds.ravel(), edges, [gx.std()]])


@dataclass
class SeededProjectionImageBackend:
    """Deterministic stand-in for a pretrained image tower: fixed random
    projection of coarse crop statistics onto the 768-d unit sphere."""

    seed: int = 0
    grid: int = 8
    model_id: str = "seeded-projection/v1"
    _projection: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        rng = np.random.default_rng(self.seed)
        n_feats = 2 * self.grid * self.grid + self.grid + 1
        self._projection = rng.standard_normal((IMAGE_DIM, n_feats))
        self._projection /= np.sqrt(n_feats)

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        feats = _cell_stats(image, self.grid)
        vec = self._projection @ feats
        norm = np.linalg.norm(vec)
        if norm < 1e-12:
            raise ValueError("degenerate image produced a zero embedding")
        return vec / norm


@dataclass
class StatsCaptionBackend:
    """Deterministic stand-in captioner describing simple image statistics."""

    model_id: str = "stats-caption/v1"

    def caption(self, image: np.ndarray, prompt: str) -> str:
        image = np.asarray(image, dtype=np.float64)
        tone = "bright" if image.mean() > 0.5 else "dark"
        texture = "textured" if image.std() > 0.1 else "smooth"
        lead = prompt.strip().rstrip(".") or "describe this image"
        return f"{lead}: a {tone}, {texture} region ({image.shape[0]}x{image.shape[1]})."


@dataclass
class VarianceAttentionBackend:
    """Deterministic stand-in for CLS-to-patch attention: per-cell intensity
    variance, normalized to sum to one (so values are nonnegative)."""

    cell: int = 32
    model_id: str = "variance-attention/v1"

    def attention(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image, dtype=np.float64)
        h, w = image.shape
        if h % self.cell or w % self.cell:
            raise ValueError(f"cell {self.cell} does not divide {image.shape}")
        blocks = image.reshape(h // self.cell, self.cell, w // self.cell, self.cell)
        att = blocks.var(axis=(1, 3))
        total = att.sum()
        return att / total if total > 0 else att
