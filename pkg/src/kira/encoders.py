"""Pluggable encoder contract with deterministic synthetic implementations.

The engine only assumes the contract below; real-model embeddings can be
loaded from KIRAEMB1 files in place of the synthetic ones.

* image embeddings: 768-d unit vectors
* text embeddings: 384-d unit vectors
* caption(image, prompt) -> str
* cross_score(query_text, candidate_text) -> [0, 1]
"""

from __future__ import annotations

import hashlib
from typing import Protocol

import numpy as np

from .text import content_tokens, tokenize

IMAGE_DIM = 768
TEXT_DIM = 384

_FEATURE_GRID = 8  # 8x8 patch statistics grid


class ImageEncoder(Protocol):
    def embed_image(self, image: np.ndarray) -> np.ndarray: ...


class TextEncoder(Protocol):
    def embed_text(self, text: str) -> np.ndarray: ...


class Captioner(Protocol):
    def caption(self, image: np.ndarray, prompt: str) -> str: ...


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("zero vector cannot be normalized")
    return (vec / norm).astype(np.float64)


def patch_statistics(image: np.ndarray, grid: int = _FEATURE_GRID) -> np.ndarray:
    """Per-cell mean / std / edge-energy over a grid x grid tiling.

    The crop is trimmed to a multiple of `grid` in each dimension. Feature
    groups are rescaled to comparable magnitudes so no single statistic
    dominates the projection.
    """
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    if height < grid or width < grid:
        raise ValueError(f"image {image.shape} smaller than feature grid {grid}")
    height -= height % grid
    width -= width % grid
    image = image[:height, :width]
    blocks = image.reshape(grid, height // grid, grid, width // grid)
    means = blocks.mean(axis=(1, 3))
    stds = blocks.std(axis=(1, 3))
    gy = np.abs(np.diff(image, axis=0))
    gx = np.abs(np.diff(image, axis=1))
    edge = np.zeros_like(image)
    edge[:-1, :] += gy
    edge[:, :-1] += gx
    edge_blocks = edge.reshape(grid, height // grid, grid, width // grid)
    edges = edge_blocks.mean(axis=(1, 3))
    return np.concatenate(
        [(means - 0.5).ravel(), 4.0 * stds.ravel(), 8.0 * edges.ravel()]
    )


class SyntheticImageEncoder:
    """Patch statistics pushed through a fixed seeded random projection."""

    def __init__(self, seed: int = 0, dim: int = IMAGE_DIM):
        self.seed = seed
        self.dim = dim
        n_features = 3 * _FEATURE_GRID * _FEATURE_GRID
        rng = np.random.default_rng(seed)
        self.projection = rng.standard_normal((dim, n_features)) / np.sqrt(n_features)

    def embed_image(self, image: np.ndarray) -> np.ndarray:
        feats = patch_statistics(image)
        return _normalize(self.projection @ feats)


class SyntheticTextEncoder:
    """Signed feature hashing of normalized tokens (bag-of-tokens)."""

    def __init__(self, dim: int = TEXT_DIM):
        self.dim = dim

    def embed_text(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError(f"no tokens after normalization: {text!r}")
        vec = np.zeros(self.dim)
        for token in tokens:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            value = int.from_bytes(digest, "little")
            index = value % self.dim
            sign = 1.0 if (value >> 32) & 1 else -1.0
            vec[index] += sign
        if not vec.any():
            # Possible only via exact sign cancellation of repeated tokens.
            raise ValueError(f"degenerate hashed vector for {text!r}")
        return _normalize(vec)


def cross_score(query_text: str, candidate_text: str) -> float:
    """Jaccard similarity of content-token sets; 0 if both sets are empty."""
    a = content_tokens(query_text)
    b = content_tokens(candidate_text)
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


class SyntheticCaptioner:
    """Class-prototype captioner standing in for a pretrained model.

    Holds one base-embedding prototype per class label; captions an image
    as its nearest class, using that class's template caption and concept
    phrases. Deterministic given construction inputs.
    """

    def __init__(
        self,
        image_encoder: ImageEncoder,
        prototypes: dict[str, np.ndarray],
        concepts: dict[str, list[str]],
        caption_for_label,
        noun: str = "image",
    ):
        if not prototypes:
            raise ValueError("captioner needs at least one class prototype")
        self.image_encoder = image_encoder
        self.labels = sorted(prototypes)
        self.matrix = np.stack([prototypes[lbl] for lbl in self.labels])
        self.concepts = concepts
        self.caption_for_label = caption_for_label
        self.noun = noun

    def classify(self, image: np.ndarray) -> str:
        emb = self.image_encoder.embed_image(image)
        sims = self.matrix @ emb
        return self.labels[int(np.argmax(sims))]

    def caption(self, image: np.ndarray, prompt: str) -> str:
        label = self.classify(image)
        sentences = [self.caption_for_label(label)]
        for phrase in self.concepts.get(label, []):
            sentences.append(
                f"close up of {phrase} is visible in this {self.noun} image."
            )
        return " ".join(sentences)
