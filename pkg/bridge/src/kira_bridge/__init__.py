"""Exporter bridging real encoder models to the engine's file formats."""

from .backends import (
    IMAGE_DIM,
    AttentionBackend,
    CaptionBackend,
    ImageBackend,
    SeededProjectionImageBackend,
    StatsCaptionBackend,
    VarianceAttentionBackend,
)
from .export import (
    ChunkRef,
    ExportError,
    ExportManifest,
    export_attention,
    export_captions,
    export_image_embeddings,
    read_corpus_manifest,
    run_export,
)
from .formats import FormatError

__all__ = [
    "IMAGE_DIM",
    "AttentionBackend",
    "CaptionBackend",
    "ImageBackend",
    "SeededProjectionImageBackend",
    "StatsCaptionBackend",
    "VarianceAttentionBackend",
    "ChunkRef",
    "ExportError",
    "ExportManifest",
    "export_attention",
    "export_captions",
    "export_image_embeddings",
    "read_corpus_manifest",
    "run_export",
    "FormatError",
]
