"""Knowledge-Indexed Retrieval Architecture: a visual retrieval-augmented
pipeline over synthetic expert-domain corpora.

The package covers five stages: hierarchical ingestion and chunking,
triplet-based domain adaptation of a projection head, dual-path fused
retrieval with query expansion and multi-hop chaining, grounded answer
generation with hallucination flagging, and a multi-domain benchmark with
a six-variant ablation.
"""

from .adapt import ProjectionHead, TrainConfig, fewshot_adapt, train
from .benchmark import (
    AblationResult,
    MetricsReport,
    check_ablation_invariants,
    feedback_loop,
    run_ablation,
    run_variant,
)
from .chunker import BBox, Chunk, chunk_document, compute_attention_map, detect_regions
from .corpus import (
    Corpus,
    DOMAIN_IDS,
    DomainSpec,
    build_all_corpora,
    build_domain_corpus,
    generate_image,
)
from .encoders import SyntheticCaptioner, SyntheticImageEncoder, SyntheticTextEncoder
from .index import DualIndex, FusionConfig, RetrievalResult, fuse_rrf, rerank_cross
from .multihop import HopConfig, chain_retrieve, expand_compound, residual_query
from .pipeline import Pipeline, PipelineConfig, VARIANTS, VARIANTS_BY_NAME, VariantConfig
from .reasoner import EvidencePack, GroundingReport, build_evidence_pack, verify
from .storage import load_corpus, save_corpus

__version__ = "0.1.0"

__all__ = [
    "AblationResult",
    "BBox",
    "Chunk",
    "Corpus",
    "DOMAIN_IDS",
    "DomainSpec",
    "DualIndex",
    "EvidencePack",
    "FusionConfig",
    "GroundingReport",
    "HopConfig",
    "MetricsReport",
    "Pipeline",
    "PipelineConfig",
    "ProjectionHead",
    "RetrievalResult",
    "SyntheticCaptioner",
    "SyntheticImageEncoder",
    "SyntheticTextEncoder",
    "TrainConfig",
    "VARIANTS",
    "VARIANTS_BY_NAME",
    "VariantConfig",
    "build_all_corpora",
    "build_domain_corpus",
    "build_evidence_pack",
    "chain_retrieve",
    "check_ablation_invariants",
    "chunk_document",
    "compute_attention_map",
    "detect_regions",
    "expand_compound",
    "feedback_loop",
    "fewshot_adapt",
    "fuse_rrf",
    "generate_image",
    "load_corpus",
    "rerank_cross",
    "residual_query",
    "run_ablation",
    "run_variant",
    "save_corpus",
    "train",
    "verify",
]
