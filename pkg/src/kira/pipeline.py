"""End-to-end query pipeline with per-variant feature flags.

One Pipeline instance wraps a domain corpus, its trained projection head,
and the encoders, and executes a query under a VariantConfig: visual (and
optionally text/expanded) retrieval, optional multi-hop chaining, evidence
pack construction (optionally compound-expanded and cross-re-ranked),
answer generation, and grounding verification.

Retrieval metrics are always computed on the retrieval-stage ranking; the
re-ranker and compound expansion shape the evidence pack downstream and by
design leave retrieval precision untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adapt import ProjectionHead
from .corpus import Corpus, DOMAIN_NOUNS, caption_for_label
from .encoders import (
    SyntheticCaptioner,
    SyntheticImageEncoder,
    SyntheticTextEncoder,
)
from .expansion import (
    ConceptBank,
    concept_bank_score,
    cot_expand,
    merge_dedupe_rank,
)
from .index import DualIndex, FusionConfig, RetrievalResult, fuse_rrf, rerank_cross
from .multihop import HopConfig, HopTrace, chain_retrieve, expand_compound
from .reasoner import (
    EvidencePack,
    GroundingReport,
    annotate_direct_answer,
    build_evidence_pack,
    build_rationale_card,
    generate_answer,
    verify,
)


@dataclass(frozen=True)
class VariantConfig:
    name: str
    enable_text_path: bool = False
    enable_query_expansion: bool = False
    enable_multihop: bool = False
    enable_grounded_mode: bool = False
    enable_reranker: bool = False
    enable_compound: bool = False


# The six progressively-enabled ablation variants.
VARIANTS = [
    VariantConfig(name="visual_only"),
    VariantConfig(name="dual_path", enable_text_path=True),
    VariantConfig(
        name="query_expansion", enable_text_path=True, enable_query_expansion=True
    ),
    VariantConfig(
        name="multi_hop",
        enable_text_path=True,
        enable_query_expansion=True,
        enable_multihop=True,
    ),
    VariantConfig(
        name="grounded",
        enable_text_path=True,
        enable_query_expansion=True,
        enable_multihop=True,
        enable_grounded_mode=True,
    ),
    VariantConfig(
        name="full",
        enable_text_path=True,
        enable_query_expansion=True,
        enable_multihop=True,
        enable_grounded_mode=True,
        enable_reranker=True,
        enable_compound=True,
    ),
]

VARIANTS_BY_NAME = {v.name: v for v in VARIANTS}


@dataclass
class PipelineConfig:
    fusion: FusionConfig = field(default_factory=FusionConfig)
    hops: HopConfig = field(default_factory=HopConfig)
    fetch_k: int = 50  # per-path candidate depth before fusion
    evidence_limit: int = 5
    hypothesis_limit: int = 8


@dataclass
class QueryOutcome:
    retrieved: list[RetrievalResult]  # retrieval-stage ranking (metrics)
    trace: HopTrace | None
    evidence_results: list[RetrievalResult]  # after compound/rerank
    pack: EvidencePack
    answer: str
    verified_answer: str  # citation-annotated form fed to the verifier
    report: GroundingReport
    card: dict
    hypotheses: list[str]


class Pipeline:
    def __init__(
        self,
        corpus: Corpus,
        head: ProjectionHead,
        image_encoder: SyntheticImageEncoder | None = None,
        text_encoder: SyntheticTextEncoder | None = None,
        captioner=None,
        config: PipelineConfig | None = None,
        visual_embeddings: np.ndarray | None = None,
    ):
        self.corpus = corpus
        self.head = head
        self.image_encoder = image_encoder or SyntheticImageEncoder(seed=0)
        self.text_encoder = text_encoder or SyntheticTextEncoder()
        self.config = config or PipelineConfig()
        ids, base = corpus.base_embeddings()
        projected = (
            visual_embeddings if visual_embeddings is not None else head.project(base)
        )
        captions = [corpus.chunks[cid].caption for cid in ids]
        self.index = DualIndex(ids, projected, captions, self.text_encoder)
        self.labels = {cid: corpus.chunk_label(cid) for cid in ids}
        self.provenances = {cid: corpus.chunks[cid].provenance for cid in ids}
        self.captions = dict(zip(ids, captions))
        self.concept_bank = ConceptBank(
            domain_id=corpus.domain_id, concepts=list(corpus.spec.concept_bank)
        )
        concepts_by_label: dict[str, list[str]] = {}
        for phrase, label in corpus.spec.concept_bank:
            concepts_by_label.setdefault(label, []).append(phrase)
        self.captioner = captioner or SyntheticCaptioner(
            image_encoder=self.image_encoder,
            prototypes=corpus.class_prototypes(),
            concepts=concepts_by_label,
            caption_for_label=lambda lbl: caption_for_label(
                corpus.domain_id, "query", lbl
            ),
            noun=DOMAIN_NOUNS[corpus.domain_id],
        )
        self.cot_prompt = (
            f"look at this {DOMAIN_NOUNS[corpus.domain_id]} step by step and state"
            " the most likely finding"
        )

    # -- retrieval ---------------------------------------------------------

    def embed_query(self, image: np.ndarray) -> np.ndarray:
        return self.head.project(self.image_encoder.embed_image(image))

    def build_hypotheses(
        self, query_image: np.ndarray, query_text: str, variant: VariantConfig
    ) -> list[str]:
        if not variant.enable_text_path:
            return []
        hypotheses = [query_text] if query_text else []
        if variant.enable_query_expansion:
            cot = cot_expand(
                query_image, self.captioner, self.cot_prompt, self.text_encoder
            )
            bank = concept_bank_score(
                query_image, self.concept_bank, self.captioner, self.text_encoder
            )
            merged = merge_dedupe_rank(cot, bank, self.config.hypothesis_limit)
            hypotheses += [h.text for h in merged]
        return hypotheses

    def retrieve_once(
        self, query_vec: np.ndarray, hypotheses: list[str]
    ) -> list[RetrievalResult]:
        fetch_k = self.config.fetch_k
        visual = self.index.search_visual(query_vec, fetch_k)
        if not hypotheses:
            return visual
        text = self.index.search_text(hypotheses, fetch_k)
        return fuse_rrf(visual, text, self.config.fusion)

    def run_query(
        self, query_image: np.ndarray, query_text: str, variant: VariantConfig
    ) -> QueryOutcome:
        query_vec = self.embed_query(query_image)
        hypotheses = self.build_hypotheses(query_image, query_text, variant)
        trace = None
        if variant.enable_multihop:
            retrieved, trace = chain_retrieve(
                query_vec,
                lambda q: self.retrieve_once(q, hypotheses),
                self.index.embedding_of,
                self.config.hops,
            )
        else:
            retrieved = self.retrieve_once(query_vec, hypotheses)

        evidence_results = list(retrieved)
        if variant.enable_compound:
            evidence_results = expand_compound(
                evidence_results,
                doc_of=lambda cid: self.corpus.chunks[cid].doc_id,
                groups_for_doc=self.corpus.groups_for_doc,
            )
        if variant.enable_reranker and evidence_results:
            candidates = evidence_results[: self.config.fetch_k]
            evidence_results = rerank_cross(
                query_text, candidates, self.captions, self.config.fusion
            )
        pack = build_evidence_pack(
            evidence_results,
            self.captions,
            self.provenances,
            limit=self.config.evidence_limit,
        )
        mode = "grounded" if variant.enable_grounded_mode else "direct"
        answer = generate_answer(query_text, pack, mode, self.labels)
        verified_answer = (
            answer if variant.enable_grounded_mode else annotate_direct_answer(answer)
        )
        report = verify(verified_answer, pack)
        card = build_rationale_card(query_text, pack, verified_answer, report)
        if trace is not None:
            card["hop_trace"] = trace.to_dict()
        return QueryOutcome(
            retrieved=retrieved,
            trace=trace,
            evidence_results=evidence_results,
            pack=pack,
            answer=answer,
            verified_answer=verified_answer,
            report=report,
            card=card,
            hypotheses=hypotheses,
        )
