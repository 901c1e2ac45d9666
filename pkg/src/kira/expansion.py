"""Query expansion: chain-of-thought captioning plus concept-bank scoring.

A visual query becomes a set of text hypotheses: the captioner's response
split into sentences, and every concept-bank phrase scored against the
query. The synthetic encoders put images (768-d) and text (384-d) in
incomparable spaces, so concept scoring is caption-mediated: each concept
is compared to the caption of the query image in text space. Real shared-
space embeddings from external encoders can replace this via the bridge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoders import Captioner, TextEncoder
from .text import content_tokens, split_sentences

DEFAULT_HYPOTHESIS_LIMIT = 8

_SOURCE_ORDER = {"cot": 0, "concept_bank": 1}


@dataclass(frozen=True)
class Hypothesis:
    text: str
    source: str  # cot | concept_bank
    clip_score: float


@dataclass
class ConceptBank:
    domain_id: str
    concepts: list[tuple[str, str]]  # (phrase, class_label)

    def __post_init__(self) -> None:
        if not self.concepts:
            raise ValueError("empty concept bank")


def cot_expand(
    query_image: np.ndarray,
    captioner: Captioner,
    prompt: str,
    text_encoder: TextEncoder,
) -> list[Hypothesis]:
    """Split the captioner response into sentence hypotheses.

    The captioner's leading sentence states its categorical conclusion,
    which merely restates what the query is trying to establish, so it is
    dropped; the remaining step-by-step finding sentences become the
    hypotheses. Each is scored by text-space cosine against the full
    response. A response with no finding sentences yields an empty list.
    """
    response = captioner.caption(query_image, prompt)
    sentences = split_sentences(response)[1:]
    if not sentences:
        return []
    response_emb = text_encoder.embed_text(response)
    hypotheses = []
    for sentence in sentences:
        emb = text_encoder.embed_text(sentence)
        hypotheses.append(
            Hypothesis(
                text=sentence,
                source="cot",
                clip_score=float(emb @ response_emb),
            )
        )
    return hypotheses


def concept_bank_score(
    query_image: np.ndarray,
    bank: ConceptBank,
    captioner: Captioner,
    text_encoder: TextEncoder,
    prompt: str = "",
) -> list[Hypothesis]:
    """Score every concept against the query via caption-mediated cosine."""
    query_caption = captioner.caption(query_image, prompt)
    caption_emb = text_encoder.embed_text(query_caption)
    hypotheses = []
    for phrase, _label in bank.concepts:
        emb = text_encoder.embed_text(phrase)
        hypotheses.append(
            Hypothesis(
                text=phrase,
                source="concept_bank",
                clip_score=float(emb @ caption_emb),
            )
        )
    return hypotheses


def merge_dedupe_rank(
    cot: list[Hypothesis],
    bank: list[Hypothesis],
    limit: int = DEFAULT_HYPOTHESIS_LIMIT,
) -> list[Hypothesis]:
    """Union, dedupe by normalized token set (keep higher score), rank.

    Order: descending score, ties by source (cot first) then lexicographic.
    """
    best: dict[frozenset, Hypothesis] = {}
    for hyp in list(cot) + list(bank):
        key = frozenset(content_tokens(hyp.text))
        if not key:
            continue
        current = best.get(key)
        if current is None or _sort_key(hyp) < _sort_key(current):
            best[key] = hyp
    ranked = sorted(best.values(), key=_sort_key)
    return ranked[:limit]


def _sort_key(hyp: Hypothesis):
    return (-hyp.clip_score, _SOURCE_ORDER.get(hyp.source, 9), hyp.text)
