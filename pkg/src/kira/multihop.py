"""Chain-of-retrieval: residual queries, stopping, compound expansion.

Each hop runs the configured retrieval, accumulates results, and re-ranks
the accumulated set by visual cosine to the ORIGINAL query. Confidence is
the mean of the top-3 cosines of that ranking; the chain stops on
confidence, on no new chunks, or at the hop cap. The residual query for
the next hop subtracts a scaled centroid of the current hop's top results.
Ranking by the original query is what lets the chain restore visual-only
precision once the union of hops covers the visual top-k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .index import RetrievalResult

_DEGENERATE_NORM = 1e-9


@dataclass
class HopConfig:
    max_hops: int = 3
    conf_threshold: float = 0.85
    beta: float = 0.3
    top_k: int = 5  # per-hop head used for the residual centroid


@dataclass
class HopRecord:
    hop: int
    query: np.ndarray
    new_chunk_ids: list[str]
    confidence: float
    stop_reason: str | None = None  # confidence | max_hops | no_new_chunks


@dataclass
class HopTrace:
    hops: list[HopRecord] = field(default_factory=list)

    @property
    def stop_reason(self) -> str:
        return self.hops[-1].stop_reason

    def to_dict(self) -> dict:
        return {
            "stop_reason": self.stop_reason,
            "hops": [
                {
                    "hop": h.hop,
                    "new_chunk_ids": list(h.new_chunk_ids),
                    "confidence": h.confidence,
                    "stop_reason": h.stop_reason,
                }
                for h in self.hops
            ],
        }


def residual_query(
    q: np.ndarray, mean_embedding: np.ndarray, beta: float
) -> tuple[np.ndarray, bool]:
    """normalize(q - beta * mean); returns (vector, degenerate).

    Near-exact cancellation returns q unchanged with degenerate=True.
    """
    q = np.asarray(q, dtype=np.float64)
    mean_embedding = np.asarray(mean_embedding, dtype=np.float64)
    if q.shape != mean_embedding.shape:
        raise ValueError(
            f"dimension mismatch: {q.shape} vs {mean_embedding.shape}"
        )
    shifted = q - beta * mean_embedding
    norm = float(np.linalg.norm(shifted))
    if norm < _DEGENERATE_NORM:
        return q, True
    return shifted / norm, False


def compute_confidence(results: list[RetrievalResult]) -> float:
    """Mean of the top-3 (or fewer) result scores, clamped to [0, 1].

    Callers pass results ranked by visual cosine to the original query, so
    the scores here are those cosines. Empty input scores 0.
    """
    if not results:
        return 0.0
    top = [r.score for r in results[:3]]
    return float(np.clip(np.mean(top), 0.0, 1.0))


def chain_retrieve(
    query: np.ndarray,
    retrieve: Callable[[np.ndarray], list[RetrievalResult]],
    embedding_of: Callable[[str], np.ndarray],
    cfg: HopConfig | None = None,
) -> tuple[list[RetrievalResult], HopTrace]:
    """Iterative retrieve loop; returns the accumulated results re-ranked by
    visual cosine to the original query, plus the hop trace."""
    cfg = cfg or HopConfig()
    query = np.asarray(query, dtype=np.float64)
    trace = HopTrace()
    first_seen: dict[str, RetrievalResult] = {}
    q = query
    for hop in range(1, cfg.max_hops + 1):
        hop_results = retrieve(q)
        new_ids = []
        for r in hop_results:
            if r.chunk_id not in first_seen:
                first_seen[r.chunk_id] = RetrievalResult(
                    chunk_id=r.chunk_id,
                    score=r.score,
                    path=r.path,
                    rank=r.rank,
                    hop=hop,
                )
                new_ids.append(r.chunk_id)
        ranked = _rank_by_original(query, first_seen, embedding_of)
        confidence = compute_confidence(ranked)
        record = HopRecord(
            hop=hop, query=q.copy(), new_chunk_ids=new_ids, confidence=confidence
        )
        trace.hops.append(record)
        if confidence > cfg.conf_threshold:
            record.stop_reason = "confidence"
        elif not new_ids:
            record.stop_reason = "no_new_chunks"
        elif hop == cfg.max_hops:
            record.stop_reason = "max_hops"
        if record.stop_reason:
            return ranked, trace
        head = hop_results[: cfg.top_k]
        centroid = np.mean([embedding_of(r.chunk_id) for r in head], axis=0)
        q, _degenerate = residual_query(q, centroid, cfg.beta)
    raise AssertionError("unreachable: loop always sets a stop reason")


def _rank_by_original(
    query: np.ndarray,
    first_seen: dict[str, RetrievalResult],
    embedding_of: Callable[[str], np.ndarray],
) -> list[RetrievalResult]:
    scored = sorted(
        (
            (cid, float(embedding_of(cid) @ query))
            for cid in first_seen
        ),
        key=lambda t: (-t[1], t[0]),
    )
    return [
        RetrievalResult(
            chunk_id=cid,
            score=score,
            path=first_seen[cid].path,
            rank=i + 1,
            hop=first_seen[cid].hop,
        )
        for i, (cid, score) in enumerate(scored)
    ]


def expand_compound(
    results: list[RetrievalResult],
    doc_of: Callable[[str], str],
    groups_for_doc: Callable[[str], list],
    discounts: dict[str, float] | None = None,
) -> list[RetrievalResult]:
    """Pull in compound-group mates of retrieved documents.

    Any retrieved chunk (region/patch hits count via their document)
    triggers its document's groups; absent mate document chunks are added
    at the triggering score times the kind's discount. A mate reachable
    several ways keeps its highest score. Existing results are never
    lowered.
    """
    discounts = discounts or {"temporal": 0.8, "multiview": 0.7}
    present = {r.chunk_id for r in results}
    additions: dict[str, float] = {}
    for r in results:
        doc_id = doc_of(r.chunk_id)
        for group in groups_for_doc(doc_id):
            discount = discounts[group.kind]
            for mate_doc in group.member_doc_ids:
                if mate_doc == doc_id:
                    continue
                mate_chunk = f"{mate_doc}:doc"
                if mate_chunk in present:
                    continue
                candidate = r.score * discount
                if candidate > additions.get(mate_chunk, -np.inf):
                    additions[mate_chunk] = candidate
    if not additions:
        return list(results)
    by_id = {r.chunk_id: r for r in results}
    scored = [(r.chunk_id, r.score) for r in results]
    scored += sorted(additions.items())
    scored.sort(key=lambda t: (-t[1], t[0]))
    out = []
    for i, (cid, score) in enumerate(scored):
        base = by_id.get(cid)
        out.append(
            RetrievalResult(
                chunk_id=cid,
                score=float(score),
                path=base.path if base else "visual",
                rank=i + 1,
                hop=base.hop if base else max(r.hop for r in results),
            )
        )
    return out
