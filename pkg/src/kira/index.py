"""Dual-path retrieval: visual and text indices, RRF fusion, re-ranking.

Search is exact (full scan) — the corpora are a few hundred chunks per
domain and exactness keeps everything oracle-testable. All orderings are
deterministic: descending score with ties broken by ascending chunk id.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .encoders import TextEncoder, cross_score


@dataclass(frozen=True)
class RetrievalResult:
    chunk_id: str
    score: float
    path: str  # visual | text | both
    rank: int  # 1-based
    hop: int = 1


@dataclass
class FusionConfig:
    alpha: float = 0.6  # visual path weight
    rrf_k: int = 60
    rerank_blend_original: float = 0.4
    rerank_blend_cross: float = 0.6
    top_k: int = 5

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if abs(self.rerank_blend_original + self.rerank_blend_cross - 1.0) > 1e-9:
            raise ValueError("rerank blend weights must sum to 1")


def _ranked(scored: list[tuple[str, float]], path_of, hop_of=None) -> list[RetrievalResult]:
    """Sort by (-score, chunk_id) and assign contiguous 1-based ranks."""
    scored = sorted(scored, key=lambda t: (-t[1], t[0]))
    return [
        RetrievalResult(
            chunk_id=cid,
            score=float(score),
            path=path_of(cid),
            rank=i + 1,
            hop=hop_of(cid) if hop_of else 1,
        )
        for i, (cid, score) in enumerate(scored)
    ]


class DualIndex:
    """Visual embeddings plus caption text for one corpus."""

    def __init__(
        self,
        chunk_ids: list[str],
        visual: np.ndarray,
        captions: list[str],
        text_encoder: TextEncoder,
    ):
        if len(chunk_ids) == 0:
            raise ValueError("empty index")
        if not len(chunk_ids) == len(visual) == len(captions):
            raise ValueError("index inputs out of alignment")
        self.chunk_ids = list(chunk_ids)
        self.visual = np.asarray(visual, dtype=np.float64)
        self.captions = list(captions)
        self.text_encoder = text_encoder
        self.caption_emb = np.stack([text_encoder.embed_text(c) for c in captions])
        self._row = {cid: i for i, cid in enumerate(chunk_ids)}

    def embedding_of(self, chunk_id: str) -> np.ndarray:
        return self.visual[self._row[chunk_id]]

    def caption_of(self, chunk_id: str) -> str:
        return self.captions[self._row[chunk_id]]

    def search_visual(self, query: np.ndarray, k: int) -> list[RetrievalResult]:
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.visual.shape[1],):
            raise ValueError(
                f"query dim {query.shape} does not match index dim "
                f"{self.visual.shape[1]}"
            )
        sims = self.visual @ query
        scored = list(zip(self.chunk_ids, sims.tolist()))
        return _ranked(scored, lambda _: "visual")[:k]

    def search_text(self, hypotheses: list[str], k: int) -> list[RetrievalResult]:
        hypotheses = [h for h in hypotheses if h.strip()]
        if not hypotheses:
            raise ValueError("no non-empty hypotheses")
        hyp_emb = np.stack([self.text_encoder.embed_text(h) for h in hypotheses])
        sims = (self.caption_emb @ hyp_emb.T).max(axis=1)
        scored = list(zip(self.chunk_ids, sims.tolist()))
        return _ranked(scored, lambda _: "text")[:k]


def fuse_rrf(
    visual: list[RetrievalResult],
    text: list[RetrievalResult],
    cfg: FusionConfig,
) -> list[RetrievalResult]:
    """Weighted reciprocal rank fusion over the union of both lists.

    fused(d) = alpha/(rrf_k + rank_vis(d)) + (1-alpha)/(rrf_k + rank_text(d)),
    with missing-list terms contributing 0. Output covers every document
    present in at least one list; truncation is the caller's concern.
    """
    vis_rank = {r.chunk_id: r.rank for r in visual}
    txt_rank = {r.chunk_id: r.rank for r in text}
    scored = []
    for cid in sorted(set(vis_rank) | set(txt_rank)):
        score = 0.0
        if cid in vis_rank:
            score += cfg.alpha / (cfg.rrf_k + vis_rank[cid])
        if cid in txt_rank:
            score += (1.0 - cfg.alpha) / (cfg.rrf_k + txt_rank[cid])
        scored.append((cid, score))

    def path_of(cid: str) -> str:
        if cid in vis_rank and cid in txt_rank:
            return "both"
        return "visual" if cid in vis_rank else "text"

    return _ranked(scored, path_of)


def _minmax(values: np.ndarray) -> np.ndarray:
    """Min-max to [0, 1]; a constant set maps to all-ones."""
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        return np.ones_like(values)
    return (values - lo) / (hi - lo)


def rerank_cross(
    query_text: str,
    candidates: list[RetrievalResult],
    captions: dict[str, str],
    cfg: FusionConfig,
) -> list[RetrievalResult]:
    """Blend min-max-normalized original scores with cross-scorer scores."""
    if not candidates:
        raise ValueError("no candidates to re-rank")
    orig = _minmax(np.array([r.score for r in candidates]))
    cross = _minmax(
        np.array([cross_score(query_text, captions[r.chunk_id]) for r in candidates])
    )
    blended = cfg.rerank_blend_original * orig + cfg.rerank_blend_cross * cross
    by_id = {r.chunk_id: r for r in candidates}
    scored = [(r.chunk_id, float(b)) for r, b in zip(candidates, blended)]
    results = _ranked(scored, lambda cid: by_id[cid].path)
    return [replace(r, hop=by_id[r.chunk_id].hop) for r in results]
