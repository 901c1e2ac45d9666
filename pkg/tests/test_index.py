import numpy as np
import pytest

from kira.encoders import SyntheticTextEncoder, cross_score
from kira.index import (
    DualIndex,
    FusionConfig,
    RetrievalResult,
    fuse_rrf,
    rerank_cross,
)


def brute_force_top_k(matrix, query, ids, k):
    """Oracle: score every row, sort by (-score, id), take k."""
    scored = [(ids[i], float(matrix[i] @ query)) for i in range(len(ids))]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def _make_index(rng, n=50, dim=16):
    vis = rng.standard_normal((n, dim))
    vis /= np.linalg.norm(vis, axis=1, keepdims=True)
    ids = [f"d{i:03d}:doc" for i in range(n)]
    captions = [f"caption number {i} with token t{i}" for i in range(n)]
    return DualIndex(ids, vis, captions, SyntheticTextEncoder())


def test_search_visual_matches_brute_force_oracle(rng):
    # the full-size sweep lives in the acceptance suite; this is a spot check
    index = _make_index(rng)
    for _ in range(20):
        q = rng.standard_normal(16)
        q /= np.linalg.norm(q)
        got = index.search_visual(q, k=7)
        want = brute_force_top_k(index.visual, q, index.chunk_ids, 7)
        assert [r.chunk_id for r in got] == [cid for cid, _ in want]
        assert [r.score for r in got] == pytest.approx([s for _, s in want])
        assert [r.rank for r in got] == list(range(1, 8))


def test_search_visual_breaks_ties_by_chunk_id():
    vis = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    index = DualIndex(
        ["b:doc", "a:doc", "c:doc"], vis, ["x", "y", "z"], SyntheticTextEncoder()
    )
    got = index.search_visual(np.array([1.0, 0.0]), k=3)
    assert [r.chunk_id for r in got] == ["a:doc", "b:doc", "c:doc"]


def test_search_visual_rejects_dimension_mismatch(rng):
    index = _make_index(rng)
    with pytest.raises(ValueError):
        index.search_visual(np.zeros(17), k=5)


def test_search_text_max_aggregates_over_hypotheses(rng):
    index = _make_index(rng, n=8)
    single = index.search_text(["caption number 3 with token t3"], k=1)
    assert single[0].chunk_id == "d003:doc"
    # adding an unrelated hypothesis cannot lower any chunk's best score
    multi = index.search_text(
        ["caption number 3 with token t3", "completely unrelated words"], k=1
    )
    assert multi[0].chunk_id == "d003:doc"
    assert multi[0].score == pytest.approx(single[0].score)


def test_search_text_rejects_all_blank_hypotheses(rng):
    with pytest.raises(ValueError):
        _make_index(rng).search_text(["", "   "], k=5)


def test_index_rejects_misaligned_inputs():
    with pytest.raises(ValueError):
        DualIndex(["a"], np.zeros((2, 4)), ["x", "y"], SyntheticTextEncoder())
    with pytest.raises(ValueError):
        DualIndex([], np.zeros((0, 4)), [], SyntheticTextEncoder())


def _rr(cid, rank, path="visual"):
    return RetrievalResult(chunk_id=cid, score=1.0 / rank, path=path, rank=rank)


def test_fuse_rrf_hand_worked_values():
    # rank-1 in one list only: alpha/(60+1) resp. (1-alpha)/(60+1);
    # rank-1 in both: their sum = 1/61
    cfg = FusionConfig()
    fused = fuse_rrf([_rr("a", 1), _rr("b", 2)], [_rr("a", 1), _rr("c", 1)], cfg)
    by_id = {r.chunk_id: r for r in fused}
    assert by_id["a"].score == pytest.approx(1 / 61, abs=1e-9)
    assert by_id["a"].score == pytest.approx(0.01639344262295082, abs=1e-9)
    assert by_id["b"].score == pytest.approx(0.6 / 62, abs=1e-9)
    assert by_id["c"].score == pytest.approx(0.4 / 61, abs=1e-9)
    assert by_id["c"].score == pytest.approx(0.006557377049180328, abs=1e-9)
    assert [r.chunk_id for r in fused] == ["a", "b", "c"]
    assert by_id["a"].path == "both"
    assert by_id["b"].path == "visual"
    assert by_id["c"].path == "text"


def test_fuse_rrf_visual_rank1_beats_text_rank1_at_default_alpha():
    fused = fuse_rrf([_rr("v", 1)], [_rr("t", 1)], FusionConfig())
    assert fused[0].chunk_id == "v"
    assert fused[0].score == pytest.approx(0.6 / 61, abs=1e-9)
    assert fused[0].score == pytest.approx(0.009836065573770491, abs=1e-9)


def test_fuse_rrf_covers_union_and_renumbers_ranks():
    fused = fuse_rrf(
        [_rr("a", 1), _rr("b", 2)], [_rr("c", 1), _rr("b", 2)], FusionConfig()
    )
    assert sorted(r.chunk_id for r in fused) == ["a", "b", "c"]
    assert [r.rank for r in fused] == [1, 2, 3]


def test_fusion_config_validation():
    with pytest.raises(ValueError):
        FusionConfig(alpha=1.2)
    with pytest.raises(ValueError):
        FusionConfig(rerank_blend_original=0.5, rerank_blend_cross=0.6)


def test_rerank_cross_blend_hand_case():
    # two candidates: min-max maps orig scores to [1, 0] and cross to [0, 1]
    cands = [
        RetrievalResult("a", score=0.9, path="visual", rank=1),
        RetrievalResult("b", score=0.1, path="text", rank=2, hop=2),
    ]
    captions = {"a": "nothing in common", "b": "find lesion here"}
    query = "find lesion here"
    assert cross_score(query, captions["b"]) == 1.0
    assert cross_score(query, captions["a"]) == 0.0
    out = rerank_cross(query, cands, captions, FusionConfig())
    by_id = {r.chunk_id: r for r in out}
    # a: 0.4*1 + 0.6*0 = 0.4 ; b: 0.4*0 + 0.6*1 = 0.6
    assert by_id["a"].score == pytest.approx(0.4)
    assert by_id["b"].score == pytest.approx(0.6)
    assert out[0].chunk_id == "b"
    assert by_id["b"].hop == 2  # hop survives re-ranking
    assert by_id["b"].path == "text"


def test_rerank_cross_constant_scores_map_to_ones():
    cands = [
        RetrievalResult("a", score=0.5, path="visual", rank=1),
        RetrievalResult("b", score=0.5, path="visual", rank=2),
    ]
    captions = {"a": "same words", "b": "same words"}
    out = rerank_cross("same words", cands, captions, FusionConfig())
    assert [r.score for r in out] == [pytest.approx(1.0)] * 2
    assert [r.chunk_id for r in out] == ["a", "b"]  # id tie-break


def test_rerank_cross_rejects_empty():
    with pytest.raises(ValueError):
        rerank_cross("q", [], {}, FusionConfig())
