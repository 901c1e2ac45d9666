"""Compare visual-only retrieval with dual-path RRF fusion on one query.

Prints the top of each ranking side by side, with relevance marks, to show
how the text route and the fusion weights reshape the top-5.

Usage: python demos/dual_path_retrieval.py [domain_id]
"""

import sys

from kira import adapt
from kira.corpus import DomainSpec, build_domain_corpus
from kira.pipeline import Pipeline, VARIANTS_BY_NAME


def _show(title, results, relevant, k=8):
    print(title)
    for r in results[:k]:
        mark = "*" if r.chunk_id in relevant else " "
        print(f"  {r.rank:2d} {mark} {r.chunk_id:32s} {r.path:6s} {r.score:.5f}")
    print()


def main() -> None:
    domain_id = sys.argv[1] if len(sys.argv) > 1 else "circuit"
    corpus = build_domain_corpus(DomainSpec.default(domain_id), seed=7)
    ids, base = corpus.base_embeddings()
    cfg = adapt.TrainConfig(seed=7)
    head, _ = adapt.train(
        base, corpus.chunk_labels(), cfg, content_keys=corpus.content_keys()
    )
    pipeline = Pipeline(corpus, head)

    sample = corpus.eval_samples[0]
    print(f"query: {sample.query_text!r}  (* = relevant chunk)\n")
    for name in ("visual_only", "dual_path"):
        outcome = pipeline.run_query(
            sample.query_image, sample.query_text, VARIANTS_BY_NAME[name]
        )
        _show(f"-- {name}", outcome.retrieved, sample.relevant_chunk_ids)


if __name__ == "__main__":
    main()
