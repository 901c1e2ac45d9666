"""Watch the chain-of-retrieval loop hop, residualize, and stop.

Runs the same query twice: once with the default confidence threshold
(stops at hop 1) and once with an unreachable threshold so the residual
query and the per-hop discoveries are visible.

Usage: python demos/multihop_chain.py [domain_id]
"""

import sys

from kira import adapt
from kira.corpus import DomainSpec, build_domain_corpus
from kira.multihop import HopConfig
from kira.pipeline import Pipeline, PipelineConfig, VARIANTS_BY_NAME


def _run(pipeline, sample, label):
    outcome = pipeline.run_query(
        sample.query_image, sample.query_text, VARIANTS_BY_NAME["multi_hop"]
    )
    trace = outcome.trace
    print(f"-- {label}: stop_reason={trace.stop_reason}")
    for hop in trace.hops:
        new = ", ".join(hop.new_chunk_ids[:3])
        more = f" (+{len(hop.new_chunk_ids) - 3} more)" if len(hop.new_chunk_ids) > 3 else ""
        print(f"  hop {hop.hop}: confidence {hop.confidence:.3f}  "
              f"new: {new}{more}")
    print()


def main() -> None:
    domain_id = sys.argv[1] if len(sys.argv) > 1 else "satellite"
    corpus = build_domain_corpus(DomainSpec.default(domain_id), seed=7)
    ids, base = corpus.base_embeddings()
    cfg = adapt.TrainConfig(seed=7)
    head, _ = adapt.train(
        base, corpus.chunk_labels(), cfg, content_keys=corpus.content_keys()
    )
    sample = corpus.eval_samples[0]
    print(f"query: {sample.query_text!r}\n")

    _run(Pipeline(corpus, head), sample, "default threshold (0.85)")
    forced = PipelineConfig(hops=HopConfig(conf_threshold=1.5))
    _run(Pipeline(corpus, head, config=forced), sample,
         "unreachable threshold (1.5) forces exploration")


if __name__ == "__main__":
    main()
