"""Run the six-variant ablation over all four domains and print the table.

This is the library-level equivalent of `kira ablate`; it builds the
corpora and trains the heads in process, so it takes a few minutes.

Usage: python demos/run_ablation.py
"""

from kira import adapt, benchmark
from kira.corpus import build_all_corpora
from kira.pipeline import Pipeline


def main() -> None:
    corpora = build_all_corpora(seed=7)
    pipelines = {}
    for domain_id, corpus in corpora.items():
        ids, base = corpus.base_embeddings()
        cfg = adapt.TrainConfig(seed=7)
        head, _ = adapt.train(
            base, corpus.chunk_labels(), cfg, content_keys=corpus.content_keys()
        )
        support, support_labels = adapt.build_support_set(
            base, corpus.chunk_labels(), cfg.shots, seed=cfg.seed
        )
        head = adapt.fewshot_adapt(head, support, support_labels, cfg)
        pipelines[domain_id] = Pipeline(corpus, head)
        print(f"prepared {domain_id}")

    result = benchmark.run_ablation(pipelines)
    print()
    print(benchmark.averaged_markdown(result))
    print("marginal retrieval-precision contributions:")
    for name, delta in benchmark.component_contribution(result):
        print(f"  {name:18s} {delta:+.3f}")
    failures = benchmark.check_ablation_invariants(result)
    print("\ninvariants:", "all hold" if not failures else failures)


if __name__ == "__main__":
    main()
