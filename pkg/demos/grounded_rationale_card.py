"""Generate a grounded answer with its retrieval rationale card.

Runs the full pipeline variant on one query and prints the markdown card:
evidence items with provenance, the cited answer, and the per-claim
grounding verdicts. Also shows what the verifier does to a fabricated
claim that cites evidence it is not supported by.

Usage: python demos/grounded_rationale_card.py [domain_id]
"""

import sys

from kira import adapt
from kira.corpus import DomainSpec, build_domain_corpus
from kira.pipeline import Pipeline, VARIANTS_BY_NAME
from kira.reasoner import rationale_card_markdown, verify


def main() -> None:
    domain_id = sys.argv[1] if len(sys.argv) > 1 else "medical_xray"
    corpus = build_domain_corpus(DomainSpec.default(domain_id), seed=7)
    ids, base = corpus.base_embeddings()
    cfg = adapt.TrainConfig(seed=7)
    head, _ = adapt.train(
        base, corpus.chunk_labels(), cfg, content_keys=corpus.content_keys()
    )
    pipeline = Pipeline(corpus, head)

    sample = corpus.eval_samples[0]
    outcome = pipeline.run_query(
        sample.query_image, sample.query_text, VARIANTS_BY_NAME["full"]
    )
    print(rationale_card_markdown(outcome.card))

    # a claim citing evidence that does not exist scores zero and is flagged
    fabricated = outcome.verified_answer + " glittering artifacts everywhere [Evidence 9]."
    report = verify(fabricated, outcome.pack)
    print("verifier on a fabricated extra claim:")
    for claim in report.claims:
        status = "FLAGGED" if claim.flagged else "GROUNDED"
        print(f"  {status} ({claim.s_ground:.3f}): {claim.text}")


if __name__ == "__main__":
    main()
