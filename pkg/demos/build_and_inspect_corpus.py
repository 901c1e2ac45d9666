"""Build one synthetic domain and walk its chunk hierarchy.

Usage: python demos/build_and_inspect_corpus.py [domain_id]
"""

import sys
from collections import Counter

from kira.corpus import DomainSpec, build_domain_corpus


def main() -> None:
    domain_id = sys.argv[1] if len(sys.argv) > 1 else "medical_xray"
    corpus = build_domain_corpus(DomainSpec.default(domain_id), seed=7)

    print(f"domain: {corpus.domain_id}")
    print(f"documents: {len(corpus.documents)}  chunks: {len(corpus.chunks)}")
    print("chunks by level:", dict(Counter(corpus.chunk_levels())))
    print("classes:", corpus.spec.class_labels)
    print()

    doc_id = corpus.chunk_order[0].rsplit(":", 1)[0]
    print(f"chunk tree for {doc_id}:")
    for cid in corpus.chunk_order:
        chunk = corpus.chunks[cid]
        if chunk.doc_id != doc_id:
            break
        indent = "" if chunk.level == "document" else "  "
        b = chunk.bbox
        print(f"{indent}{cid:32s} {chunk.level:8s} "
              f"[{b.x0:3d},{b.y0:3d},{b.x1:3d},{b.y1:3d}]")
    print()

    print("sample captions:")
    for cid in corpus.chunk_order[:3]:
        print(f"  {cid}: {corpus.chunks[cid].caption}")
    print()

    print("eval queries:")
    for sample in corpus.eval_samples:
        print(f"  {sample.sample_id}: {sample.query_text!r} "
              f"({len(sample.relevant_chunk_ids)} relevant chunks)")


if __name__ == "__main__":
    main()
