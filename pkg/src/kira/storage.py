"""On-disk layout for corpora, heads, and indices.

A built domain corpus lives under <out>/<domain_id>/:

* manifest.jsonl — one record per chunk
* base.kiraemb   — base (768-d) chunk embeddings, KIRAEMB1
* images/        — document and eval-query images, KIRAIMG1
* concepts.json  — [{concept, class_label}]
* eval_samples.json
* meta.json      — seed, spec, tuned noise constants
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import formats
from .chunker import BBox, Chunk
from .corpus import CompoundGroup, Corpus, Document, DomainSpec, EvalSample


def save_corpus(corpus: Corpus, out_dir: str | Path) -> Path:
    root = Path(out_dir) / corpus.domain_id
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)

    records = []
    for cid in corpus.chunk_order:
        chunk = corpus.chunks[cid]
        records.append(
            {
                "chunk_id": chunk.chunk_id,
                "doc_id": chunk.doc_id,
                "level": chunk.level,
                "bbox": [chunk.bbox.x0, chunk.bbox.y0, chunk.bbox.x1, chunk.bbox.y1],
                "parent_id": chunk.parent_id,
                "class_label": corpus.chunk_label(cid),
                "caption": chunk.caption,
                "provenance": chunk.provenance,
                "embedding_ref": chunk.chunk_id,
                "group_ids": sorted(
                    g.group_id for g in corpus.groups_for_doc(chunk.doc_id)
                ),
            }
        )
    formats.write_jsonl(root / "manifest.jsonl", records)

    ids, matrix = corpus.base_embeddings()
    formats.write_embeddings(root / "base.kiraemb", ids, matrix)

    for doc in corpus.documents.values():
        formats.write_image_grid(images / f"{doc.doc_id}.kimg", doc.image)
    for sample in corpus.eval_samples:
        formats.write_image_grid(images / f"{sample.sample_id}.kimg", sample.query_image)

    (root / "concepts.json").write_text(
        json.dumps(
            [
                {"concept": phrase, "class_label": label}
                for phrase, label in corpus.spec.concept_bank
            ],
            indent=2,
        ),
        encoding="utf-8",
    )
    (root / "eval_samples.json").write_text(
        json.dumps(
            [
                {
                    "sample_id": s.sample_id,
                    "query_text": s.query_text,
                    "relevant_chunk_ids": sorted(s.relevant_chunk_ids),
                    "ground_truth_answer": s.ground_truth_answer,
                    "class_label": s.class_label,
                }
                for s in corpus.eval_samples
            ],
            indent=2,
        ),
        encoding="utf-8",
    )
    (root / "meta.json").write_text(
        json.dumps(
            {
                "domain_id": corpus.domain_id,
                "class_labels": corpus.spec.class_labels,
                "doc_count": corpus.spec.doc_count,
                "eval_sample_count": corpus.spec.eval_sample_count,
                "constants": corpus.constants,
                "groups": [
                    {
                        "group_id": g.group_id,
                        "kind": g.kind,
                        "member_doc_ids": g.member_doc_ids,
                    }
                    for g in corpus.groups
                ],
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    return root


def load_corpus(domain_dir: str | Path) -> Corpus:
    root = Path(domain_dir)
    meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
    concepts = json.loads((root / "concepts.json").read_text(encoding="utf-8"))
    spec = DomainSpec(
        domain_id=meta["domain_id"],
        class_labels=meta["class_labels"],
        doc_count=meta["doc_count"],
        concept_bank=[(c["concept"], c["class_label"]) for c in concepts],
        eval_sample_count=meta["eval_sample_count"],
    )
    emb_ids, matrix = formats.read_embeddings(root / "base.kiraemb")
    emb_row = {cid: i for i, cid in enumerate(emb_ids)}

    chunks: dict[str, Chunk] = {}
    chunk_order: list[str] = []
    documents: dict[str, Document] = {}
    doc_labels: dict[str, str] = {}
    for rec in formats.read_jsonl(root / "manifest.jsonl"):
        bbox = BBox(*rec["bbox"])
        chunk = Chunk(
            chunk_id=rec["chunk_id"],
            doc_id=rec["doc_id"],
            level=rec["level"],
            bbox=bbox,
            parent_id=rec["parent_id"],
            embedding=matrix[emb_row[rec["embedding_ref"]]].astype(np.float64),
            caption=rec["caption"],
            provenance=rec.get("provenance", rec["chunk_id"]),
        )
        chunks[chunk.chunk_id] = chunk
        chunk_order.append(chunk.chunk_id)
        doc_labels[rec["doc_id"]] = rec["class_label"]

    for doc_id, label in doc_labels.items():
        image = formats.read_image_grid(root / "images" / f"{doc_id}.kimg")
        documents[doc_id] = Document(
            doc_id=doc_id, class_label=label, image=image.astype(np.float64)
        )

    groups = [
        CompoundGroup(
            group_id=g["group_id"], kind=g["kind"], member_doc_ids=g["member_doc_ids"]
        )
        for g in meta["groups"]
    ]

    eval_samples = []
    for s in json.loads((root / "eval_samples.json").read_text(encoding="utf-8")):
        image = formats.read_image_grid(root / "images" / f"{s['sample_id']}.kimg")
        eval_samples.append(
            EvalSample(
                sample_id=s["sample_id"],
                query_image=image.astype(np.float64),
                query_text=s["query_text"],
                relevant_chunk_ids=set(s["relevant_chunk_ids"]),
                ground_truth_answer=s["ground_truth_answer"],
                class_label=s["class_label"],
            )
        )

    return Corpus(
        domain_id=meta["domain_id"],
        spec=spec,
        documents=documents,
        chunks=chunks,
        chunk_order=chunk_order,
        groups=groups,
        eval_samples=eval_samples,
        constants=meta["constants"],
    )
