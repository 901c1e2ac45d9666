"""Command-line entry point.

Subcommands: build-corpus, train-encoder, build-index, query, ablate,
feedback, report. Global flags: --seed, --config (JSON with flat dotted
keys; flags override the file), --domains, --encoder, --out. Every command
is deterministic given (config, seed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import adapt, benchmark, formats, storage
from .corpus import DOMAIN_IDS, DomainSpec, build_domain_corpus
from .encoders import SyntheticImageEncoder
from .index import FusionConfig
from .multihop import HopConfig
from .pipeline import Pipeline, PipelineConfig, VARIANTS_BY_NAME
from .reasoner import rationale_card_markdown


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kira")
    parser.add_argument("--seed", type=int, default=7, help="global seed")
    parser.add_argument("--config", type=Path, help="JSON config, flat dotted keys")
    parser.add_argument(
        "--domains",
        default=",".join(DOMAIN_IDS),
        help="comma-separated domain ids",
    )
    parser.add_argument(
        "--encoder",
        choices=["synthetic", "external"],
        default="synthetic",
        help="use synthetic embeddings or externally exported KIRAEMB1 files",
    )
    parser.add_argument("--out", type=Path, default=Path("kira_out"))
    parser.add_argument("--alpha", type=float, help="visual fusion weight")
    parser.add_argument("--conf-threshold", type=float, help="hop stop threshold")
    parser.add_argument("--max-hops", type=int)
    parser.add_argument("--beta", type=float, help="residual query scale")
    parser.add_argument("--margin", type=float, help="triplet margin")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--fewshot-epochs", type=int)
    parser.add_argument("--shots", type=int)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-corpus", help="generate and persist domain corpora")
    sub.add_parser("train-encoder", help="train the projection heads")
    sub.add_parser("build-index", help="write projected (256-d) index embeddings")
    q = sub.add_parser("query", help="run one query in full configuration")
    q.add_argument("image", type=Path, help="KIRAIMG1 query image")
    q.add_argument("--text", default="", help="optional query text")
    q.add_argument("--domain", required=True, choices=DOMAIN_IDS)
    sub.add_parser("ablate", help="run the six-variant ablation and emit reports")
    sub.add_parser("feedback", help="run the failure-mining feedback loop")
    sub.add_parser("report", help="re-emit reports from saved raw results")
    return parser


def _load_config(args) -> dict:
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    # flags override file values
    overrides = {
        "fusion.alpha": args.alpha,
        "hops.conf_threshold": args.conf_threshold,
        "hops.max_hops": args.max_hops,
        "hops.beta": args.beta,
        "train.margin": args.margin,
        "train.epochs": args.epochs,
        "train.fewshot_epochs": args.fewshot_epochs,
        "train.shots": args.shots,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    return cfg


def _pipeline_config(cfg: dict) -> PipelineConfig:
    fusion = FusionConfig(alpha=cfg.get("fusion.alpha", 0.6))
    hops = HopConfig(
        max_hops=cfg.get("hops.max_hops", 3),
        conf_threshold=cfg.get("hops.conf_threshold", 0.85),
        beta=cfg.get("hops.beta", 0.3),
    )
    return PipelineConfig(fusion=fusion, hops=hops)


def _train_config(cfg: dict, seed: int) -> adapt.TrainConfig:
    return adapt.TrainConfig(
        margin=cfg.get("train.margin", 0.3),
        epochs=cfg.get("train.epochs", 50),
        fewshot_epochs=cfg.get("train.fewshot_epochs", 10),
        shots=cfg.get("train.shots", 5),
        seed=seed,
    )


def _domains(args) -> list[str]:
    domains = [d.strip() for d in args.domains.split(",") if d.strip()]
    for d in domains:
        if d not in DOMAIN_IDS:
            raise SystemExit(f"error: unknown domain {d!r}")
    return domains


def _load_pipeline(args, cfg, domain_id) -> Pipeline:
    corpus = storage.load_corpus(args.out / domain_id)
    weight, bias = formats.read_head(args.out / domain_id / "head.kirahead")
    head = adapt.ProjectionHead(weight=weight, bias=bias)
    visual = None
    if args.encoder == "external":
        emb_path = args.out / domain_id / "external.kiraemb"
        ids, matrix = formats.read_embeddings(emb_path)
        order = {cid: i for i, cid in enumerate(ids)}
        visual = head.project(
            np.stack([matrix[order[cid]] for cid in corpus.chunk_order])
        )
    return Pipeline(
        corpus, head, config=_pipeline_config(cfg), visual_embeddings=visual
    )


def cmd_build_corpus(args, cfg) -> int:
    encoder = SyntheticImageEncoder(seed=0)
    for domain_id in _domains(args):
        corpus = build_domain_corpus(
            DomainSpec.default(domain_id), args.seed, encoder
        )
        root = storage.save_corpus(corpus, args.out)
        print(f"built {domain_id}: {len(corpus.chunks)} chunks -> {root}")
    return 0


def cmd_train_encoder(args, cfg) -> int:
    config = _train_config(cfg, args.seed)
    for domain_id in _domains(args):
        corpus = storage.load_corpus(args.out / domain_id)
        ids, base = corpus.base_embeddings()
        labels = corpus.chunk_labels()
        head, trace = adapt.train(
            base, labels, config, content_keys=corpus.content_keys()
        )
        support, support_labels = adapt.build_support_set(
            base, labels, config.shots, seed=config.seed
        )
        head = adapt.fewshot_adapt(head, support, support_labels, config)
        formats.write_head(
            args.out / domain_id / "head.kirahead", head.weight, head.bias
        )
        formats.write_trace_csv(args.out / domain_id / "train_trace.csv", trace)
        recall = adapt.eval_recall_at_1(head, base, labels)
        print(f"trained {domain_id}: final recall@1 {recall:.3f}")
    return 0


def cmd_build_index(args, cfg) -> int:
    for domain_id in _domains(args):
        corpus = storage.load_corpus(args.out / domain_id)
        weight, bias = formats.read_head(args.out / domain_id / "head.kirahead")
        head = adapt.ProjectionHead(weight=weight, bias=bias)
        ids, base = corpus.base_embeddings()
        formats.write_embeddings(
            args.out / domain_id / "index.kiraemb", ids, head.project(base)
        )
        print(f"indexed {domain_id}: {len(ids)} vectors (256-d)")
    return 0


def cmd_query(args, cfg) -> int:
    if not args.image.exists():
        raise SystemExit(f"error: cannot read image {args.image}")
    pipeline = _load_pipeline(args, cfg, args.domain)
    image = formats.read_image_grid(args.image).astype(np.float64)
    outcome = pipeline.run_query(image, args.text, VARIANTS_BY_NAME["full"])
    sys.stdout.write(rationale_card_markdown(outcome.card))
    return 0


def cmd_ablate(args, cfg) -> int:
    pipelines = {d: _load_pipeline(args, cfg, d) for d in _domains(args)}
    result = benchmark.run_ablation(pipelines)
    report_dir = args.out / "reports"
    benchmark.write_reports(result, report_dir)
    _write_raw_results(result, report_dir / "raw_results.json")
    cards_dir = report_dir / "cards"
    cards_dir.mkdir(parents=True, exist_ok=True)
    full = VARIANTS_BY_NAME["full"]
    for domain_id, pipeline in sorted(pipelines.items()):
        for sample in pipeline.corpus.eval_samples:
            outcome = pipeline.run_query(
                sample.query_image, sample.query_text, full
            )
            path = cards_dir / f"{sample.sample_id}.md"
            path.write_text(rationale_card_markdown(outcome.card), encoding="utf-8")
    sys.stdout.write(benchmark.averaged_markdown(result))
    failures = benchmark.check_ablation_invariants(result)
    for failure in failures:
        print(f"INVARIANT VIOLATED: {failure}", file=sys.stderr)
    return 1 if failures else 0


def cmd_feedback(args, cfg) -> int:
    config = _train_config(cfg, args.seed)
    summary = {}
    for domain_id in _domains(args):
        corpus = storage.load_corpus(args.out / domain_id)
        weight, bias = formats.read_head(args.out / domain_id / "head.kirahead")
        head = adapt.ProjectionHead(weight=weight, bias=bias)
        state, new_head = benchmark.feedback_loop(
            corpus, head, config, pipeline_config=_pipeline_config(cfg)
        )
        if state.retrained:
            formats.write_head(
                args.out / domain_id / "head_feedback.kirahead",
                new_head.weight,
                new_head.bias,
            )
        summary[domain_id] = {
            "iterations": state.iterations,
            "failed_sample_ids": state.failed_sample_ids,
            "mined_hard_negatives": state.mined_hard_negatives,
            "retrained": state.retrained,
        }
        print(
            f"{domain_id}: {len(state.failed_sample_ids)} failures, "
            f"retrained={state.retrained}"
        )
    (args.out / "feedback.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8"
    )
    return 0


def _write_raw_results(result, path: Path) -> None:
    payload = {
        "per_domain": {
            d: {
                name: _report_dict(rep)
                for name, rep in result.per_domain[d].items()
            }
            for d in sorted(result.per_domain)
        },
        "averaged": {
            name: _report_dict(rep) for name, rep in result.averaged.items()
        },
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


def _report_dict(rep) -> dict:
    return {
        "variant": rep.variant,
        "domain_id": rep.domain_id,
        "retrieval_precision": rep.retrieval_precision,
        "recall_at": {str(k): v for k, v in rep.recall_at.items()},
        "reasoning_faithfulness": rep.reasoning_faithfulness,
        "domain_correctness": rep.domain_correctness,
        "grounding_score": rep.grounding_score,
        "explainability": rep.explainability,
    }


def cmd_report(args, cfg) -> int:
    raw = args.out / "reports" / "raw_results.json"
    if not raw.exists():
        raise SystemExit(f"error: no raw results at {raw}; run ablate first")
    payload = json.loads(raw.read_text(encoding="utf-8"))
    result = benchmark.AblationResult(
        per_domain={
            d: {name: _report_from_dict(r) for name, r in by_variant.items()}
            for d, by_variant in payload["per_domain"].items()
        },
        averaged={
            name: _report_from_dict(r) for name, r in payload["averaged"].items()
        },
    )
    for path in benchmark.write_reports(result, args.out / "reports"):
        print(f"wrote {path}")
    return 0


def _report_from_dict(d: dict) -> benchmark.MetricsReport:
    return benchmark.MetricsReport(
        variant=d["variant"],
        domain_id=d["domain_id"],
        retrieval_precision=d["retrieval_precision"],
        recall_at={int(k): v for k, v in d["recall_at"].items()},
        reasoning_faithfulness=d["reasoning_faithfulness"],
        domain_correctness=d["domain_correctness"],
        grounding_score=d["grounding_score"],
        explainability=d["explainability"],
    )


_COMMANDS = {
    "build-corpus": cmd_build_corpus,
    "train-encoder": cmd_train_encoder,
    "build-index": cmd_build_index,
    "query": cmd_query,
    "ablate": cmd_ablate,
    "feedback": cmd_feedback,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = _load_config(args)
    try:
        return _COMMANDS[args.command](args, cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
