"""Benchmark layer: metric suite, six-variant ablation, feedback loop.

Metrics: retrieval precision (P@5), recall@k for k in {1, 3, 5, 10},
reasoning faithfulness (answer-token coverage by cited evidence), domain
correctness (content-token F1 vs ground truth), grounding score (fraction
of grounded claims), and explainability completeness (rationale card
fields present). All token metrics share the engine-wide stop-word list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import adapt
from .corpus import Corpus
from .pipeline import (
    Pipeline,
    PipelineConfig,
    QueryOutcome,
    VARIANTS,
    VariantConfig,
)
from .reasoner import EvidencePack
from .text import content_tokens, parse_citations, strip_citations

RECALL_KS = (1, 3, 5, 10)

CARD_FIELDS = 8  # query, confidence, evidence list, score, path, provenance,
# answer, per-claim grounding


# ---------------------------------------------------------------------------
# metric functions


def precision_at_k(retrieved: list[str], relevant: set[str], k: int = 5) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not retrieved:
        return 0.0
    top = retrieved[:k]
    return len(set(top) & relevant) / min(k, len(retrieved))


def recall_at_k(retrieved: list[str], relevant: set[str], k: int) -> float:
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    return len(set(retrieved[:k]) & relevant) / len(relevant)


def reasoning_faithfulness(answer: str, pack: EvidencePack) -> float:
    """Fraction of the answer's content tokens covered by the union of the
    cited evidence summaries; 1.0 for an answer with no content tokens."""
    tokens = content_tokens(strip_citations(answer))
    if not tokens:
        return 1.0
    cited = parse_citations(answer)
    summary_tokens: set[str] = set()
    for index in sorted(cited):
        item = pack.get(index)
        if item is not None:
            summary_tokens |= content_tokens(item.summary)
    return sum(t in summary_tokens for t in tokens) / len(tokens)


def domain_correctness(answer: str, ground_truth: str) -> float:
    """Set-based F1 over unique content tokens."""
    if not ground_truth.strip():
        raise ValueError("empty ground truth")
    a = content_tokens(strip_citations(answer))
    g = content_tokens(ground_truth)
    if not a or not g:
        return 0.0
    overlap = len(a & g)
    if overlap == 0:
        return 0.0
    precision = overlap / len(a)
    recall = overlap / len(g)
    return 2 * precision * recall / (precision + recall)


def explainability_completeness(card: dict) -> float:
    """Fraction of the 8 required rationale-card fields present."""
    present = 0
    present += bool(card.get("query"))
    present += card.get("confidence") is not None
    evidence = card.get("evidence")
    present += bool(evidence)
    for key in ("score", "path", "provenance"):
        present += bool(evidence) and all(e.get(key) is not None for e in evidence)
    present += bool(card.get("answer"))
    present += bool(card.get("grounding"))
    return present / CARD_FIELDS


# ---------------------------------------------------------------------------
# variant runs


@dataclass
class SampleMetrics:
    sample_id: str
    retrieval_precision: float
    recall_at: dict[int, float]
    reasoning_faithfulness: float
    domain_correctness: float
    grounding_score: float
    explainability: float
    stop_reason: str | None
    hops: int


@dataclass
class MetricsReport:
    variant: str
    domain_id: str
    retrieval_precision: float
    recall_at: dict[int, float]
    reasoning_faithfulness: float
    domain_correctness: float
    grounding_score: float
    explainability: float
    samples: list[SampleMetrics] = field(default_factory=list)

    def value(self, metric: str) -> float:
        if metric.startswith("recall_at_"):
            return self.recall_at[int(metric.rsplit("_", 1)[1])]
        return getattr(self, metric)


def score_sample(
    outcome: QueryOutcome, relevant: set[str], ground_truth: str, sample_id: str
) -> SampleMetrics:
    retrieved_ids = [r.chunk_id for r in outcome.retrieved]
    return SampleMetrics(
        sample_id=sample_id,
        retrieval_precision=precision_at_k(retrieved_ids, relevant, 5),
        recall_at={k: recall_at_k(retrieved_ids, relevant, k) for k in RECALL_KS},
        reasoning_faithfulness=reasoning_faithfulness(
            outcome.verified_answer, outcome.pack
        ),
        domain_correctness=domain_correctness(outcome.answer, ground_truth),
        grounding_score=outcome.report.grounded_fraction,
        explainability=explainability_completeness(outcome.card),
        stop_reason=outcome.trace.stop_reason if outcome.trace else None,
        hops=len(outcome.trace.hops) if outcome.trace else 0,
    )


def run_variant(
    variant: VariantConfig, pipeline: Pipeline, keep_outcomes: bool = False
) -> MetricsReport | tuple[MetricsReport, list[QueryOutcome]]:
    samples = []
    outcomes = []
    for sample in pipeline.corpus.eval_samples:
        outcome = pipeline.run_query(sample.query_image, sample.query_text, variant)
        samples.append(
            score_sample(
                outcome,
                sample.relevant_chunk_ids,
                sample.ground_truth_answer,
                sample.sample_id,
            )
        )
        if keep_outcomes:
            outcomes.append(outcome)
    report = MetricsReport(
        variant=variant.name,
        domain_id=pipeline.corpus.domain_id,
        retrieval_precision=float(np.mean([s.retrieval_precision for s in samples])),
        recall_at={
            k: float(np.mean([s.recall_at[k] for s in samples])) for k in RECALL_KS
        },
        reasoning_faithfulness=float(
            np.mean([s.reasoning_faithfulness for s in samples])
        ),
        domain_correctness=float(np.mean([s.domain_correctness for s in samples])),
        grounding_score=float(np.mean([s.grounding_score for s in samples])),
        explainability=float(np.mean([s.explainability for s in samples])),
        samples=samples,
    )
    return (report, outcomes) if keep_outcomes else report


def average_reports(reports: list[MetricsReport], variant: str) -> MetricsReport:
    """Plain mean across domains for one variant."""
    return MetricsReport(
        variant=variant,
        domain_id="average",
        retrieval_precision=float(
            np.mean([r.retrieval_precision for r in reports])
        ),
        recall_at={
            k: float(np.mean([r.recall_at[k] for r in reports])) for k in RECALL_KS
        },
        reasoning_faithfulness=float(
            np.mean([r.reasoning_faithfulness for r in reports])
        ),
        domain_correctness=float(np.mean([r.domain_correctness for r in reports])),
        grounding_score=float(np.mean([r.grounding_score for r in reports])),
        explainability=float(np.mean([r.explainability for r in reports])),
    )


@dataclass
class AblationResult:
    # per_domain[domain_id][variant_name] and averaged[variant_name]
    per_domain: dict[str, dict[str, MetricsReport]]
    averaged: dict[str, MetricsReport]

    def variant_names(self) -> list[str]:
        return [v.name for v in VARIANTS]


def run_ablation(pipelines: dict[str, Pipeline]) -> AblationResult:
    per_domain: dict[str, dict[str, MetricsReport]] = {}
    for domain_id in sorted(pipelines):
        per_domain[domain_id] = {
            v.name: run_variant(v, pipelines[domain_id]) for v in VARIANTS
        }
    averaged = {
        v.name: average_reports(
            [per_domain[d][v.name] for d in sorted(per_domain)], v.name
        )
        for v in VARIANTS
    }
    return AblationResult(per_domain=per_domain, averaged=averaged)


def component_contribution(result: AblationResult) -> list[tuple[str, float]]:
    """Marginal retrieval-precision delta of each variant over its
    predecessor, on the averaged table."""
    names = result.variant_names()
    deltas = []
    for prev, cur in zip(names, names[1:]):
        deltas.append(
            (
                cur,
                result.averaged[cur].retrieval_precision
                - result.averaged[prev].retrieval_precision,
            )
        )
    return deltas


def check_ablation_invariants(result: AblationResult) -> list[str]:
    """Returns a list of violated invariant descriptions (empty = pass)."""
    avg = result.averaged
    rp = {name: avg[name].retrieval_precision for name in result.variant_names()}
    failures = []
    if not rp["visual_only"] > rp["dual_path"]:
        failures.append("RP(visual_only) must exceed RP(dual_path)")
    if not rp["dual_path"] >= rp["query_expansion"]:
        failures.append("RP(dual_path) must be >= RP(query_expansion)")
    if abs(rp["multi_hop"] - rp["visual_only"]) > 0.02:
        failures.append("RP(multi_hop) must recover RP(visual_only) within 0.02")
    if rp["grounded"] != rp["multi_hop"] or rp["full"] != rp["multi_hop"]:
        failures.append("generation-side variants must not change RP")
    for name, report in avg.items():
        if abs(report.reasoning_faithfulness - 1.0) > 0.001:
            failures.append(f"RF({name}) must be 1.000")
        if abs(report.grounding_score - 1.0) > 0.001:
            failures.append(f"GS({name}) must be 1.000")
    for domain_id, by_variant in result.per_domain.items():
        drop = (
            by_variant["multi_hop"].domain_correctness
            - by_variant["grounded"].domain_correctness
        )
        if drop < 0.1:
            failures.append(f"DC drop on {domain_id} is {drop:.3f} < 0.1")
    return failures


# ---------------------------------------------------------------------------
# feedback loop


@dataclass
class FeedbackState:
    iterations: int = 0
    failed_sample_ids: list[str] = field(default_factory=list)
    mined_hard_negatives: list[str] = field(default_factory=list)
    retrained: bool = False
    history: list[dict] = field(default_factory=list)

    MAX_ITERATIONS = 2
    FAILURE_THRESHOLD = 0.5


def feedback_loop(
    corpus: Corpus,
    head: adapt.ProjectionHead,
    config: adapt.TrainConfig | None = None,
    variant: VariantConfig | None = None,
    iterations: int = FeedbackState.MAX_ITERATIONS,
    pipeline_config: PipelineConfig | None = None,
) -> tuple[FeedbackState, adapt.ProjectionHead]:
    """Mine hard negatives from failed samples and re-adapt the head.

    A sample fails when its domain correctness falls below 0.5. Failed
    samples' retrieved-but-irrelevant chunks are injected into the few-shot
    support set (under their true class labels) so the adaptation step has
    to separate exactly the confusable points, then evaluation repeats.
    Capped at 2 iterations; domains with zero failures skip re-training.
    """
    config = config or adapt.TrainConfig()
    variant = variant or VARIANTS[-1]
    iterations = min(iterations, FeedbackState.MAX_ITERATIONS)
    state = FeedbackState()
    head = head.copy()
    ids, base = corpus.base_embeddings()
    labels = corpus.chunk_labels()
    row = {cid: i for i, cid in enumerate(ids)}

    for _ in range(iterations):
        pipeline = Pipeline(corpus, head, config=pipeline_config)
        failed: list[str] = []
        mined: set[str] = set()
        for sample in corpus.eval_samples:
            outcome = pipeline.run_query(
                sample.query_image, sample.query_text, variant
            )
            dc = domain_correctness(outcome.answer, sample.ground_truth_answer)
            if dc < FeedbackState.FAILURE_THRESHOLD:
                failed.append(sample.sample_id)
                top = [r.chunk_id for r in outcome.retrieved[:5]]
                mined.update(
                    cid for cid in top if cid not in sample.relevant_chunk_ids
                )
        state.iterations += 1
        state.failed_sample_ids = failed
        state.history.append(
            {"failed": list(failed), "mined": sorted(mined)}
        )
        if not failed:
            break
        state.mined_hard_negatives = sorted(set(state.mined_hard_negatives) | mined)
        support, support_labels = adapt.build_support_set(
            base, labels, config.shots, seed=config.seed
        )
        extra_idx = [row[cid] for cid in sorted(mined)]
        if extra_idx:
            # injected negatives join the support under their true labels;
            # pad by class so the set stays balanced for the adapter
            support, support_labels = _balanced_union(
                base, labels, support, support_labels, extra_idx, config.seed
            )
        head = adapt.fewshot_adapt(head, support, support_labels, config)
        state.retrained = True
    return state, head


def _balanced_union(base, labels, support, support_labels, extra_idx, seed):
    """Merge injected points into the support set, re-sampling so every
    class keeps the same shot count."""
    rng = np.random.default_rng(seed)
    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    chosen: dict[str, list[int]] = {label: [] for label in by_class}
    for i in extra_idx:
        chosen[labels[i]].append(i)
    shots = max(
        len(support_labels) // len(set(support_labels)),
        max(len(v) for v in chosen.values()),
    )
    out_vecs, out_labels = [], []
    for label in sorted(by_class):
        picked = list(dict.fromkeys(chosen[label]))[:shots]
        pool = [i for i in by_class[label] if i not in picked]
        need = shots - len(picked)
        if need > 0:
            picked += [int(i) for i in rng.choice(pool, size=need, replace=False)]
        for i in picked:
            out_vecs.append(base[i])
            out_labels.append(label)
    return np.stack(out_vecs), out_labels


# ---------------------------------------------------------------------------
# report emission


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def ablation_csv(result: AblationResult) -> str:
    """One row per variant x domain x metric, plus averaged rows."""
    metric_names = [
        "retrieval_precision",
        *(f"recall_at_{k}" for k in RECALL_KS),
        "reasoning_faithfulness",
        "domain_correctness",
        "grounding_score",
        "explainability",
    ]
    lines = ["variant,domain,metric,value"]
    scopes = [(d, result.per_domain[d]) for d in sorted(result.per_domain)]
    scopes.append(("average", result.averaged))
    for domain_id, by_variant in scopes:
        for name in result.variant_names():
            report = by_variant[name]
            for metric in metric_names:
                lines.append(f"{name},{domain_id},{metric},{_fmt(report.value(metric))}")
    return "\n".join(lines) + "\n"


_VARIANT_TITLES = {
    "visual_only": "Visual Only",
    "dual_path": "+ Dual Path",
    "query_expansion": "+ Query Expansion",
    "multi_hop": "+ Multi-hop",
    "grounded": "+ Grounded",
    "full": "Full",
}


def averaged_markdown(result: AblationResult) -> str:
    lines = [
        "| Variant | RP | R@1 | R@5 | RF | DC | GS |",
        "|---|---|---|---|---|---|---|",
    ]
    for name in result.variant_names():
        r = result.averaged[name]
        lines.append(
            f"| {_VARIANT_TITLES[name]} | {r.retrieval_precision:.3f} "
            f"| {r.recall_at[1]:.3f} | {r.recall_at[5]:.3f} "
            f"| {r.reasoning_faithfulness:.3f} | {r.domain_correctness:.3f} "
            f"| {r.grounding_score:.3f} |"
        )
    return "\n".join(lines) + "\n"


def domain_markdown(result: AblationResult, domain_id: str) -> str:
    lines = [
        "| Variant | RP | R@5 | RF | DC | GS |",
        "|---|---|---|---|---|---|",
    ]
    for name in result.variant_names():
        r = result.per_domain[domain_id][name]
        lines.append(
            f"| {_VARIANT_TITLES[name]} | {r.retrieval_precision:.3f} "
            f"| {r.recall_at[5]:.3f} | {r.reasoning_faithfulness:.3f} "
            f"| {r.domain_correctness:.3f} | {r.grounding_score:.3f} |"
        )
    return "\n".join(lines) + "\n"


def contribution_svg(result: AblationResult) -> str:
    """Bar chart of averaged RP per variant with per-step deltas."""
    names = result.variant_names()
    values = [result.averaged[n].retrieval_precision for n in names]
    deltas = dict(component_contribution(result))
    width, height, margin = 640, 320, 40
    bar_w = (width - 2 * margin) / len(names) * 0.7
    gap = (width - 2 * margin) / len(names)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}">',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    for i, (name, value) in enumerate(zip(names, values)):
        bar_h = value * (height - 2 * margin)
        x = margin + i * gap + (gap - bar_w) / 2
        y = height - margin - bar_h
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" '
            f'height="{bar_h:.1f}" fill="#4878a8"/>'
        )
        label = _VARIANT_TITLES[name]
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{height - margin + 14}" '
            f'font-size="9" text-anchor="middle">{label}</text>'
        )
        annotation = f"{value:.3f}"
        if name in deltas:
            annotation += f" (d={deltas[name]:+.3f})"
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" font-size="9" '
            f'text-anchor="middle">{annotation}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_reports(result: AblationResult, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    targets = {
        "ablation.csv": ablation_csv(result),
        "ablation_averaged.md": averaged_markdown(result),
        "contribution.svg": contribution_svg(result),
    }
    for domain_id in sorted(result.per_domain):
        targets[f"ablation_{domain_id}.md"] = domain_markdown(result, domain_id)
    for name, text in targets.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written
