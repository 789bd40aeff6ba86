"""Bracketing metrics against gold treebanks.

Three counting modes: macro_sentence averages per-sentence F1 (the
headline number), micro_corpus pools span counts over the corpus, and
evalb_style emulates the classic scorer's conventions (duplicates kept,
whole-sentence spans counted, plus a short-sentence section).  All
modes ignore single-token spans; a binary prediction cannot produce
them and preterminal brackets are not constituents here.
"""

from __future__ import annotations

import dataclasses
import json
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .decoder import ScoreChart, cyk_decode
from .errors import EmptyCorpus, LengthMismatch, YieldMismatch
from .treebank import BinaryTree, GoldTree, Span, labeled_spans

MACRO_SENTENCE = "macro_sentence"
MICRO_CORPUS = "micro_corpus"
EVALB_STYLE = "evalb_style"
_MODES = (MACRO_SENTENCE, MICRO_CORPUS, EVALB_STYLE)

# evalb emulation: the short-sentence section's length cutoff
CUTOFF_LEN = 10

LEFT = "left"
RIGHT = "right"
BALANCED = "balanced"
RANDOM = "random"
_BASELINES = (LEFT, RIGHT, BALANCED, RANDOM)


@dataclass(frozen=True)
class EvalConfig:
    """Counting conventions for one evaluation run.

    evalb_style overrides exclude_trivial and dedup_spans: that scorer
    counts whole-sentence spans and keeps duplicated gold spans.
    max_len drops longer sentences entirely; bucket_width controls the
    by-length breakdown.
    """

    mode: str = MACRO_SENTENCE
    exclude_trivial: bool = True
    dedup_spans: bool = True
    max_len: int | None = None
    bucket_width: int = 5

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_len is not None and self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")
        if self.bucket_width < 1:
            raise ValueError(f"bucket_width must be >= 1, got {self.bucket_width}")
        if self.mode == EVALB_STYLE:
            object.__setattr__(self, "exclude_trivial", False)
            object.__setattr__(self, "dedup_spans", False)


@dataclass(frozen=True)
class EvalReport:
    """Headline scores plus per-sentence and grouped breakdowns."""

    mode: str
    f1: float
    precision: float
    recall: float
    per_sentence: tuple[dict, ...]
    per_label_recall: dict[str, float]
    length_buckets: dict[str, float]
    cutoff_section: dict | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        raw = json.loads(text)
        raw["per_sentence"] = tuple(raw["per_sentence"])
        return cls(**raw)


def _pred_spans(pred: BinaryTree, cfg: EvalConfig) -> Counter:
    n = len(pred.sentence)
    spans = [sp for sp in sorted(pred.spans) if sp.length >= 2]
    if cfg.exclude_trivial:
        spans = [sp for sp in spans if sp.length < n]
    return Counter(spans)


def _gold_span_counts(gold: GoldTree, cfg: EvalConfig) -> Counter:
    n = len(gold.sentence)
    occurrences = [sp for _, sp in labeled_spans(gold) if sp.length >= 2]
    if cfg.exclude_trivial:
        occurrences = [sp for sp in occurrences if sp.length < n]
    if cfg.dedup_spans:
        occurrences = sorted(set(occurrences))
    return Counter(occurrences)


def _prf(matched: int, pred_total: int, gold_total: int) -> tuple[float, float, float]:
    if pred_total == 0 and gold_total == 0:
        return 1.0, 1.0, 1.0
    precision = matched / pred_total if pred_total else 0.0
    recall = matched / gold_total if gold_total else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def _sentence_counts(
    pred: BinaryTree, gold: GoldTree, cfg: EvalConfig
) -> tuple[int, int, int]:
    if pred.sentence.tokens != gold.sentence.tokens:
        raise YieldMismatch(
            f"prediction tokens {pred.sentence.tokens} differ from gold "
            f"{gold.sentence.tokens}"
        )
    pred_counts = _pred_spans(pred, cfg)
    gold_counts = _gold_span_counts(gold, cfg)
    matched = sum((pred_counts & gold_counts).values())
    return matched, sum(pred_counts.values()), sum(gold_counts.values())


def sentence_f1(pred: BinaryTree, gold: GoldTree, cfg: EvalConfig) -> float:
    """Unlabeled span F1 for one sentence; 1.0 when both sets are empty."""
    matched, pred_total, gold_total = _sentence_counts(pred, gold, cfg)
    return _prf(matched, pred_total, gold_total)[2]


def label_recall(preds, golds, labels=None) -> dict[str, float]:
    """Fraction of gold spans per label that the predictions recover.

    Counts phrasal gold spans of length >= 2 (whole-sentence spans
    included); a label absent from the gold side is omitted.
    """
    found: dict[str, int] = defaultdict(int)
    total: dict[str, int] = defaultdict(int)
    for pred, gold in zip(preds, golds):
        pred_set = {sp for sp in pred.spans if sp.length >= 2}
        for label, sp in labeled_spans(gold):
            if sp.length < 2 or (labels is not None and label not in labels):
                continue
            total[label] += 1
            if sp in pred_set:
                found[label] += 1
    return {label: found[label] / total[label] for label in sorted(total)}


def _bucket_key(length: int, width: int) -> str:
    lo = ((length - 1) // width) * width + 1
    return f"{lo}-{lo + width - 1}"


def corpus_eval(preds, golds, cfg: EvalConfig | None = None) -> EvalReport:
    """Aggregate bracketing scores over aligned prediction/gold lists."""
    if cfg is None:
        cfg = EvalConfig()
    preds = list(preds)
    golds = list(golds)
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} golds")

    pairs = list(zip(preds, golds))
    if cfg.max_len is not None:
        pairs = [(p, g) for p, g in pairs if len(g.sentence) <= cfg.max_len]
    if not pairs:
        raise EmptyCorpus("no sentences to evaluate")

    per_sentence = []
    pooled = np.zeros(3, dtype=int)
    cutoff_pooled = np.zeros(3, dtype=int)
    for index, (pred, gold) in enumerate(pairs):
        counts = _sentence_counts(pred, gold, cfg)
        precision, recall, f1 = _prf(*counts)
        per_sentence.append(
            {
                "index": index,
                "length": len(gold.sentence),
                "precision": precision,
                "recall": recall,
                "f1": f1,
            }
        )
        pooled += counts
        if len(gold.sentence) <= CUTOFF_LEN:
            cutoff_pooled += counts

    if cfg.mode == MACRO_SENTENCE:
        precision = statistics.fmean(row["precision"] for row in per_sentence)
        recall = statistics.fmean(row["recall"] for row in per_sentence)
        f1 = statistics.fmean(row["f1"] for row in per_sentence)
    else:
        precision, recall, f1 = _prf(*pooled.tolist())

    cutoff_section = None
    if cfg.mode == EVALB_STYLE:
        cut_p, cut_r, cut_f1 = _prf(*cutoff_pooled.tolist())
        cutoff_section = {
            "max_len": CUTOFF_LEN,
            "sentences": int(sum(row["length"] <= CUTOFF_LEN for row in per_sentence)),
            "precision": cut_p,
            "recall": cut_r,
            "f1": cut_f1,
        }

    by_bucket: dict[str, list[float]] = defaultdict(list)
    for row in per_sentence:
        by_bucket[_bucket_key(row["length"], cfg.bucket_width)].append(row["f1"])
    length_buckets = {
        key: statistics.fmean(values)
        for key, values in sorted(
            by_bucket.items(), key=lambda kv: int(kv[0].split("-")[0])
        )
    }

    return EvalReport(
        mode=cfg.mode,
        f1=f1,
        precision=precision,
        recall=recall,
        per_sentence=tuple(per_sentence),
        per_label_recall=label_recall(
            [p for p, _ in pairs], [g for _, g in pairs]
        ),
        length_buckets=length_buckets,
        cutoff_section=cutoff_section,
    )


def right_branching_spans(n: int) -> frozenset[Span]:
    if n == 1:
        return frozenset({Span(0, 0)})
    return frozenset(Span(i, n - 1) for i in range(n - 1))


def left_branching_spans(n: int) -> frozenset[Span]:
    if n == 1:
        return frozenset({Span(0, 0)})
    return frozenset(Span(0, j) for j in range(1, n))


def balanced_spans(n: int) -> frozenset[Span]:
    if n == 1:
        return frozenset({Span(0, 0)})
    spans: set[Span] = set()

    def split(i: int, j: int):
        if i == j:
            return
        spans.add(Span(i, j))
        mid = (i + j) // 2
        split(i, mid)
        split(mid + 1, j)

    split(0, n - 1)
    return frozenset(spans)


def random_spans(n: int, rng) -> frozenset[Span]:
    if n == 1:
        return frozenset({Span(0, 0)})
    spans: set[Span] = set()

    def split(i: int, j: int):
        if i == j:
            return
        spans.add(Span(i, j))
        k = int(rng.integers(i, j))
        split(i, k)
        split(k + 1, j)

    split(0, n - 1)
    return frozenset(spans)


def trivial_baselines(
    golds, which: str, cfg: EvalConfig | None = None, rng_seed: int = 0
) -> EvalReport:
    """Score a structure-free baseline bracketing against the golds."""
    if which not in _BASELINES:
        raise ValueError(f"unknown baseline {which!r}, expected one of {_BASELINES}")
    golds = list(golds)
    preds = []
    for index, gold in enumerate(golds):
        n = len(gold.sentence)
        if which == LEFT:
            spans = left_branching_spans(n)
        elif which == RIGHT:
            spans = right_branching_spans(n)
        elif which == BALANCED:
            spans = balanced_spans(n)
        else:
            rng = np.random.default_rng((rng_seed, index))
            spans = random_spans(n, rng)
        preds.append(BinaryTree(sentence=gold.sentence, spans=spans))
    return corpus_eval(preds, golds, cfg)


def oracle_tree(gold: GoldTree) -> BinaryTree:
    """Best achievable binary bracketing: decode a 0/1 gold-span chart."""
    n = len(gold.sentence)
    chart = ScoreChart(n=n)
    for _, sp in labeled_spans(gold):
        chart.cells[sp.i, sp.j] = 1.0
    return cyk_decode(chart, gold.sentence)


def oracle_binary(golds, cfg: EvalConfig | None = None) -> EvalReport:
    """Upper bound on binary-tree scores against these golds."""
    golds = list(golds)
    return corpus_eval([oracle_tree(g) for g in golds], golds, cfg)


def render_report(report: EvalReport) -> str:
    """Human-readable summary block."""
    lines = [
        f"mode           {report.mode}",
        f"sentences      {len(report.per_sentence)}",
        f"precision      {report.precision:.4f}",
        f"recall         {report.recall:.4f}",
        f"f1             {report.f1:.4f}",
    ]
    if report.cutoff_section is not None:
        sec = report.cutoff_section
        lines.append(
            f"len<={sec['max_len']:<9}{sec['f1']:.4f} "
            f"({sec['sentences']} sentences)"
        )
    if report.per_label_recall:
        lines.append("label recall")
        for label, value in report.per_label_recall.items():
            lines.append(f"  {label:<12} {value:.4f}")
    if report.length_buckets:
        lines.append("f1 by length")
        for bucket, value in report.length_buckets.items():
            lines.append(f"  {bucket:<12} {value:.4f}")
    return "\n".join(lines) + "\n"


def render_length_buckets_tsv(report: EvalReport) -> str:
    lines = ["bucket\tf1"]
    lines += [f"{bucket}\t{f1:.6f}" for bucket, f1 in report.length_buckets.items()]
    return "\n".join(lines) + "\n"


def render_per_sentence_tsv(report: EvalReport) -> str:
    lines = ["index\tlength\tprecision\trecall\tf1"]
    for row in report.per_sentence:
        lines.append(
            f"{row['index']}\t{row['length']}\t{row['precision']:.6f}"
            f"\t{row['recall']:.6f}\t{row['f1']:.6f}"
        )
    return "\n".join(lines) + "\n"
