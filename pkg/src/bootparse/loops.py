"""Self-training and co-training loops over the two span classifiers.

Both loops alternate between training a classifier and harvesting
confidently-scored spans from an unlabeled corpus as new pseudo-labels.
Self-training grows the inside view alone and derives the outside view
once at the end; co-training passes confident spans back and forth
between the views, accumulating both labeled sets.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCorpus
from .scorer import (
    Thresholds,
    TrainingMeta,
    confidence_pools,
    sample_pool,
    train,
)
from .seeds import CONCAT, INSIDE, OUTSIDE, LabeledSpanExample


@dataclass(frozen=True)
class LoopConfig:
    """Shared knobs for one bootstrapping loop.

    c and d are the per-iteration harvest sizes; their ratio sets the
    class balance of the pseudo-labeled data (roughly 1:10 constituent
    to distituent in the reference setup).  pool_cap bounds how many
    corpus sentences are scored each iteration.
    """

    K: int
    c: int
    d: int
    thresholds: Thresholds = field(default_factory=Thresholds)
    pool_cap: int = 5000
    rng_seed: int = 0
    # Alternative reading of the self-training update: keep earlier
    # examples instead of replacing the labeled set each iteration.
    accumulate_self_train: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.c < 0 or self.d < 0:
            raise ValueError(f"c and d must be >= 0, got c={self.c} d={self.d}")
        if self.pool_cap < 1:
            raise ValueError(f"pool_cap must be >= 1, got {self.pool_cap}")


@dataclass(frozen=True)
class IterationRecord:
    """Sizes and validation metrics observed in one loop iteration."""

    iteration: int
    inside_size: int
    outside_size: int
    pools: dict[str, int]
    selected: dict[str, int]
    metrics: dict[str, dict]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


@dataclass(frozen=True)
class LoopTrace:
    """One record per completed iteration, in order."""

    records: tuple[IterationRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self) -> str:
        return "".join(rec.to_json() + "\n" for rec in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "LoopTrace":
        records = []
        for line in text.splitlines():
            if not line.strip():
                continue
            records.append(IterationRecord(**json.loads(line)))
        return cls(records=tuple(records))


@dataclass(frozen=True)
class LoopResult:
    """Models, per-iteration trace, and the final labeled sets.

    Unpacks as (m_in, m_out, trace); the labeled sets ride along so a
    later co-training stage can pick up where this loop stopped.
    """

    m_in: object
    m_out: object
    trace: LoopTrace
    inside_examples: tuple[LabeledSpanExample, ...]
    outside_examples: tuple[LabeledSpanExample, ...]

    def __iter__(self):
        return iter((self.m_in, self.m_out, self.trace))


def _scoring_pool(unlabeled, cap: int):
    ordered = sorted(unlabeled, key=lambda s: s.id)
    return ordered[:cap]


def _merge_corpora(*corpora):
    seen: dict[int, object] = {}
    for corpus in corpora:
        for sent in corpus:
            seen.setdefault(sent.id, sent)
    return list(seen.values())


def _with_view(example: LabeledSpanExample, view: str) -> LabeledSpanExample:
    if example.view == view:
        return example
    return LabeledSpanExample(example.sentence_id, example.span, example.label, view)


def _union(existing, new):
    """Append examples not already present, preserving order."""
    seen = {(e.sentence_id, e.span, e.label, e.view) for e in existing}
    merged = list(existing)
    for ex in new:
        key = (ex.sentence_id, ex.span, ex.label, ex.view)
        if key not in seen:
            seen.add(key)
            merged.append(ex)
    return merged


def self_train(
    inside_examples,
    unlabeled,
    cfg: LoopConfig,
    *,
    lookup=None,
    meta: TrainingMeta | None = None,
    trainer=train,
) -> LoopResult:
    """Grow the inside classifier by pseudo-labeling its own output.

    Each iteration trains on the current labeled set, harvests c
    confident constituents and d confident distituents from the corpus,
    and replaces the labeled set with the harvest.  After the last
    iteration the surviving examples are converted to the outside view
    and the outside classifier is trained on them once.

    The replacement update means seed examples are gone after one
    iteration; pass a config with accumulate_self_train=True to keep
    them.  With c = d = 0 the labeled set empties out and training the
    outside model raises SingleClassInput.
    """
    unlabeled = list(unlabeled)
    if not unlabeled:
        raise EmptyCorpus("self_train needs at least one unlabeled sentence")
    sentences = _merge_corpora(lookup or [], unlabeled)
    pool_sents = _scoring_pool(unlabeled, cfg.pool_cap)

    current = list(inside_examples)
    records = []
    m_in = None
    for k in range(cfg.K):
        m_in = trainer(current, sentences, INSIDE, meta)
        const_pool, dist_pool = confidence_pools(m_in, pool_sents, cfg.thresholds)
        rng = np.random.default_rng((cfg.rng_seed, 1, k))
        harvested_c = sample_pool(const_pool, cfg.c, rng, "constituent")
        harvested_d = sample_pool(dist_pool, cfg.d, rng, "distituent")
        if cfg.accumulate_self_train:
            current = _union(current, harvested_c + harvested_d)
        else:
            current = list(harvested_c) + list(harvested_d)
        records.append(
            IterationRecord(
                iteration=k,
                inside_size=len(current),
                outside_size=0,
                pools={
                    "inside_constituent": len(const_pool),
                    "inside_distituent": len(dist_pool),
                },
                selected={
                    "constituent": len(harvested_c),
                    "distituent": len(harvested_d),
                },
                metrics={"inside": dict(m_in.val_metrics)},
            )
        )

    outside = [_with_view(ex, OUTSIDE) for ex in current]
    m_out = trainer(outside, sentences, OUTSIDE, meta)
    return LoopResult(
        m_in=m_in,
        m_out=m_out,
        trace=LoopTrace(records=tuple(records)),
        inside_examples=tuple(current),
        outside_examples=tuple(outside),
    )


def co_train(
    inside_examples,
    outside_examples,
    unlabeled,
    cfg: LoopConfig,
    *,
    lookup=None,
    meta: TrainingMeta | None = None,
    trainer=train,
) -> LoopResult:
    """Let each view teach the other.

    Per iteration: the outside model's confident spans join the inside
    set (as inside-view examples), the inside model is retrained, its
    confident spans join the outside set, and the outside model is
    retrained.  Both sets only grow; models are re-trained from scratch
    each time so runs are reproducible.
    """
    unlabeled = list(unlabeled)
    if not unlabeled:
        raise EmptyCorpus("co_train needs at least one unlabeled sentence")
    sentences = _merge_corpora(lookup or [], unlabeled)
    pool_sents = _scoring_pool(unlabeled, cfg.pool_cap)

    inside_set = [_with_view(ex, INSIDE) for ex in inside_examples]
    outside_set = [_with_view(ex, OUTSIDE) for ex in outside_examples]
    m_out = trainer(outside_set, sentences, OUTSIDE, meta)
    m_in = None
    records = []
    for k in range(cfg.K):
        out_const, out_dist = confidence_pools(m_out, pool_sents, cfg.thresholds)
        rng = np.random.default_rng((cfg.rng_seed, 2, k))
        from_outside = sample_pool(
            out_const, cfg.c, rng, "constituent"
        ) + sample_pool(out_dist, cfg.d, rng, "distituent")
        inside_set = _union(
            inside_set, [_with_view(ex, INSIDE) for ex in from_outside]
        )
        m_in = trainer(inside_set, sentences, INSIDE, meta)

        in_const, in_dist = confidence_pools(m_in, pool_sents, cfg.thresholds)
        rng = np.random.default_rng((cfg.rng_seed, 3, k))
        from_inside = sample_pool(in_const, cfg.c, rng, "constituent") + sample_pool(
            in_dist, cfg.d, rng, "distituent"
        )
        outside_set = _union(
            outside_set, [_with_view(ex, OUTSIDE) for ex in from_inside]
        )
        m_out = trainer(outside_set, sentences, OUTSIDE, meta)

        records.append(
            IterationRecord(
                iteration=k,
                inside_size=len(inside_set),
                outside_size=len(outside_set),
                pools={
                    "outside_constituent": len(out_const),
                    "outside_distituent": len(out_dist),
                    "inside_constituent": len(in_const),
                    "inside_distituent": len(in_dist),
                },
                selected={
                    "from_outside": len(from_outside),
                    "from_inside": len(from_inside),
                },
                metrics={
                    "inside": dict(m_in.val_metrics),
                    "outside": dict(m_out.val_metrics),
                },
            )
        )

    return LoopResult(
        m_in=m_in,
        m_out=m_out,
        trace=LoopTrace(records=tuple(records)),
        inside_examples=tuple(inside_set),
        outside_examples=tuple(outside_set),
    )


def concat_baseline(
    inside_examples,
    outside_examples,
    unlabeled,
    cfg: LoopConfig,
    *,
    lookup=None,
    meta: TrainingMeta | None = None,
    trainer=train,
):
    """Single classifier over joined inside+outside features.

    An ablation arm: instead of two cooperating models, one model sees
    both views of every labeled span at once.  No bootstrapping is
    involved; the corpus argument only resolves sentence ids.
    """
    sentences = _merge_corpora(lookup or [], unlabeled)
    atoms: dict[tuple, LabeledSpanExample] = {}
    for ex in list(inside_examples) + list(outside_examples):
        key = (ex.sentence_id, ex.span, ex.label)
        if key not in atoms:
            atoms[key] = _with_view(ex, CONCAT)
    return trainer(list(atoms.values()), sentences, CONCAT, meta)
