"""Span classifiers over two views of a span.

The inside view reads the tokens x_i .. x_j themselves; the outside
view reads only the bordering tokens (x_{i-1}, x_{j+1}) with sentinels
at the sentence edges, never the material in between.  Both are scored
with a regularized logistic model over sparse indicator features, and
combined multiplicatively at decode time.
"""

from __future__ import annotations

import json
import warnings
import zlib
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.special import expit

from .decoder import ScoreChart
from .errors import (
    LengthMismatch,
    PoolExhaustedWarning,
    SingleClassInput,
    UndefinedMccWarning,
)
from .seeds import CONCAT, CONSTITUENT, DISTITUENT, INSIDE, OUTSIDE, LabeledSpanExample
from .treebank import Sentence, Span

BOS = "<s>"
EOS = "</s>"
HOLE = "<mask>"

# scores are clipped into the open interval (0, 1)
PROB_EPS = 1e-12

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class InsideString:
    """The token sequence a span covers."""

    tokens: tuple[str, ...]

    @classmethod
    def from_span(cls, sentence: Sentence, span: Span) -> "InsideString":
        if span.j >= len(sentence):
            raise ValueError(f"span {span} outside sentence {sentence.id}")
        return cls(tokens=sentence.tokens[span.i : span.j + 1])


@dataclass(frozen=True)
class OutsideTriple:
    """Bordering context of a span: (left, hole, right) with sentinels."""

    left: str
    right: str
    hole: str = HOLE

    @classmethod
    def from_span(cls, sentence: Sentence, span: Span) -> "OutsideTriple":
        if span.j >= len(sentence):
            raise ValueError(f"span {span} outside sentence {sentence.id}")
        left = sentence.tokens[span.i - 1] if span.i > 0 else BOS
        right = sentence.tokens[span.j + 1] if span.j + 1 < len(sentence) else EOS
        return cls(left=left, right=right)


def _length_bin(length: int) -> str:
    if length <= 5:
        return str(length)
    if length <= 8:
        return "6-8"
    if length <= 12:
        return "9-12"
    return "13+"


def featurize(
    sentence: Sentence, span: Span, view: str, inside_context: bool = False
) -> dict[str, float]:
    """Sparse feature map for one span under one view.

    The outside view depends only on the bordering tokens, so any two
    spans with the same outside triple get identical features.  The
    inside view reads the covered tokens; inside_context additionally
    exposes the bordering tokens to it (off by default: with seeds whose
    positives all touch the sentence end, a next-token sentinel feature
    separates the classes on its own and the model learns nothing about
    the span content).
    """
    if view == CONCAT:
        feats = featurize(sentence, span, INSIDE, inside_context)
        feats.update(featurize(sentence, span, OUTSIDE))
        return feats

    feats: dict[str, float] = {}
    if view == OUTSIDE:
        triple = OutsideTriple.from_span(sentence, span)
        feats[f"left={triple.left}"] = 1.0
        feats[f"right={triple.right}"] = 1.0
        feats[f"lr={triple.left}|{triple.right}"] = 1.0
        if triple.left == BOS:
            feats["bos"] = 1.0
        if triple.right == EOS:
            feats["eos"] = 1.0
        return feats
    if view != INSIDE:
        raise ValueError(f"unknown view {view!r}")

    toks = InsideString.from_span(sentence, span).tokens
    for tok in toks:
        key = f"u={tok}"
        feats[key] = feats.get(key, 0.0) + 1.0
    for a, b in zip(toks, toks[1:]):
        key = f"b={a}|{b}"
        feats[key] = feats.get(key, 0.0) + 1.0
    feats[f"first={toks[0]}"] = 1.0
    feats[f"last={toks[-1]}"] = 1.0
    feats[f"len={_length_bin(span.length)}"] = 1.0
    feats[f"pos={min(3, 4 * span.i // len(sentence))}"] = 1.0
    if inside_context:
        triple = OutsideTriple.from_span(sentence, span)
        feats[f"prev={triple.left}"] = 1.0
        feats[f"next={triple.right}"] = 1.0
    return feats


@dataclass
class FeatureSpace:
    """Maps feature dicts to column indices.

    Vocabulary mode (default) enumerates features seen while fitting and
    drops unseen ones at transform time; hashing mode buckets every name
    with crc32 into a fixed dimension and needs no fit.
    """

    view: str
    inside_context: bool = False
    hash_dim: int | None = None
    names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._index = {name: k for k, name in enumerate(self.names)}

    @property
    def dim(self) -> int:
        return self.hash_dim if self.hash_dim is not None else len(self.names)

    def _column(self, name: str) -> int | None:
        if self.hash_dim is not None:
            return zlib.crc32(name.encode("utf-8")) % self.hash_dim
        return self._index.get(name)

    def fit(self, feature_dicts) -> "FeatureSpace":
        if self.hash_dim is None:
            for feats in feature_dicts:
                for name in feats:
                    if name not in self._index:
                        self._index[name] = len(self.names)
                        self.names.append(name)
        return self

    def features(self, sentence: Sentence, span: Span) -> dict[str, float]:
        return featurize(sentence, span, self.view, self.inside_context)

    def transform(self, feature_dicts) -> sparse.csr_matrix:
        data: list[float] = []
        indices: list[int] = []
        indptr = [0]
        for feats in feature_dicts:
            cols: dict[int, float] = {}
            for name, value in feats.items():
                col = self._column(name)
                if col is not None:
                    cols[col] = cols.get(col, 0.0) + value
            for col in sorted(cols):
                indices.append(col)
                data.append(cols[col])
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(indptr) - 1, self.dim),
        )


@dataclass(frozen=True)
class TrainingMeta:
    """Optimization settings, stored alongside the weights."""

    epochs: int = 30
    learning_rate: float = 0.5
    batch_size: int = 64
    l2: float = 1e-5
    rng_seed: int = 0
    example_count: int = 0


@dataclass
class SpanScorer:
    """A trained logistic model over one view's features."""

    view: str
    space: FeatureSpace
    weights: np.ndarray
    bias: float
    meta: TrainingMeta
    val_metrics: dict[str, float] = field(default_factory=dict)

    def score_spans(self, sentence: Sentence, spans) -> np.ndarray:
        dicts = [self.space.features(sentence, sp) for sp in spans]
        matrix = self.space.transform(dicts)
        z = matrix @ self.weights + self.bias
        return np.clip(expit(z), PROB_EPS, 1.0 - PROB_EPS)


@dataclass
class ConstantScorer:
    """Test double / fusion identity: the same score for every span."""

    value: float
    view: str = OUTSIDE

    def score_spans(self, sentence: Sentence, spans) -> np.ndarray:
        return np.full(len(list(spans)), self.value)


def score_span(model, sentence: Sentence, span: Span) -> float:
    return float(model.score_spans(sentence, [span])[0])


def _log_loss(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def train(
    examples,
    corpus,
    view: str,
    meta: TrainingMeta | None = None,
    inside_context: bool = False,
    hash_dim: int | None = None,
) -> SpanScorer:
    """Fit a logistic span classifier on labeled examples.

    Holds out 20% of the examples for validation, minimizes L2-penalized
    log loss with mini-batch gradient steps, and stops early once the
    validation loss has failed to improve twice in a row, restoring the
    best checkpoint.  Bit-for-bit reproducible for a fixed rng_seed.
    """
    if meta is None:
        meta = TrainingMeta()
    examples = list(examples)
    labels = {ex.label for ex in examples}
    if labels != {CONSTITUENT, DISTITUENT}:
        raise SingleClassInput(
            f"need both classes, got {sorted(labels)} over {len(examples)} examples"
        )
    for ex in examples:
        if ex.view != view:
            raise ValueError(f"example has view {ex.view!r}, expected {view!r}")

    by_id = {sent.id: sent for sent in corpus}
    missing = [ex.sentence_id for ex in examples if ex.sentence_id not in by_id]
    if missing:
        raise ValueError(f"examples reference unknown sentences {sorted(set(missing))[:5]}")

    rng = np.random.default_rng(meta.rng_seed)
    perm = rng.permutation(len(examples))
    n_val = len(examples) // 5
    val_idx, train_idx = perm[:n_val], perm[n_val:]

    def build(idx):
        dicts = []
        y = np.empty(len(idx))
        for row, k in enumerate(idx):
            ex = examples[k]
            dicts.append(
                featurize(by_id[ex.sentence_id], ex.span, view, inside_context)
            )
            y[row] = float(ex.label)
        return dicts, y

    train_dicts, y_train = build(train_idx)
    val_dicts, y_val = build(val_idx)

    space = FeatureSpace(view=view, inside_context=inside_context, hash_dim=hash_dim)
    space.fit(train_dicts)
    x_train = space.transform(train_dicts)
    x_val = space.transform(val_dicts)

    w = np.zeros(space.dim)
    b = 0.0
    best = (np.inf, w.copy(), b)
    stale = 0
    n = x_train.shape[0]
    batch = max(1, meta.batch_size)

    for _ in range(meta.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch):
            rows = order[lo : lo + batch]
            xb = x_train[rows]
            yb = y_train[rows]
            p = expit(xb @ w + b)
            resid = p - yb
            grad_w = xb.T @ resid / len(rows) + meta.l2 * w
            grad_b = float(np.mean(resid))
            w -= meta.learning_rate * grad_w
            b -= meta.learning_rate * grad_b
        if len(val_idx) == 0:
            continue
        val_loss = _log_loss(expit(x_val @ w + b), y_val)
        if val_loss < best[0]:
            best = (val_loss, w.copy(), b)
            stale = 0
        else:
            stale += 1
            if stale >= 2:
                break

    if len(val_idx) > 0 and np.isfinite(best[0]):
        _, w, b = best

    metrics: dict[str, float] = {}
    if len(val_idx) > 0:
        p_val = np.clip(expit(x_val @ w + b), PROB_EPS, 1.0 - PROB_EPS)
        pred = (p_val >= 0.5).astype(int)
        yv = y_val.astype(int)
        metrics["val_loss"] = _log_loss(p_val, y_val)
        metrics["val_accuracy"] = float(np.mean(pred == yv))
        tp = int(np.sum((pred == 1) & (yv == 1)))
        fp = int(np.sum((pred == 1) & (yv == 0)))
        fn = int(np.sum((pred == 0) & (yv == 1)))
        metrics["val_f1"] = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UndefinedMccWarning)
            metrics["val_mcc"] = compute_mcc(pred.tolist(), yv.tolist())

    return SpanScorer(
        view=view,
        space=space,
        weights=w,
        bias=float(b),
        meta=replace(meta, example_count=len(examples)),
        val_metrics=metrics,
    )


def _all_spans(n: int, min_len: int = 2):
    for i in range(n):
        for j in range(i + max(0, min_len - 1), n):
            yield Span(i, j)


def score_chart(model_or_pair, sentence: Sentence, renormalize: bool = False) -> ScoreChart:
    """Fill a chart with span scores; a pair multiplies inside by outside.

    Renormalization maps (p1, p2) to p1 p2 / (p1 p2 + (1-p1)(1-p2)),
    which leaves a pair with a constant-1/2 partner unchanged.
    """
    n = len(sentence)
    spans = [Span(i, j) for i in range(n) for j in range(i, n)]
    if isinstance(model_or_pair, (tuple, list)):
        inside_model, outside_model = model_or_pair
        if (inside_model.view, outside_model.view) != (INSIDE, OUTSIDE):
            raise ValueError(
                "pair must be (inside, outside) models, got "
                f"({inside_model.view!r}, {outside_model.view!r})"
            )
        p1 = np.asarray(inside_model.score_spans(sentence, spans))
        p2 = np.asarray(outside_model.score_spans(sentence, spans))
        probs = p1 * p2
        if renormalize:
            probs = probs / (probs + (1.0 - p1) * (1.0 - p2))
    else:
        probs = np.asarray(model_or_pair.score_spans(sentence, spans))
    chart = ScoreChart(n=n)
    for sp, p in zip(spans, probs):
        chart.cells[sp.i, sp.j] = p
    return chart


@dataclass(frozen=True)
class Thresholds:
    """Confidence cutoffs; both comparisons are strict."""

    tau_min: float = 0.0005
    tau_max: float = 0.995

    def __post_init__(self):
        if not (0.0 <= self.tau_min < self.tau_max <= 1.0):
            raise ValueError(f"bad thresholds ({self.tau_min}, {self.tau_max})")


def confidence_pools(
    model, corpus, thresholds: Thresholds
) -> tuple[list[LabeledSpanExample], list[LabeledSpanExample]]:
    """Split every multi-token span into confident pools by score.

    Scores strictly above tau_max go to the constituent pool, strictly
    below tau_min to the distituent pool; everything between is dropped.
    Single-token spans carry no bracketing signal and are skipped.
    """
    const_pool: list[LabeledSpanExample] = []
    dist_pool: list[LabeledSpanExample] = []
    for sent in corpus:
        spans = list(_all_spans(len(sent)))
        if not spans:
            continue
        probs = model.score_spans(sent, spans)
        for sp, p in zip(spans, probs):
            if p > thresholds.tau_max:
                const_pool.append(
                    LabeledSpanExample(sent.id, sp, CONSTITUENT, model.view)
                )
            elif p < thresholds.tau_min:
                dist_pool.append(
                    LabeledSpanExample(sent.id, sp, DISTITUENT, model.view)
                )
    return const_pool, dist_pool


def sample_pool(
    pool: list[LabeledSpanExample], want: int, rng, what: str
) -> list[LabeledSpanExample]:
    """Uniform sample without replacement, preserving pool order.

    Takes the whole pool (with a PoolExhaustedWarning) when it is
    smaller than requested.
    """
    if want > len(pool):
        warnings.warn(
            f"{what} pool has {len(pool)} spans, wanted {want}",
            PoolExhaustedWarning,
        )
    take = min(want, len(pool))
    if take == 0:
        return []
    chosen = rng.choice(len(pool), size=take, replace=False)
    return [pool[k] for k in sorted(chosen)]


def select_confident(
    model,
    corpus,
    thresholds: Thresholds,
    c: int,
    d: int,
    rng_seed: int = 0,
) -> tuple[list[LabeledSpanExample], list[LabeledSpanExample]]:
    """Sample pseudo-labeled spans from the extremes of the score range.

    Every span of length >= 2 (whole sentences included) is scored; the
    pools score > tau_max and score < tau_min are sampled uniformly
    without replacement down to c and d items.  Warns when a pool runs
    short.
    """
    const_pool, dist_pool = confidence_pools(model, corpus, thresholds)
    rng = np.random.default_rng(rng_seed)
    return (
        sample_pool(const_pool, c, rng, "constituent"),
        sample_pool(dist_pool, d, rng, "distituent"),
    )


def compute_mcc(predictions, labels) -> float:
    """Matthews correlation of binary predictions against labels.

    Returns 0 (with UndefinedMccWarning) when a marginal is zero and the
    coefficient is undefined.
    """
    predictions = list(predictions)
    labels = list(labels)
    if len(predictions) != len(labels):
        raise LengthMismatch(
            f"{len(predictions)} predictions vs {len(labels)} labels"
        )
    tp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 1)
    tn = sum(1 for p, y in zip(predictions, labels) if p == 0 and y == 0)
    fp = sum(1 for p, y in zip(predictions, labels) if p == 1 and y == 0)
    fn = sum(1 for p, y in zip(predictions, labels) if p == 0 and y == 1)
    denom_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom_sq == 0:
        warnings.warn("MCC undefined: a marginal is zero", UndefinedMccWarning)
        return 0.0
    return (tp * tn - fp * fn) / float(np.sqrt(denom_sq))


def save_model(model: SpanScorer, path) -> None:
    """Versioned structured-text dump; stable bytes for stable inputs."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "view": model.view,
        "feature_space": {
            "inside_context": model.space.inside_context,
            "hash_dim": model.space.hash_dim,
            "names": model.space.names,
        },
        "weights": [float(x) for x in model.weights],
        "bias": model.bias,
        "meta": {
            "epochs": model.meta.epochs,
            "learning_rate": model.meta.learning_rate,
            "batch_size": model.meta.batch_size,
            "l2": model.meta.l2,
            "rng_seed": model.meta.rng_seed,
            "example_count": model.meta.example_count,
        },
        "val_metrics": model.val_metrics,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> SpanScorer:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {version!r}")
    fs = payload["feature_space"]
    space = FeatureSpace(
        view=payload["view"],
        inside_context=fs["inside_context"],
        hash_dim=fs["hash_dim"],
        names=list(fs["names"]),
    )
    return SpanScorer(
        view=payload["view"],
        space=space,
        weights=np.asarray(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        meta=TrainingMeta(**payload["meta"]),
        val_metrics=dict(payload["val_metrics"]),
    )
