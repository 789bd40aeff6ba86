"""Span-sum tree decoding and chart post-processing.

The decoder picks the binary tree whose spans maximize the sum of chart
scores.  ``enumerate_trees`` provides the brute-force reference used to
test the dynamic program; it is exponential (Catalan numbers) and
guarded accordingly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import TooLarge
from .treebank import BinaryTree, Sentence, Span

# enumerate_trees(13) would yield 208012 trees; stop before that.
MAX_ENUMERATION = 12


@dataclass(eq=False)
class ScoreChart:
    """Upper-triangular matrix of span scores for one sentence."""

    n: int
    cells: np.ndarray = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("chart needs at least one token")
        if self.cells is None:
            self.cells = np.zeros((self.n, self.n), dtype=float)
        else:
            self.cells = np.asarray(self.cells, dtype=float)
            if self.cells.shape != (self.n, self.n):
                raise ValueError(
                    f"cells shape {self.cells.shape} does not match n={self.n}"
                )
        if not np.all(np.isfinite(self.cells)):
            raise ValueError("chart contains non-finite scores")

    def get(self, i: int, j: int) -> float:
        return float(self.cells[i, j])

    def set(self, i: int, j: int, value: float) -> None:
        Span(i, j)  # bounds sanity
        self.cells[i, j] = value

    def copy(self) -> "ScoreChart":
        return ScoreChart(n=self.n, cells=self.cells.copy())


def _placeholder_sentence(n: int) -> Sentence:
    return Sentence(id=-1, tokens=tuple(f"w{k}" for k in range(n)))


def cyk_decode(chart: ScoreChart, sentence: Sentence | None = None) -> BinaryTree:
    """Best binary tree under the span-score sum, ties to the smallest split.

    best(i, j) = s(i, j) + max_k [best(i, k) + best(k+1, j)], with
    best(i, i) = s(i, i).  Leaf scores shift every tree's total by the
    same amount, so they never change the argmax.
    """
    n = chart.n
    if sentence is None:
        sentence = _placeholder_sentence(n)
    if len(sentence) != n:
        raise ValueError(f"sentence has {len(sentence)} tokens, chart has {n}")
    if n == 1:
        return BinaryTree(sentence=sentence, spans=frozenset({Span(0, 0)}))

    s = chart.cells
    best = np.zeros((n, n))
    split = np.zeros((n, n), dtype=int)
    for i in range(n):
        best[i, i] = s[i, i]
    for length in range(2, n + 1):
        for i in range(0, n - length + 1):
            j = i + length - 1
            # candidate totals for k = i .. j-1; argmax takes the first
            # (smallest k) on ties.
            cand = best[i, i:j] + best[i + 1 : j + 1, j]
            k_rel = int(np.argmax(cand))
            split[i, j] = i + k_rel
            best[i, j] = s[i, j] + cand[k_rel]

    spans = set()

    def backtrace(i: int, j: int):
        if i == j:
            return
        spans.add(Span(i, j))
        k = split[i, j]
        backtrace(i, k)
        backtrace(k + 1, j)

    backtrace(0, n - 1)
    return BinaryTree(sentence=sentence, spans=frozenset(spans))


def enumerate_trees(n: int) -> list[frozenset[Span]]:
    """All binary bracketings of n tokens, as span sets (length >= 2 spans).

    Returns Catalan(n-1) trees.  Raises TooLarge above MAX_ENUMERATION.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > MAX_ENUMERATION:
        raise TooLarge(f"n={n} exceeds enumeration guard {MAX_ENUMERATION}")
    if n == 1:
        return [frozenset({Span(0, 0)})]

    memo: dict[tuple[int, int], list[frozenset[Span]]] = {}

    def trees(i: int, j: int) -> list[frozenset[Span]]:
        if i == j:
            return [frozenset()]
        key = (i, j)
        if key in memo:
            return memo[key]
        out = []
        for k in range(i, j):
            for left in trees(i, k):
                for right in trees(k + 1, j):
                    out.append(left | right | {Span(i, j)})
        memo[key] = out
        return out

    return trees(0, n - 1)


def tree_score(chart: ScoreChart, spans) -> float:
    """Sum of chart scores over a tree's spans plus all leaf cells.

    Matches the decoder objective, which includes best(i, i) = s(i, i)
    for every token.
    """
    total = float(sum(chart.cells[i, i] for i in range(chart.n)))
    for sp in spans:
        if sp.length >= 2:
            total += chart.cells[sp.i, sp.j]
    return total


@dataclass(frozen=True)
class HeuristicConfig:
    """Corpus statistics driving the chart refinement rules.

    All statistics come from the training corpus, never from the text
    being parsed.  ``None`` disables the corresponding rule.
    """

    enabled: bool = False
    comma_successor_word: str | None = None
    common_start_word: str | None = None
    top_frequency_set: frozenset[str] = frozenset()
    stopword_set: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(self.top_frequency_set) > 100:
            raise ValueError("top_frequency_set is capped at 100 tokens")


def _is_cased_run_token(token: str) -> bool:
    # title-case or upper-case shape: leading uppercase letter
    return token[:1].isupper()


def rare_cased_runs(sentence: Sentence, top_frequency_set) -> list[Span]:
    """Maximal runs (length >= 2) of capitalized tokens outside the
    frequency list."""
    runs = []
    start = None
    for pos, tok in enumerate(sentence.tokens):
        if _is_cased_run_token(tok) and tok not in top_frequency_set:
            if start is None:
                start = pos
        else:
            if start is not None and pos - start >= 2:
                runs.append(Span(start, pos - 1))
            start = None
    if start is not None and len(sentence) - start >= 2:
        runs.append(Span(start, len(sentence) - 1))
    return runs


def load_stopwords() -> frozenset[str]:
    """The bundled English stopword list (179 words, one per line)."""
    text = (
        resources.files("bootparse.data")
        .joinpath("english_stopwords.txt")
        .read_text(encoding="utf-8")
    )
    return frozenset(line for line in text.splitlines() if line)


def heuristics_from_corpus(
    sentences, stopword_set=None, enabled: bool = True
) -> HeuristicConfig:
    """Collect the refinement statistics from training text.

    Statistics never come from the text being parsed: the word most
    often following a comma, the most common sentence-start word, and
    the 100 most frequent tokens.  Count ties break toward the
    lexicographically smaller token so the result is deterministic.
    """
    comma_succ = Counter()
    starts = Counter()
    freq = Counter()
    for s in sentences:
        toks = s.tokens
        if toks:
            starts[toks[0]] += 1
        freq.update(toks)
        for prev, cur in zip(toks, toks[1:]):
            if prev == ",":
                comma_succ[cur] += 1

    def best(counter):
        if not counter:
            return None
        return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    top = sorted(freq, key=lambda tok: (-freq[tok], tok))[:100]
    return HeuristicConfig(
        enabled=enabled,
        comma_successor_word=best(comma_succ),
        common_start_word=best(starts),
        top_frequency_set=frozenset(top),
        stopword_set=(
            load_stopwords() if stopword_set is None else frozenset(stopword_set)
        ),
    )


def apply_heuristics(
    chart: ScoreChart, sentence: Sentence, cfg: HeuristicConfig
) -> ScoreChart:
    """Overwrite chart cells according to the refinement rules.

    (a) spans that start or end with the word most commonly following a
        comma are killed; (b) two-token spans opening the sentence with
        the most common sentence-start word followed by a non-stopword
        are forced in; (c) proper sub-spans of a rare capitalized run are
        killed so the run is kept whole.  Idempotent.
    """
    if not cfg.enabled:
        return chart
    if len(sentence) != chart.n:
        raise ValueError("sentence does not match chart size")
    out = chart.copy()
    toks = sentence.tokens
    n = chart.n

    if cfg.comma_successor_word is not None:
        w = cfg.comma_successor_word
        for i in range(n):
            for j in range(i, n):
                if toks[i] == w or toks[j] == w:
                    out.cells[i, j] = 0.0

    if cfg.common_start_word is not None and n >= 2:
        if toks[0] == cfg.common_start_word and toks[1] not in cfg.stopword_set:
            out.cells[0, 1] = 1.0

    for run in rare_cased_runs(sentence, cfg.top_frequency_set):
        for i in range(run.i, run.j + 1):
            for j in range(i + 1, run.j + 1):
                if (i, j) != (run.i, run.j):
                    out.cells[i, j] = 0.0

    return out
