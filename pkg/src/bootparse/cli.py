"""Pipeline subcommands: synth, bootstrap, train, selftrain, cotrain,
parse, eval, report.

Every subcommand is a pure function of its config, input files, and rng
seed; outputs carry no timestamps, so re-runs are byte-identical.  Exit
codes: 0 success, 1 usage or config error, 2 data error, 3 internal
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import EXTERNAL_BACKEND, PipelineConfig, load_config
from .decoder import (
    HeuristicConfig,
    apply_heuristics,
    cyk_decode,
    heuristics_from_corpus,
    load_stopwords,
)
from .errors import (
    BootparseError,
    ConfigError,
    EmptyCorpus,
    ExternalScorerError,
    LengthMismatch,
    NonterminatingGrammar,
    SingleClassInput,
    TreeSyntaxError,
    YieldMismatch,
)
from .evaluation import (
    BALANCED,
    LEFT,
    RANDOM,
    RIGHT,
    corpus_eval,
    oracle_binary,
    render_length_buckets_tsv,
    render_per_sentence_tsv,
    render_report,
    trivial_baselines,
)
from .external import ExternalScorer
from .loops import LoopTrace, co_train, self_train
from .scorer import INSIDE, load_model, save_model, score_chart, train
from .seeds import generate_seeds, read_seed_file, write_seed_file
from .synth import SyntheticGrammar, builtin_grammar, generate_corpus
from .treebank import (
    binary_from_tree,
    parse_bracketed,
    read_corpus,
    read_treebank,
    serialize,
    write_corpus,
)

SEED_FILE = "seeds.tsv"
INSIDE_SEED_MODEL = "inside_seed.json"
HEURISTICS_FILE = "heuristics.json"
TRAIN_LOG = "train_log.json"
SELF_IN_MODEL = "self_in.json"
SELF_OUT_MODEL = "self_out.json"
SELF_TRACE = "self_trace.jsonl"
SELF_INSIDE_SET = "self_inside.tsv"
SELF_OUTSIDE_SET = "self_outside.tsv"
CO_IN_MODEL = "co_in.json"
CO_OUT_MODEL = "co_out.json"
CO_TRACE = "co_trace.jsonl"

_DATA_ERRORS = (
    TreeSyntaxError,
    EmptyCorpus,
    YieldMismatch,
    LengthMismatch,
    NonterminatingGrammar,
    SingleClassInput,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    UnicodeDecodeError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load(args) -> PipelineConfig:
    try:
        return load_config(args.config)
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc


def _model_dir(cfg: PipelineConfig) -> Path:
    path = Path(cfg.paths.model_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _report_dir(cfg: PipelineConfig) -> Path:
    path = Path(cfg.paths.report_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _corpus(cfg: PipelineConfig):
    if cfg.paths.corpus is None:
        raise ConfigError("paths.corpus is not set")
    return read_corpus(cfg.paths.corpus)


# ---------------------------------------------------------------- synth


def _grammar_from_file(path) -> SyntheticGrammar:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        rules = {
            lhs: tuple((float(p), tuple(rhs)) for p, rhs in prods)
            for lhs, prods in raw["rules"].items()
        }
        lexicon = {pre: tuple(words) for pre, words in raw["lexicon"].items()}
        return SyntheticGrammar(
            start=raw.get("start", "S"),
            rules=rules,
            lexicon=lexicon,
            max_depth=raw.get("max_depth", 40),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad grammar file {path}: {exc}") from exc


def cmd_synth(args) -> int:
    grammar = (
        _grammar_from_file(args.grammar) if args.grammar else builtin_grammar()
    )
    golds = generate_corpus(
        grammar,
        args.count,
        rng_seed=args.rng_seed,
        min_len=args.min_len,
        max_len=args.max_len,
    )
    write_corpus([g.sentence for g in golds], args.out)
    if args.gold:
        with open(args.gold, "w", encoding="utf-8") as fh:
            for g in golds:
                fh.write(serialize(g))
                fh.write("\n")
    print(f"wrote {len(golds)} sentences to {args.out}")
    return 0


# ------------------------------------------------------------ bootstrap


def cmd_bootstrap(args) -> int:
    cfg = _load(args)
    corpus = _corpus(cfg)
    examples = generate_seeds(corpus, cfg.seeds)
    out = Path(args.out) if args.out else _model_dir(cfg) / SEED_FILE
    write_seed_file(examples, out)
    print(f"wrote {len(examples)} seed examples to {out}")
    return 0


# ---------------------------------------------------------------- train


def _has_explicit_stats(h: HeuristicConfig) -> bool:
    return (
        h.comma_successor_word is not None
        or h.common_start_word is not None
        or bool(h.top_frequency_set)
    )


def _heuristics_to_file(h: HeuristicConfig, path: Path) -> None:
    payload = {
        "enabled": h.enabled,
        "comma_successor_word": h.comma_successor_word,
        "common_start_word": h.common_start_word,
        "top_frequency_set": sorted(h.top_frequency_set),
        "stopword_set": sorted(h.stopword_set),
    }
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _heuristics_from_file(path: Path) -> HeuristicConfig:
    raw = json.loads(path.read_text(encoding="utf-8"))
    return HeuristicConfig(
        enabled=raw["enabled"],
        comma_successor_word=raw["comma_successor_word"],
        common_start_word=raw["common_start_word"],
        top_frequency_set=frozenset(raw["top_frequency_set"]),
        stopword_set=frozenset(raw["stopword_set"]),
    )


def cmd_train(args) -> int:
    cfg = _load(args)
    corpus = _corpus(cfg)
    model_dir = _model_dir(cfg)
    seed_path = Path(args.seeds) if args.seeds else model_dir / SEED_FILE
    examples = read_seed_file(seed_path)
    model = train(examples, corpus, INSIDE, cfg.training)
    save_model(model, model_dir / INSIDE_SEED_MODEL)

    if cfg.heuristics.enabled:
        if _has_explicit_stats(cfg.heuristics):
            stats = cfg.heuristics
            if not stats.stopword_set:
                stats = HeuristicConfig(
                    enabled=True,
                    comma_successor_word=stats.comma_successor_word,
                    common_start_word=stats.common_start_word,
                    top_frequency_set=stats.top_frequency_set,
                    stopword_set=load_stopwords(),
                )
        else:
            stats = heuristics_from_corpus(corpus)
        _heuristics_to_file(stats, model_dir / HEURISTICS_FILE)

    log = {
        "stage": "train",
        "view": INSIDE,
        "examples": len(examples),
        "sentences": len(corpus),
    }
    (model_dir / TRAIN_LOG).write_text(
        json.dumps(log, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"trained inside model on {len(examples)} seeds -> "
          f"{model_dir / INSIDE_SEED_MODEL}")
    return 0


# ------------------------------------------------------- selftrain etc.


def cmd_selftrain(args) -> int:
    cfg = _load(args)
    corpus = _corpus(cfg)
    model_dir = _model_dir(cfg)
    seed_path = Path(args.seeds) if args.seeds else model_dir / SEED_FILE
    examples = read_seed_file(seed_path)
    result = self_train(examples, corpus, cfg.self_train, meta=cfg.training)
    save_model(result.m_in, model_dir / SELF_IN_MODEL)
    save_model(result.m_out, model_dir / SELF_OUT_MODEL)
    (model_dir / SELF_TRACE).write_text(
        result.trace.to_jsonl(), encoding="utf-8"
    )
    write_seed_file(result.inside_examples, model_dir / SELF_INSIDE_SET)
    write_seed_file(result.outside_examples, model_dir / SELF_OUTSIDE_SET)
    print(f"self-training done: K={cfg.self_train.K}, "
          f"|I|={len(result.inside_examples)} -> {model_dir / SELF_IN_MODEL}")
    return 0


def cmd_cotrain(args) -> int:
    cfg = _load(args)
    corpus = _corpus(cfg)
    model_dir = _model_dir(cfg)
    inside = read_seed_file(model_dir / SELF_INSIDE_SET)
    outside = read_seed_file(model_dir / SELF_OUTSIDE_SET)
    result = co_train(inside, outside, corpus, cfg.co_train, meta=cfg.training)
    save_model(result.m_in, model_dir / CO_IN_MODEL)
    save_model(result.m_out, model_dir / CO_OUT_MODEL)
    (model_dir / CO_TRACE).write_text(result.trace.to_jsonl(), encoding="utf-8")
    print(f"co-training done: K={cfg.co_train.K}, "
          f"|I|={len(result.inside_examples)}, "
          f"|O|={len(result.outside_examples)} -> {model_dir / CO_IN_MODEL}")
    return 0


# ---------------------------------------------------------------- parse


def _parse_scorer(cfg: PipelineConfig, stage: str, model_dir: Path):
    if cfg.scorer.backend == EXTERNAL_BACKEND:
        return ExternalScorer(
            list(cfg.scorer.command), INSIDE, timeout=cfg.scorer.timeout
        )
    if stage == "seed":
        return load_model(model_dir / INSIDE_SEED_MODEL)
    if stage == "self":
        return load_model(model_dir / SELF_IN_MODEL)
    return (
        load_model(model_dir / CO_IN_MODEL),
        load_model(model_dir / CO_OUT_MODEL),
    )


def _load_heuristics(cfg: PipelineConfig, model_dir: Path) -> HeuristicConfig:
    if not cfg.heuristics.enabled:
        return cfg.heuristics
    stats_file = model_dir / HEURISTICS_FILE
    if stats_file.exists():
        return _heuristics_from_file(stats_file)
    if _has_explicit_stats(cfg.heuristics):
        return cfg.heuristics
    raise ConfigError(
        "heuristics are enabled but no statistics are available; "
        "run the train subcommand first or set them in the config"
    )


def cmd_parse(args) -> int:
    cfg = _load(args)
    model_dir = _model_dir(cfg)
    scorer = _parse_scorer(cfg, args.stage, model_dir)
    heuristics = _load_heuristics(cfg, model_dir)
    sentences = read_corpus(args.input)
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            for sentence in sentences:
                chart = score_chart(scorer, sentence, renormalize=cfg.renormalize)
                chart = apply_heuristics(chart, sentence, heuristics)
                tree = cyk_decode(chart, sentence)
                fh.write(tree.to_bracketed())
                fh.write("\n")
    finally:
        close = getattr(scorer, "close", None)
        if close is not None:
            close()
    print(f"parsed {len(sentences)} sentences -> {args.out}")
    return 0


# ----------------------------------------------------------------- eval


def _read_predictions(path):
    preds = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            preds.append(binary_from_tree(parse_bracketed(line, lineno)))
    return preds


def cmd_eval(args) -> int:
    cfg = _load(args)
    gold_path = args.gold or cfg.paths.gold
    if gold_path is None:
        raise ConfigError("no gold file: pass --gold or set paths.gold")
    preds = _read_predictions(args.pred)
    golds = read_treebank(gold_path)
    if len(preds) != len(golds):
        raise LengthMismatch(
            f"{len(preds)} predictions vs {len(golds)} gold trees"
        )
    mismatches = [
        index
        for index, (p, g) in enumerate(zip(preds, golds))
        if p.sentence.tokens != g.sentence.tokens
    ]
    if mismatches:
        for index in mismatches:
            print(
                f"yield mismatch at sentence {index}: "
                f"predicted {' '.join(preds[index].sentence.tokens)!r} "
                f"vs gold {' '.join(golds[index].sentence.tokens)!r}",
                file=sys.stderr,
            )
        raise YieldMismatch(f"{len(mismatches)} sentences with mismatched tokens")

    report = corpus_eval(preds, golds, cfg.eval)
    report_dir = _report_dir(cfg)
    lines = [render_report(report)]
    if args.baselines:
        for which in (LEFT, RIGHT, BALANCED, RANDOM):
            base = trivial_baselines(golds, which, cfg.eval, rng_seed=cfg.rng_seed)
            lines.append(f"baseline {which:<9} F1 {base.f1:.4f}")
    if args.oracle:
        oracle = oracle_binary(golds, cfg.eval)
        lines.append(f"oracle binary       F1 {oracle.f1:.4f}")
    text = "\n".join(lines) + "\n"
    (report_dir / "report.txt").write_text(text, encoding="utf-8")
    (report_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (report_dir / "per_sentence.tsv").write_text(
        render_per_sentence_tsv(report), encoding="utf-8"
    )
    (report_dir / "length_buckets.tsv").write_text(
        render_length_buckets_tsv(report), encoding="utf-8"
    )
    print(text, end="")
    print(f"reports written to {report_dir}")
    return 0


# --------------------------------------------------------------- report


def cmd_report(args) -> int:
    cfg = _load(args)
    model_dir = Path(cfg.paths.model_dir)
    report_dir = Path(cfg.paths.report_dir)
    sections = []
    for name, trace_file in (("self-training", SELF_TRACE),
                             ("co-training", CO_TRACE)):
        path = model_dir / trace_file
        if not path.exists():
            continue
        trace = LoopTrace.from_jsonl(path.read_text(encoding="utf-8"))
        rows = [f"{name} trace ({len(trace)} iterations):"]
        for rec in trace:
            metrics = json.dumps(rec.metrics, sort_keys=True)
            rows.append(
                f"  iter {rec.iteration}: |I|={rec.inside_size} "
                f"|O|={rec.outside_size} selected={json.dumps(rec.selected, sort_keys=True)} "
                f"metrics={metrics}"
            )
        sections.append("\n".join(rows))
    report_json = report_dir / "report.json"
    if report_json.exists():
        raw = json.loads(report_json.read_text(encoding="utf-8"))
        sections.append(
            f"evaluation ({raw['mode']}): F1 {raw['f1']:.4f} "
            f"P {raw['precision']:.4f} R {raw['recall']:.4f}"
        )
    if not sections:
        print("nothing to report: no trace or report files found")
        return 0
    print("\n\n".join(sections))
    return 0


# ----------------------------------------------------------------- main


def _parser() -> _Parser:
    parser = _Parser(prog="bootparse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--config", default=None, help="JSON config file")
        return p

    p = add("synth", cmd_synth, "sample a corpus from a toy grammar")
    p.add_argument("--out", required=True, help="corpus output (text lines)")
    p.add_argument("--gold", default=None, help="gold treebank output")
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--min-len", type=int, default=3)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--grammar", default=None, help="grammar JSON file")

    p = add("bootstrap", cmd_bootstrap, "generate template seed examples")
    p.add_argument("--out", default=None, help="seed file (default in model dir)")

    p = add("train", cmd_train, "train the inside model on seed examples")
    p.add_argument("--seeds", default=None, help="seed file to train on")

    p = add("selftrain", cmd_selftrain, "run the self-training loop")
    p.add_argument("--seeds", default=None, help="seed file to start from")

    add("cotrain", cmd_cotrain, "run the co-training loop")

    p = add("parse", cmd_parse, "decode trees for raw sentences")
    p.add_argument("--input", required=True, help="text file, one sentence per line")
    p.add_argument("--out", required=True, help="bracketed predictions output")
    p.add_argument(
        "--stage",
        choices=("seed", "self", "co"),
        default="co",
        help="which trained model(s) to decode with",
    )

    p = add("eval", cmd_eval, "score predictions against gold trees")
    p.add_argument("--pred", required=True, help="bracketed predictions file")
    p.add_argument("--gold", default=None, help="gold treebank (default from config)")
    p.add_argument("--baselines", action="store_true",
                   help="add LB/RB/balanced/random rows")
    p.add_argument("--oracle", action="store_true",
                   help="add the binary-oracle upper bound row")

    add("report", cmd_report, "summarize traces and evaluation reports")
    return parser


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (ConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ExternalScorerError as exc:
        print(f"external scorer failed: {exc}", file=sys.stderr)
        return 3
    except BootparseError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # anything unforeseen is an internal error
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
