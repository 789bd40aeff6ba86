from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bootparse.errors import (
    AllTokensRemoved,
    EmptyCorpus,
    EmptyLabel,
    EmptyTree,
    UnbalancedBrackets,
)
from bootparse.treebank import (
    BinaryTree,
    GoldTree,
    Sentence,
    Span,
    binary_from_tree,
    gold_spans,
    labeled_spans,
    normalize,
    parse_bracketed,
    read_corpus,
    read_treebank,
    serialize,
    strip_trailing_punctuation,
)

DOG = "(S (NP (DT the) (NN dog)) (VP (VBD ran)))"


def test_parse_simple():
    tree = parse_bracketed(DOG)
    assert tree.sentence.tokens == ("the", "dog", "ran")
    assert tree.root.label == "S"
    assert len(tree.root.children) == 2


def test_parse_wrapped_root():
    tree = parse_bracketed("( (S (NP (DT the) (NN dog)) (VP (VBD ran))) )")
    assert tree.root.label == "S"
    assert tree.sentence.tokens == ("the", "dog", "ran")


def test_parse_bare_terminals():
    tree = parse_bracketed("(S (NP the dog) ran)")
    assert tree.sentence.tokens == ("the", "dog", "ran")
    assert [lbl for lbl, _ in labeled_spans(tree)] == ["S", "NP"]


@pytest.mark.parametrize(
    "text,exc",
    [
        ("(S (NP the", UnbalancedBrackets),
        ("(S the) )", UnbalancedBrackets),
        ("(S the) extra", UnbalancedBrackets),
        ("", EmptyTree),
        ("()", EmptyTree),
        ("(S)", EmptyTree),
        ("((S a) (S b))", EmptyLabel),
        ("(S a ((NP b) (VP c)))", EmptyLabel),
        ("(S a ( b))", EmptyTree),
    ],
)
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_bracketed(text)


def test_serialize_round_trip():
    tree = parse_bracketed(DOG)
    assert serialize(tree) == DOG
    assert serialize(parse_bracketed(serialize(tree))) == DOG


def test_normalize_drops_punct_and_collapses():
    tree = parse_bracketed("(S (NP (DT the) (NN dog)) (VP (VBD ran)) (. .))")
    out = normalize(tree)
    assert out.sentence.tokens == ("the", "dog", "ran")
    spans = {sp for _, sp in labeled_spans(out)}
    assert Span(0, 1) in spans
    # VP -> VBD chain collapsed into a preterminal keeping the top label
    labels = dict((sp, lbl) for lbl, sp in labeled_spans(out, include_preterminals=True))
    assert labels[Span(2, 2)] == "VP"


def test_normalize_removes_traces_and_renumbers():
    tree = parse_bracketed(
        "(S (NP-SBJ (-NONE- *T*-1)) (VP (VBD fell) (NP (CD 5) (NN %))))"
    )
    out = normalize(tree)
    assert out.sentence.tokens == ("fell", "5", "%")
    assert gold_spans(out, exclude_trivial=False) == {Span(0, 2), Span(1, 2)}


def test_normalize_trace_kept_when_disabled():
    tree = parse_bracketed("(S (NP (-NONE- *)) (VP ran))")
    out = normalize(tree, drop_traces=False)
    assert out.sentence.tokens == ("*", "ran")


def test_normalize_all_removed():
    with pytest.raises(AllTokensRemoved):
        normalize(parse_bracketed("(S (. .) (, ,))"))


def test_normalize_idempotent():
    tree = parse_bracketed(
        "(S (NP (NP (DT the) (JJ old) (NN dog))) (VP (VBD ran) (PRT (RP up))) (. .))"
    )
    once = normalize(tree)
    twice = normalize(once)
    assert serialize(once) == serialize(twice)
    assert once == twice


def test_gold_spans_excludes_trivial():
    tree = parse_bracketed(DOG)
    assert gold_spans(tree) == {Span(0, 1)}
    assert gold_spans(tree, exclude_trivial=False) == {Span(0, 2), Span(0, 1), Span(2, 2)}


def test_labeled_spans_keeps_duplicates():
    tree = parse_bracketed("(S (NP (NP (DT the) (NN dog))) (VP ran))")
    pairs = labeled_spans(tree)
    assert pairs.count(("NP", Span(0, 1))) == 2


def test_binary_tree_validation():
    sent = Sentence(id=0, tokens=("a", "b", "c"))
    BinaryTree(sentence=sent, spans=frozenset({Span(0, 2), Span(0, 1)}))
    with pytest.raises(ValueError):
        BinaryTree(sentence=sent, spans=frozenset({Span(0, 2)}))
    with pytest.raises(ValueError):
        # crossing spans, no consistent splits
        BinaryTree(
            sentence=Sentence(id=0, tokens=("a", "b", "c", "d")),
            spans=frozenset({Span(0, 3), Span(0, 2), Span(1, 3)}),
        )


def test_binary_tree_bracketed_output():
    sent = Sentence(id=0, tokens=("w1", "w2", "w3"))
    tree = BinaryTree(sentence=sent, spans=frozenset({Span(0, 2), Span(0, 1)}))
    assert tree.to_bracketed() == "(X (X w1 w2) w3)"
    one = BinaryTree(
        sentence=Sentence(id=1, tokens=("hi",)), spans=frozenset({Span(0, 0)})
    )
    assert one.to_bracketed() == "(X hi)"


def test_binary_round_trip_through_text():
    sent = Sentence(id=0, tokens=("a", "b", "c", "d"))
    tree = BinaryTree(
        sentence=sent, spans=frozenset({Span(0, 3), Span(1, 3), Span(2, 3)})
    )
    back = binary_from_tree(parse_bracketed(tree.to_bracketed()))
    assert back.spans == tree.spans


def test_strip_trailing_punctuation():
    assert strip_trailing_punctuation(("hello", "world", ".")) == ("hello", "world")
    assert strip_trailing_punctuation(("hi", "!", "''")) == ("hi",)
    assert strip_trailing_punctuation(("a", ".", "b")) == ("a", ".", "b")
    assert strip_trailing_punctuation((".", "!")) == ()


def test_read_corpus_plain(tmp_path):
    p = tmp_path / "corpus.txt"
    p.write_text("the dog ran .\n\nanother sentence here\n")
    sents = read_corpus(p, strip_trailing_punct=True)
    assert [s.tokens for s in sents] == [
        ("the", "dog", "ran"),
        ("another", "sentence", "here"),
    ]
    assert [s.id for s in sents] == [0, 1]


def test_read_corpus_bracketed(tmp_path):
    p = tmp_path / "trees.mrg"
    p.write_text(
        "( (S (NP (DT the) (NN dog))\n     (VP (VBD ran)) (. .)) )\n"
        "(S (NP (NNP Ed)) (VP (VBZ naps)))\n"
    )
    sents = read_corpus(p)
    assert sents[0].tokens == ("the", "dog", "ran", ".")
    assert sents[1].tokens == ("Ed", "naps")


def test_read_corpus_empty(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("\n  \n")
    with pytest.raises(EmptyCorpus):
        read_corpus(p)


def test_read_treebank(tmp_path):
    p = tmp_path / "gold.mrg"
    p.write_text(f"{DOG}\n{DOG}\n")
    trees = read_treebank(p)
    assert len(trees) == 2
    assert trees[1].sentence.id == 1
    assert trees[1].sentence.tokens == ("the", "dog", "ran")


# property: parse . serialize round-trips on random trees

_token = st.text(alphabet="abcdef'-", min_size=1, max_size=4).filter(
    lambda s: s not in ("(", ")")
)
_label = st.sampled_from(["S", "NP", "VP", "PP", "X", "ADJP"])


def _tree_strategy():
    return st.recursive(
        st.tuples(_label, st.lists(_token, min_size=1, max_size=3)).map(
            lambda t: "(" + t[0] + " " + " ".join(t[1]) + ")"
        ),
        lambda children: st.tuples(
            _label, st.lists(children, min_size=1, max_size=3)
        ).map(lambda t: "(" + t[0] + " " + " ".join(t[1]) + ")"),
        max_leaves=8,
    )


@settings(max_examples=60, deadline=None)
@given(_tree_strategy())
def test_parse_serialize_round_trip_property(text):
    tree = parse_bracketed(text)
    again = parse_bracketed(serialize(tree))
    assert serialize(again) == serialize(tree)
    assert again.sentence.tokens == tree.sentence.tokens


@settings(max_examples=60, deadline=None)
@given(_tree_strategy())
def test_normalize_idempotent_property(text):
    tree = parse_bracketed(text)
    try:
        once = normalize(tree)
    except AllTokensRemoved:
        return
    assert normalize(once) == once
