import json
import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

import prophier.evaluate as ev
from oracles import oracle_align, oracle_ratio
from prophier.evaluate import (GoldFormatError, GoldLink, GoldSentence, UnmappedRelation, align, evaluate,
                               group_of, load_gold, load_grouping, normalize, parse_gold_record, score_nuclearity,
                               score_relations, similarity)
from prophier.transform import leaves_in_order, transform
from prophier.tree import read_trees

FIXTURES = Path(__file__).parent / "fixtures"
VOLK_SYSTEM = "Volk succeeds Duncan Dwight."
VOLK_GOLD = "Mr. Volk, 55 years old, succeeds Duncan Dwight,"
VOLK_RATIO = 0.7714285714285715  # 2 * 27 / 70, frozen from the reference matcher

VOCAB = ["the", "a", "company", "said", "profits", "rose", "in", "1998", "Mr.", "Volk", ",", ".", "who",
         "retired", "and", "but", "plant", "closed"]


def random_sentence(rng):
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randint(0, 9)))


def test_volk_pair():
    assert normalize(VOLK_SYSTEM) == "volk succeeds duncan dwight"
    assert similarity(VOLK_SYSTEM, VOLK_GOLD) == VOLK_RATIO
    assert oracle_ratio(normalize(VOLK_SYSTEM), normalize(VOLK_GOLD)) == VOLK_RATIO


def test_random_pairs_match_reference():
    rng = random.Random(65)
    for _ in range(100):
        a, b = random_sentence(rng), random_sentence(rng)
        assert similarity(a, b) == oracle_ratio(normalize(a), normalize(b)), (a, b)
        assert similarity(a, b, normalized=False) == oracle_ratio(a, b), (a, b)


@pytest.mark.parametrize("a, b, value", [
    ("a" * 16, "a" * 16 + "b" * 18, 0.64),
    ("a" * 13, "a" * 13 + "b" * 14, 0.65),
    ("a" * 33, "a" * 33 + "b" * 34, 0.66),
])
def test_threshold_boundaries(a, b, value):
    assert similarity(a, b) == value
    matched = align([a], [b], threshold=0.65)
    assert bool(matched) is (value >= 0.65)


@given(st.text(max_size=30), st.text(max_size=30))
def test_similarity_properties(a, b):
    s = similarity(a, b)
    assert s == similarity(b, a)
    assert 0.0 <= s <= 1.0
    assert (s == 1.0) is (normalize(a) == normalize(b))


@given(st.lists(st.lists(st.sampled_from([0.0, 0.5, 0.64, 0.65, 0.7, 0.9, 1.0]), min_size=1, max_size=5),
                min_size=1, max_size=5).filter(lambda m: len({len(r) for r in m}) == 1))
def test_align_matches_repeated_maximum(scores):
    # feed precomputed scores through strings whose similarity we control
    props = [f"p{i}" for i in range(len(scores))]
    edus = [f"e{j}" for j in range(len(scores[0]))]
    table = {(p, e): scores[i][j] for i, p in enumerate(props) for j, e in enumerate(edus)}
    original = ev.similarity
    ev.similarity = lambda a, b, normalized=True: table[(a, b)]
    try:
        got = [(m.prop, m.edu) for m in align(props, edus, 0.65)]
    finally:
        ev.similarity = original
    assert got == oracle_align(scores, 0.65)
    assert len({p for p, _ in got}) == len(got) == len({e for _, e in got})


# -- nuclearity and relations ---------------------------------------------------

TREES = read_trees(open(FIXTURES / "corpus.mrg"))
GROUPING = load_grouping()


def volk():
    lpt = transform(TREES[2])
    gold = GoldSentence("v", "", (VOLK_GOLD, "who retired in September."),
                        (GoldLink(0, 1, "NN", "Elaboration"),))
    return lpt, gold


def test_relative_clause_nuclearity_mismatch():
    lpt, gold = volk()
    alignment = align(leaves_in_order(lpt), gold)
    assert [(m.prop, m.edu) for m in alignment] == [(0, 0), (2, 1)]
    tally = score_nuclearity(lpt, alignment, gold)
    assert (tally.correct, tally.total) == (0, 1)
    rel = score_relations(lpt, alignment, gold, GROUPING)
    assert rel.per_class["Elaboration"].correct == 1


@pytest.mark.parametrize("nuc, correct", [("NN", False), ("NS", True), ("SN", False)])
def test_nuclearity_definitions(nuc, correct):
    lpt, gold = volk()
    gold = GoldSentence("v", "", gold.edus, (GoldLink(0, 1, nuc, "Elaboration"),))
    tally = score_nuclearity(lpt, align(leaves_in_order(lpt), gold), gold)
    assert tally.correct == correct


def test_unmapped_relation():
    lpt, gold = volk()
    gold = GoldSentence("v", "", gold.edus, (GoldLink(0, 1, "NN", "Frobnication"),))
    with pytest.raises(UnmappedRelation):
        score_relations(lpt, align(leaves_in_order(lpt), gold), gold, GROUPING)


def test_unknown_is_counted_separately():
    lpt = transform(TREES[24])  # purpose clause, no cue
    gold = GoldSentence("p", "", ("To reduce costs,", "the group closed two plants."),
                        (GoldLink(0, 1, "SN", "purpose"),))
    rel = score_relations(lpt, align(leaves_in_order(lpt), gold), gold, GROUPING)
    assert rel.unknown == 1
    assert rel.per_class == {}
    assert rel.average() is None


def test_grouping_suffixes_and_case():
    assert GROUPING["elaboration-additional"] == "Elaboration"
    assert group_of("Elaboration-Additional-e", GROUPING) == "Elaboration"
    assert group_of("List", GROUPING) == "Joint"


def test_eval_fixture_constants():
    trees = read_trees(open(FIXTURES / "eval10.mrg"))
    gold = load_gold(FIXTURES / "eval10_gold.jsonl")
    report = evaluate([(transform(t), g) for t, g in zip(trees, gold)])
    d = report.to_dict()
    assert (d["edus"], d["matched"]) == (19, 18)
    assert Fraction(d["nuclearity"]["correct"], d["nuclearity"]["scored"]) == Fraction(7, 8)
    assert d["unknown"] == 1
    assert {k: (v["correct"], v["predicted"]) for k, v in d["relations"].items()} == {
        "Attribution": (1, 1), "Cause-Explanation": (2, 2), "Condition": (1, 1), "Contrast": (1, 1),
        "Elaboration": (1, 1), "Joint": (0, 1)}
    assert d["average_relation_precision"] == pytest.approx(5 / 6, abs=1e-12)
    assert d["distribution"] == {"Attribution": 1, "Cause": 2, "Condition": 1, "Contrast": 1, "Elaboration": 2,
                                 "List": 1, "Spatial": 1, "Temporal": 1, "Unknown": 2}


def test_gold_format_errors(tmp_path):
    with pytest.raises(GoldFormatError) as info:
        parse_gold_record("{not json", 7)
    assert info.value.line == 7
    with pytest.raises(GoldFormatError):
        parse_gold_record(json.dumps({"id": "1", "edus": ["a", "b"], "links": [[0, 1, "XX", "List"]]}))
    with pytest.raises(GoldFormatError):
        parse_gold_record(json.dumps({"id": "1", "edus": ["a"], "links": [[0, 3, "NN", "List"]]}))
    p = tmp_path / "g.jsonl"
    p.write_text('{"id": "1", "edus": ["a"], "links": []}\n\n{"id": "2"}\n')
    with pytest.raises(GoldFormatError) as info:
        load_gold(p)
    assert info.value.line == 3
