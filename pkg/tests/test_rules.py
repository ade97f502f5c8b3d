import re
from pathlib import Path

import pytest

from invariants import check_application, first_application
from prophier.relations import RhetoricalRelation as R
from prophier.rules import (CONSTRUCTS, CountMismatch, Hierarchy, Label, OrderViolation, PatternCompileError,
                            RephraseFailure, RuleGroup, SchemaError, apply_rule, default_rules_path, lint_rules, load_rules,
                            parse_template)
from prophier.transform import _finalize
from prophier.tree import detokenize, parse_bracketed, read_trees

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = read_trees(open(FIXTURES / "corpus.mrg"))
RULES = load_rules()
DEFAULT_TEXT = Path(default_rules_path()).read_text()


def text(sent):
    return detokenize(sent.tokens)


def test_default_file_shape():
    assert len(RULES) == 35
    assert len(RULES.groups) == 17
    assert [r.order_index for r in RULES] == list(range(1, 36))
    groups = [r.group.value for r in RULES]
    assert groups == sorted(groups)


def test_construct_counts_and_hierarchy():
    for cid, (_, hierarchy, expected) in CONSTRUCTS.items():
        rows = [r for r in RULES if r.construct == cid]
        assert len(rows) == expected, cid
        assert all(r.hierarchy is hierarchy for r in rows)


def test_postposed_adverbial_first_split():
    rule, out = first_application(_finalize(CORPUS[0]), RULES)
    assert rule.id == "POST-SBAR"
    assert text(out.remainder) == "A fluoroscopic study which is known as an upper gastrointestinal series is " \
                                  "typically the next step in management."
    assert text(out.extracted).startswith("If volvulus is suspected, caution with non water soluble contrast")
    assert out.labels == (Label.CONTEXT, Label.CORE)
    assert out.cue_phrase == ("although",)
    assert out.relation() is R.CONTRAST
    assert [lab for lab, _ in out.ordered()] == [Label.CORE, Label.CONTEXT]


def test_nonrestrictive_relative_clause():
    rule, out = first_application(_finalize(CORPUS[2]), RULES)
    assert rule.id == "NRR-SUBJ"
    assert text(out.extracted) == "Duncan Dwight retired in September."
    assert text(out.remainder) == "Mr. Volk, 55 years old, succeeds Duncan Dwight."
    assert out.relation() is R.ELABORATION


def test_simple_clause_does_not_match():
    tree = _finalize(parse_bracketed("(ROOT (S (NP (NN Volvulus)) (VP (VBZ is) (VP (VBN suspected))) (. .)))"))
    for rule in RULES:
        try:
            assert apply_rule(rule, tree) is None
        except RephraseFailure:  # also a non-match
            pass


def test_reporting_verb_precondition():
    hired = next(t for t in CORPUS if "hired new staff" in " ".join(t.tokens()))
    rule, _ = first_application(_finalize(hired), RULES)
    assert rule.group is not RuleGroup.ReportedSpeechPreposed


def test_template_parse():
    tpl = parse_template("{^extract} <be:extract> {rest-cue} {source~vp} this")
    assert tpl.references() == {"extract", "rest", "cue", "vp"}
    with pytest.raises(SchemaError):
        parse_template("{subj~vp}")
    with pytest.raises(SchemaError):
        parse_template("<is:x>")


@pytest.mark.parametrize("index", range(len(CORPUS)))
def test_conservation_and_progress(index):
    tree = _finalize(CORPUS[index])
    rule, out = first_application(tree, RULES)
    if out is not None:
        check_application(tree, rule, out)


# -- loading -------------------------------------------------------------------

def write(tmp_path, body):
    p = tmp_path / "rules.ini"
    p.write_text(body)
    return p


def test_empty_file_count_mismatch(tmp_path):
    with pytest.raises(CountMismatch) as info:
        load_rules(write(tmp_path, ""))
    assert (info.value.found, info.value.expected) == (0, 35)


def test_duplicate_order(tmp_path):
    body = DEFAULT_TEXT.replace("order: 5\n", "order: 4\n", 1)
    with pytest.raises(OrderViolation):
        load_rules(write(tmp_path, body))


def test_order_gap(tmp_path):
    body = DEFAULT_TEXT.replace("order: 35\n", "order: 36\n", 1)
    with pytest.raises(OrderViolation):
        load_rules(write(tmp_path, body))


def test_bad_pattern(tmp_path):
    body = DEFAULT_TEXT.replace("pattern: ROOT <<: (S < (S=extract", "pattern: ROOT <& (S < (S=extract", 1)
    with pytest.raises(PatternCompileError) as info:
        load_rules(write(tmp_path, body))
    assert info.value.rule_id == "CC-1"


def test_bad_version(tmp_path):
    with pytest.raises(SchemaError):
        load_rules(write(tmp_path, DEFAULT_TEXT.replace("version: 1", "version: 9", 1)))


# -- lint ----------------------------------------------------------------------

def test_default_lints_clean():
    probe = read_trees(open(FIXTURES / "corpus.mrg"))
    diags = lint_rules(RULES, probe)
    assert [d for d in diags if d.severity == "error"] == []
    assert diags == []


def test_lint_group_regression(tmp_path):
    # move the last noun-phrase-list rule in front of the coordinate clauses
    body = re.sub(r"order: (\d+)\n", lambda m: f"order: {int(m.group(1)) + 1}\n", DEFAULT_TEXT)
    body = body.replace("order: 36\n", "order: 1\n")
    rules = load_rules(write(tmp_path, body))
    assert rules.rules[0].group is RuleGroup.NounPhraseLists
    errors = [d for d in lint_rules(rules) if d.severity == "error"]
    assert any("runs after" in d.message for d in errors)


def test_lint_missing_extract(tmp_path):
    body = DEFAULT_TEXT.replace("(S=extract < (NP $.. VP)", "(S=first < (NP $.. VP)", 1)
    body = body.replace("extract_template: {extract}", "extract_template: {first}", 1)
    rules = load_rules(write(tmp_path, body))
    errors = [d for d in lint_rules(rules) if d.severity == "error"]
    assert any(d.rule_id == "CC-1" and "extract" in d.message for d in errors)


def test_hierarchy_labels_per_rule():
    # every rule that fires on the corpus labels its sides as its hierarchy says
    seen = set()
    for tree in CORPUS:
        rule, out = first_application(_finalize(tree), RULES)
        if out is None:
            continue
        seen.add(rule.id)
        if rule.hierarchy is Hierarchy.COORDINATE:
            assert out.labels == (Label.CORE, Label.CORE)
        else:
            assert Label.CONTEXT in out.labels and Label.CORE in out.labels
    assert len(seen) >= 25
