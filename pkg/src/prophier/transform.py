"""Recursive driver: turns a sentence parse into a linked proposition tree."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterator, Union

from .relations import CueTable, RhetoricalRelation, default_cue_table, lemmatize_verb
from .rules import Label, RephraseFailure, RuleFile, apply_rule, load_rules
from .tree import ParseTree, detokenize, leaf, reindex

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 1000
FINAL_PUNCT = {".", "?", "!"}


class RecursionBudgetExceeded(RuntimeError):
    def __init__(self, limit):
        super().__init__(f"more than {limit} rule applications")
        self.limit = limit


class ClauseType(str, enum.Enum):
    SV = "SV"
    SVA = "SVA"
    SVC = "SVC"
    SVO = "SVO"
    SVOO = "SVOO"
    SVOA = "SVOA"
    SVOC = "SVOC"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Proposition:
    tokens: tuple
    tree: ParseTree
    clause_type: ClauseType | None = None

    @property
    def text(self) -> str:
        return detokenize(self.tokens)


@dataclass(frozen=True)
class Leaf:
    prop: Proposition


@dataclass(frozen=True)
class Relation:
    relation: RhetoricalRelation
    left: tuple  # (Label, node)
    right: tuple
    rule_id: str = ""
    cue: tuple | None = None

    @property
    def children(self):
        return (self.left, self.right)


LptNode = Union[Leaf, Relation]


@dataclass(frozen=True)
class LinkedPropositionTree:
    root: LptNode
    source: tuple

    def __iter__(self):
        return iter(leaves_in_order(self))


def _finalize(tree: ParseTree) -> ParseTree:
    """Make sure a sentence tree ends with final punctuation."""
    last = list(tree.leaves())[-1]
    if last.category in FINAL_PUNCT:
        return tree
    top = tree
    if tree.category == "ROOT" and len(tree.children) == 1 and not tree.children[0].is_leaf:
        inner = tree.children[0]
        inner = ParseTree(inner.label, inner.children + (leaf(".", "."),), None, inner.span)
        return reindex(ParseTree(tree.label, (inner,), None, tree.span))
    return reindex(ParseTree(top.label, top.children + (leaf(".", "."),), None, top.span))


def transform(sentence_tree: ParseTree, rules: RuleFile | None = None,
              classifier: CueTable | None = None, budget: int = DEFAULT_BUDGET,
              clause_types: bool = True) -> LinkedPropositionTree:
    """Split a sentence until no rule matches any leaf.

    Leaves are expanded depth-first, left to right. At each leaf the first
    rule in execution order that applies fires; a rule whose rephrasing fails
    is skipped.
    """
    rules = rules if rules is not None else load_rules()
    table = classifier or default_cue_table()
    used = [0]

    def expand(tree: ParseTree) -> LptNode:
        for rule in rules:
            try:
                outcome = apply_rule(rule, tree, table)
            except RephraseFailure as exc:
                log.debug("skipping %s", exc)
                continue
            if outcome is None:
                continue
            used[0] += 1
            if used[0] > budget:
                raise RecursionBudgetExceeded(budget)
            (l_lab, l_sent), (r_lab, r_sent) = outcome.ordered()
            left = expand(l_sent.tree)
            right = expand(r_sent.tree)
            return Relation(outcome.relation(table), (l_lab, left), (r_lab, right),
                            rule.id, outcome.cue_phrase)
        ctype = classify_clause_type(tree) if clause_types else None
        return Leaf(Proposition(tuple(tree.tokens()), tree, ctype))

    source = _finalize(sentence_tree)
    return LinkedPropositionTree(expand(source), tuple(sentence_tree.tokens()))


def walk(node: LptNode, labels: tuple = ()) -> Iterator[tuple[tuple, LptNode]]:
    """Pre-order (edge-label path, node) pairs."""
    yield labels, node
    if isinstance(node, Relation):
        for lab, child in node.children:
            yield from walk(child, labels + (lab,))


def leaves_in_order(lpt: LinkedPropositionTree) -> list[Proposition]:
    return [n.prop for _, n in walk(lpt.root) if isinstance(n, Leaf)]


def context_layers(lpt: LinkedPropositionTree) -> list[int]:
    """Context layer of each leaf, aligned with :func:`leaves_in_order`."""
    return [sum(lab == Label.CONTEXT for lab in path)
            for path, n in walk(lpt.root) if isinstance(n, Leaf)]


def relation_nodes(lpt: LinkedPropositionTree) -> list[Relation]:
    return [n for _, n in walk(lpt.root) if isinstance(n, Relation)]


def leaf_paths(lpt: LinkedPropositionTree) -> list[tuple[int, ...]]:
    """Child-index path (0 left, 1 right) to each leaf."""
    out = []

    def go(node, path):
        if isinstance(node, Leaf):
            out.append(path)
        else:
            go(node.left[1], path + (0,))
            go(node.right[1], path + (1,))

    go(lpt.root, ())
    return out


def lowest_common_relation(lpt: LinkedPropositionTree, i: int, j: int) -> Relation | None:
    """Relation node joining leaves i and j (None when i == j)."""
    paths = leaf_paths(lpt)
    a, b = paths[i], paths[j]
    k = 0
    while k < min(len(a), len(b)) and a[k] == b[k]:
        k += 1
    if i == j:
        return None
    node = lpt.root
    for step in a[:k]:
        node = node.children[step][1]
    return node


# -- clause types ------------------------------------------------------------

_COPULAR = {"be", "become", "seem", "appear", "remain", "stay", "look", "sound", "feel", "get", "grow"}
_POSITIONAL = {"live", "lie", "sit", "stand", "stay", "remain", "go", "come", "arrive", "reside",
               "move", "travel", "belong", "lead", "run", "walk", "return"}
_PLACING = {"put", "place", "show", "send", "take", "bring", "set", "lay", "lead", "guide", "drive", "move"}
_VERB_LEXICON = _COPULAR | _POSITIONAL | _PLACING
_BE_FORMS = {"is", "are", "was", "were", "be", "been", "being", "am", "'s", "'re", "'m"}


def _main_clause(tree: ParseTree) -> ParseTree | None:
    node = tree
    while node.category == "ROOT" and len(node.children) == 1:
        node = node.children[0]
    if node.category != "S":
        return None
    cats = [c.category for c in node.children]
    if "S" in cats or "SBAR" in cats or cats.count("VP") != 1 or "NP" not in cats:
        return None
    if cats.index("NP") > cats.index("VP"):
        return None
    return node


def _verb_lemma(tok: str) -> str:
    if tok.lower() in _BE_FORMS:
        return "be"
    return lemmatize_verb(tok, _VERB_LEXICON)


def classify_clause_type(prop_tree: ParseTree) -> ClauseType | None:
    """Best-effort clause type of a simple sentence; None for anything else."""
    clause = _main_clause(prop_tree)
    if clause is None:
        return None
    vp = next(c for c in clause.children if c.category == "VP")
    # descend through auxiliaries to the lexical verb phrase
    while True:
        inner = [c for c in vp.children if c.category == "VP"]
        if len(inner) == 1 and not any(c.category in ("NP", "ADJP") for c in vp.children):
            vp = inner[0]
        else:
            break
    verbs = [c for c in vp.children if c.is_leaf and (c.category.startswith("VB") or c.category == "MD")]
    if not verbs:
        return None
    lemma = _verb_lemma(verbs[-1].token)
    after = vp.children[vp.children.index(verbs[-1]) + 1:]
    objs = [c for c in after if c.category == "NP" and "-TMP" not in c.label and "-ADV" not in c.label]
    has = {c.category for c in after}
    if lemma in _COPULAR:
        if "ADJP" in has or objs:
            return ClauseType.SVC
        if "PP" in has or "ADVP" in has:
            return ClauseType.SVA
        return ClauseType.SV
    if len(objs) >= 2:
        return ClauseType.SVOO
    if len(objs) == 1:
        if "ADJP" in has or "S" in has:
            return ClauseType.SVOC
        if "PP" in has and lemma in _PLACING:
            return ClauseType.SVOA
        return ClauseType.SVO
    if "S" in has:
        small = next(c for c in after if c.category == "S")
        kids = {c.category for c in small.children}
        if "NP" in kids and ("ADJP" in kids or "NP" in kids and len(small.children) > 1) and "VP" not in kids:
            return ClauseType.SVOC
        return ClauseType.SVO
    if "SBAR" in has:
        return ClauseType.SVO
    if ("PP" in has or "ADVP" in has) and lemma in _POSITIONAL:
        return ClauseType.SVA
    return ClauseType.SV
