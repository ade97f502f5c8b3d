"""Transformation rules: pattern + actions + rephrasing templates.

Action roles are reserved capture names in a rule's pattern:

``extract``
    the constituent that becomes the new stand-alone sentence.
``delete``, ``delete1``, ``delete2``, ...
    removed from the remaining sentence.
``context``
    marks the contextual side of a subordinate split. If it overlaps
    ``extract`` the extracted sentence is context, otherwise the remainder.
``cue``
    the cue phrase used to classify the rhetorical relation.
``verb``
    a verb whose lemma may signal an attribution relation.

Template syntax (whitespace separated parts)::

    {x}            yield of capture x
    {x-a-b}        capture x with captures a and b removed
    {source}       the whole input sentence, {remainder} the input minus
                   extract and delete captures (both accept -a suffixes)
    {source~x}     the input with the coordination around x reduced to x
    {^x}           referent noun phrase of capture x
    <be:A/B>       is/are/was/were: number from A (capture, ^capture, sg, pl),
                   tense from the first verb of capture B (present if absent)
    <was:A>        was/were, number from A
    word           literal token
"""

from __future__ import annotations

import configparser
import enum
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from . import pattern as pat
from .relations import CueTable, RhetoricalRelation, default_cue_table, lemmatize_verb
from .tree import ParseTree, TokenSpan, leaf, reindex, serialize

log = logging.getLogger(__name__)

SCHEMA_VERSIONS = {"1"}
EXPECTED_RULE_COUNT = 35


class RuleError(ValueError):
    pass


class SchemaError(RuleError):
    pass


class PatternCompileError(RuleError):
    def __init__(self, rule_id, cause):
        super().__init__(f"rule {rule_id}: {cause}")
        self.rule_id = rule_id


class OrderViolation(RuleError):
    pass


class CountMismatch(RuleError):
    def __init__(self, found, expected):
        super().__init__(f"expected {expected} rules, found {found}")
        self.found = found
        self.expected = expected


class RephraseFailure(RuleError):
    def __init__(self, rule_id, reason):
        super().__init__(f"rule {rule_id}: {reason}")
        self.rule_id = rule_id
        self.reason = reason


class RuleGroup(enum.Enum):
    """The seventeen rule groups, in execution order."""

    CoordinateClauses = 1
    NonRestrictiveRelativeClauses = 2
    AppositivePhrases = 3
    PreposedAdverbialParticipial = 4
    CoordinateVerbPhrases = 5
    PostposedAdverbialParticipial = 6
    ReportedSpeechPreposed = 7
    PostposedAdverbialClauses = 8
    ReportedSpeechPostposed = 9
    EmbeddedParticipialPhrases = 10
    RestrictiveRelativeClauses = 11
    VerbComplementPrepositionalPhrases = 12
    PostposedParticipialPhrases = 13
    AdjectivalAdverbialPhrases = 14
    LeadNounPhrases = 15
    OffsetPrepositionalPhrases = 16
    NounPhraseLists = 17


class Hierarchy(str, enum.Enum):
    COORDINATE = "coordinate"
    SUBORDINATE = "subordinate"


class Label(str, enum.Enum):
    CORE = "core"
    CONTEXT = "context"

    def __str__(self):
        return self.value


# construct rows: id -> (description, hierarchy, number of rules)
CONSTRUCTS = {
    "1": ("Coordinate clauses", Hierarchy.COORDINATE, 1),
    "2": ("Adverbial clauses", Hierarchy.SUBORDINATE, 6),
    "3a": ("Relative clauses (non-restrictive)", Hierarchy.SUBORDINATE, 5),
    "3b": ("Relative clauses (restrictive)", Hierarchy.SUBORDINATE, 4),
    "4": ("Reported speech", Hierarchy.SUBORDINATE, 4),
    "5": ("Coordinate verb phrases", Hierarchy.COORDINATE, 1),
    "6np": ("Coordinate noun phrases", Hierarchy.COORDINATE, 2),
    "6p": ("Participial phrases", Hierarchy.SUBORDINATE, 4),
    "8a": ("Appositions (non-restrictive)", Hierarchy.SUBORDINATE, 1),
    "8b": ("Appositions (restrictive)", Hierarchy.SUBORDINATE, 1),
    "9": ("Prepositional phrases", Hierarchy.SUBORDINATE, 3),
    "10": ("Adjectival and adverbial phrases", Hierarchy.SUBORDINATE, 2),
    "11": ("Lead NPs", Hierarchy.SUBORDINATE, 1),
}

RESERVED = ("extract", "context", "cue", "verb")
_DELETE_RE = re.compile(r"delete\d*$")


def is_delete(name: str) -> bool:
    return bool(_DELETE_RE.match(name))


# -- templates ---------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    token: str


@dataclass(frozen=True)
class CaptureYield:
    name: str  # capture, "source" or "remainder"
    minus: tuple = ()


@dataclass(frozen=True)
class SharedConjunct:
    name: str


@dataclass(frozen=True)
class ReferentNP:
    name: str


@dataclass(frozen=True)
class InflectedCopula:
    number: str  # capture, ^capture, "sg" or "pl"
    tense: str | None = None
    past: bool = False


@dataclass(frozen=True)
class RephraseTemplate:
    parts: tuple
    text: str = ""

    def references(self) -> set[str]:
        names = set()
        for part in self.parts:
            if isinstance(part, CaptureYield):
                names.add(part.name)
                names.update(part.minus)
            elif isinstance(part, (SharedConjunct, ReferentNP)):
                names.add(part.name)
            elif isinstance(part, InflectedCopula):
                names.add(part.number.lstrip("^"))
                if part.tense:
                    names.add(part.tense)
        return names - {"source", "remainder", "sg", "pl"}


_PART_RE = re.compile(r"\{[^{}]*\}|<[^<>]*>|\S+")


def parse_template(text: str) -> RephraseTemplate:
    parts = []
    for m in _PART_RE.finditer(text):
        tok = m.group()
        if tok.startswith("{"):
            body = tok[1:-1].strip()
            if body.startswith("^"):
                parts.append(ReferentNP(body[1:]))
            elif "~" in body:
                base, name = body.split("~", 1)
                if base != "source":
                    raise SchemaError(f"'~' only applies to source: {tok}")
                parts.append(SharedConjunct(name))
            else:
                name, *minus = body.split("-")
                parts.append(CaptureYield(name, tuple(minus)))
        elif tok.startswith("<"):
            body = tok[1:-1]
            kind, _, arg = body.partition(":")
            if kind not in ("be", "was") or not arg:
                raise SchemaError(f"bad copula {tok}")
            number, _, tense = arg.partition("/")
            parts.append(InflectedCopula(number, tense or None, past=kind == "was"))
        else:
            parts.append(Literal(tok))
    if not parts:
        raise SchemaError("empty template")
    return RephraseTemplate(tuple(parts), text)


@dataclass(frozen=True)
class CueSource:
    kind: str  # "template", "phrase", "relation" or "none"
    template: RephraseTemplate | None = None
    phrase: tuple = ()
    relation: RhetoricalRelation | None = None
    text: str = "-"

    @classmethod
    def parse(cls, text: str) -> "CueSource":
        text = text.strip()
        if text in ("", "-"):
            return cls("none", text="-")
        if text.startswith("@"):
            return cls("relation", relation=RhetoricalRelation.parse(text[1:]), text=text)
        if text.startswith('"') and text.endswith('"'):
            return cls("phrase", phrase=tuple(text[1:-1].lower().split()), text=text)
        return cls("template", template=parse_template(text), text=text)


# -- rules -------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    id: str
    group: RuleGroup
    order_index: int
    pattern: pat.Pattern
    hierarchy: Hierarchy
    extract_rephrase: RephraseTemplate
    remainder_rephrase: RephraseTemplate
    cue_source: CueSource
    construct: str = ""


@dataclass(frozen=True)
class RuleFile:
    version: str
    rules: tuple
    path: str = ""

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    def by_id(self, rule_id: str) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    @property
    def groups(self) -> list[RuleGroup]:
        return list(dict.fromkeys(r.group for r in self.rules))


def default_rules_path():
    return resources.files("prophier").joinpath("rules/default/rules.ini")


_FIELDS = ("group", "order", "pattern", "hierarchy", "extract_template", "remainder_template", "cue")


def load_rules(path=None, expected_count: int | None = EXPECTED_RULE_COUNT) -> RuleFile:
    """Load, compile and order a rule file.

    Capture-level consistency (missing ``extract`` and the like) is reported by
    :func:`lint_rules`, not raised here.
    """
    path = path or default_rules_path()
    cp = configparser.ConfigParser(interpolation=None, delimiters=(":",), comment_prefixes=("#",),
                                   inline_comment_prefixes=None, empty_lines_in_values=False)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    sections = cp.sections()
    if sections or cp.defaults():
        if "meta" not in sections:
            raise SchemaError(f"{path}: missing [meta] section")
        version = cp["meta"].get("version", "")
        if version not in SCHEMA_VERSIONS:
            raise SchemaError(f"{path}: unsupported schema version {version!r}")
    else:
        version = "1"
    rules = []
    seen_orders = {}
    for rule_id in sections:
        if rule_id == "meta":
            continue
        sec = cp[rule_id]
        missing = [f for f in _FIELDS if f not in sec]
        if missing:
            raise SchemaError(f"rule {rule_id}: missing field(s) {', '.join(missing)}")
        try:
            group = RuleGroup[sec["group"].strip()]
        except KeyError:
            raise SchemaError(f"rule {rule_id}: unknown group {sec['group']!r}") from None
        try:
            order = int(sec["order"])
        except ValueError:
            raise SchemaError(f"rule {rule_id}: order must be an integer") from None
        if order in seen_orders:
            raise OrderViolation(f"rules {seen_orders[order]} and {rule_id} share order {order}")
        seen_orders[order] = rule_id
        try:
            hierarchy = Hierarchy(sec["hierarchy"].strip())
        except ValueError:
            raise SchemaError(f"rule {rule_id}: hierarchy must be coordinate or subordinate") from None
        try:
            compiled = pat.compile(sec["pattern"].strip())
        except pat.PatternError as exc:
            raise PatternCompileError(rule_id, exc) from exc
        try:
            rules.append(Rule(
                id=rule_id,
                group=group,
                order_index=order,
                pattern=compiled,
                hierarchy=hierarchy,
                extract_rephrase=parse_template(sec["extract_template"]),
                remainder_rephrase=parse_template(sec["remainder_template"]),
                cue_source=CueSource.parse(sec["cue"]),
                construct=sec.get("construct", "").strip(),
            ))
        except (SchemaError, ValueError) as exc:
            raise SchemaError(f"rule {rule_id}: {exc}") from exc
    rules.sort(key=lambda r: r.order_index)
    if expected_count is not None and len(rules) != expected_count:
        raise CountMismatch(len(rules), expected_count)
    orders = [r.order_index for r in rules]
    if orders != list(range(1, len(rules) + 1)):
        gaps = sorted(set(range(1, len(rules) + 1)) - set(orders))
        raise OrderViolation(f"order indices must run 1..{len(rules)}; missing {gaps}")
    return RuleFile(version, tuple(rules), str(path))


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    rule_id: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.rule_id}: {self.message}"


def lint_rules(rules: RuleFile, probe_trees: Sequence[ParseTree] | None = None) -> list[Diagnostic]:
    diags = []

    def add(sev, rid, msg):
        diags.append(Diagnostic(sev, rid, msg))

    prev = None
    for rule in rules:
        caps = rule.pattern.capture_names
        if "extract" not in caps:
            add("error", rule.id, "pattern lacks the 'extract' capture")
        if rule.hierarchy is Hierarchy.SUBORDINATE and "context" not in caps:
            add("error", rule.id, "subordinate rule lacks the 'context' capture")
        used = rule.extract_rephrase.references() | rule.remainder_rephrase.references()
        if rule.cue_source.template is not None:
            used |= rule.cue_source.template.references()
        for name in sorted(used - caps):
            add("error", rule.id, f"template references undeclared capture {name!r}")
        for name in sorted(caps - used - set(RESERVED)):
            if not is_delete(name):
                add("warning", rule.id, f"unused capture {name!r}")
        if rule.construct:
            if rule.construct not in CONSTRUCTS:
                add("error", rule.id, f"unknown construct {rule.construct!r}")
            elif CONSTRUCTS[rule.construct][1] is not rule.hierarchy:
                add("error", rule.id, f"construct {rule.construct} is {CONSTRUCTS[rule.construct][1].value}")
        if prev is not None and rule.group.value < prev.group.value:
            add("error", rule.id, f"group {rule.group.name} (#{rule.group.value}) runs after "
                f"{prev.group.name} (#{prev.group.value})")
        prev = rule
    counts = {}
    for rule in rules:
        counts[rule.construct] = counts.get(rule.construct, 0) + 1
    for cid, (desc, _, n) in CONSTRUCTS.items():
        if counts.get(cid, 0) != n:
            add("warning", "*", f"construct {cid} ({desc}) has {counts.get(cid, 0)} rules, expected {n}")
    missing = [g.name for g in RuleGroup if g not in rules.groups]
    if missing:
        add("warning", "*", f"groups without rules: {', '.join(missing)}")
    if probe_trees:
        diags.extend(_reachability(rules, probe_trees))
    return diags


def _reachability(rules, trees):
    """Flag rules that apply to some probe trees but never fire first on any."""
    fires = {r.id: 0 for r in rules}
    matches = {r.id: 0 for r in rules}
    for tree in trees:
        first = None
        for rule in rules:
            try:
                fired = apply_rule(rule, tree) is not None
            except RephraseFailure:
                fired = False
            if fired:
                matches[rule.id] += 1
                if first is None:
                    first = rule.id
        if first:
            fires[first] += 1
    return [Diagnostic("warning", rid, "subsumed by earlier rules on every probe tree it matches")
            for rid in fires if matches[rid] and not fires[rid]]


# -- application -------------------------------------------------------------

_FINAL = {".", "?", "!"}
_ORPHANS = {",", ":", "CC", "``", "''"}
_PUNCT_TAGS = {",", ".", ":", "``", "''", "-LRB-", "-RRB-", "#", "$", "HYPH", "NFP"}
CONTENT_PREFIXES = ("NN", "VB", "JJ", "RB", "CD", "PRP", "MD", "FW")
_LITERAL_TAGS = {"this": "DT", "these": "DT", "it": "PRP", "is": "VBZ", "are": "VBP", "was": "VBD",
                 "were": "VBD", "'s": "POS", "in": "IN", "there": "RB", "what": "WP", ".": "."}
_PLURAL_PRONOUNS = {"we", "they", "you", "these", "those"}


def is_content(tag: str) -> bool:
    return tag.startswith(CONTENT_PREFIXES)


@dataclass(frozen=True)
class Sentence:
    tree: ParseTree
    origins: tuple  # source token index per token, None for inserted tokens
    kinds: tuple  # "extract", "shared", "referent", "remainder" or None per token

    @property
    def tokens(self) -> list[str]:
        return self.tree.tokens()


@dataclass(frozen=True)
class SplitOutcome:
    rule_id: str
    extracted: Sentence
    remainder: Sentence
    extracted_label: Label
    remainder_label: Label
    cue_phrase: tuple | None
    fixed_relation: RhetoricalRelation | None
    verb_lemma: str | None
    has_location_entity: bool
    extracted_first: bool
    extract_span: TokenSpan
    skipped: frozenset = field(default=frozenset())  # source indices in delete/cue captures or dropped

    @property
    def labels(self) -> tuple[Label, Label]:
        return self.extracted_label, self.remainder_label

    def ordered(self) -> list[tuple[Label, Sentence]]:
        pairs = [(self.extracted_label, self.extracted), (self.remainder_label, self.remainder)]
        return pairs if self.extracted_first else pairs[::-1]

    def relation(self, table: CueTable | None = None) -> RhetoricalRelation:
        if self.fixed_relation is not None:
            return self.fixed_relation
        table = table or default_cue_table()
        return table.classify(self.cue_phrase, self.verb_lemma, self.has_location_entity)


def _prune(tree: ParseTree, path: tuple, removed: set) -> tuple[ParseTree | None, list]:
    if path in removed:
        return None, []
    if tree.is_leaf:
        return tree, [tree.span.start]
    kids, origins = [], []
    for i, child in enumerate(tree.children):
        kept, orig = _prune(child, path + (i,), removed)
        if kept is not None:
            kids.append(kept)
            origins += orig
    if not kids:
        return None, []
    if len(kids) == 1 and not kids[0].is_leaf and kids[0].category == tree.category:
        return kids[0], origins
    return ParseTree(tree.label, tuple(kids), None, tree.span), origins


def prune_leaves(tree: ParseTree, drop: set[int]) -> ParseTree | None:
    """Remove leaves by index; empty constituents vanish, X-over-X chains collapse."""
    removed = {path for path, n in tree.positions() if n.is_leaf and n.span.start in drop}
    kept, _ = _prune(reindex(tree), (), removed)
    return None if kept is None else reindex(kept)


def _coordination_siblings(tree: ParseTree, path: tuple) -> set:
    parent_path, idx = path[:-1], path[-1]
    kids = tree.at(parent_path).children
    x = kids[idx]
    verbal = x.category == "VP" or x.category.startswith("VB")

    def conj(c):
        return (c.category == "VP" or c.category.startswith("VB")) if verbal else c.category == x.category

    def sep(c):
        return c.category in (",", ":", "CC", "CONJP")

    lo = idx
    while lo > 0 and (conj(kids[lo - 1]) or sep(kids[lo - 1])):
        lo -= 1
    hi = idx
    while hi + 1 < len(kids) and (conj(kids[hi + 1]) or sep(kids[hi + 1])):
        hi += 1
    while lo < idx and sep(kids[lo]):
        lo += 1
    while hi > idx and sep(kids[hi]):
        hi -= 1
    return {parent_path + (j,) for j in range(lo, hi + 1) if j != idx}


def _absorb_commas(tree: ParseTree, removed: set) -> set:
    """Commas that only delimited a removed constituent."""
    extra = set()
    for path in removed:
        if not path:
            continue
        parent, idx = path[:-1], path[-1]
        kids = tree.at(parent).children

        def comma(j):
            return 0 <= j < len(kids) and kids[j].category == "," and parent + (j,) not in removed

        if comma(idx - 1) and (comma(idx + 1) or idx == len(kids) - 1):
            extra.add(parent + (idx - 1,))
            if comma(idx + 1):
                extra.add(parent + (idx + 1,))
        elif idx == 0 and comma(1):
            extra.add(parent + (1,))
    return extra


def referent_path(tree: ParseTree, path: tuple) -> tuple | None:
    """Nearest noun phrase to the left among the sisters of ``path`` or of its ancestors."""
    cur = path
    while cur:
        parent, idx = cur[:-1], cur[-1]
        kids = tree.at(parent).children
        for j in range(idx - 1, -1, -1):
            if kids[j].category == "NP":
                return parent + (j,)
        cur = parent
    return None


def np_head(np: ParseTree) -> ParseTree | None:
    """Rightmost nominal pre-terminal of a noun phrase (descending into a leading NP)."""
    if np.is_leaf:
        return np
    heads = [c for c in np.children if c.is_leaf and (c.category.startswith("NN") or c.category in ("PRP", "CD"))]
    if heads:
        return heads[-1]
    for c in np.children:
        if c.category == "NP":
            return np_head(c)
    return None


def is_plural(np: ParseTree) -> bool:
    if any(c.category == "CC" for c in np.children):
        return True
    head = np_head(np)
    if head is None:
        return False
    return head.category in ("NNS", "NNPS") or head.token.lower() in _PLURAL_PRONOUNS


def is_past(node: ParseTree) -> bool:
    for lf in node.leaves():
        if lf.category in ("VBD", "VBN"):
            return True
        if lf.category.startswith("VB") or lf.category == "MD":
            return False
    return False


def _overlaps(a: TokenSpan, b: TokenSpan) -> bool:
    return a.start < b.end and b.start < a.end


class _Application:
    """State for one rule application on one tree."""

    def __init__(self, rule: Rule, tree: ParseTree, match: pat.MatchResult):
        self.rule = rule
        self.tree = tree
        self.paths = match.paths
        self.nodes = match.bindings
        self.extract_span = self.nodes["extract"].span
        self.deletes = [p for n, p in self.paths.items() if is_delete(n)]

    def fail(self, reason):
        raise RephraseFailure(self.rule.id, reason)

    def path_of(self, name):
        if name not in self.paths:
            self.fail(f"capture {name!r} is not bound")
        return self.paths[name]

    def _region_kind(self, idx):
        return "extract" if self.extract_span.start <= idx < self.extract_span.end else "shared"

    def _yield(self, base_path, removed, kind=None):
        node, origins = _prune(self.tree.at(base_path), base_path, removed)
        if node is None:
            return []
        kinds = [kind or self._region_kind(i) for i in origins]
        return [(node, origins, kinds)]

    def part(self, part, side):
        if isinstance(part, Literal):
            tag = _LITERAL_TAGS.get(part.token.lower(), "NN")
            return [(leaf(tag, part.token), [None], [None])]
        if isinstance(part, CaptureYield):
            removed = {self.path_of(m) for m in part.minus if m in self.paths}
            if part.name == "source":
                base = ()
            elif part.name == "remainder":
                base = ()
                removed |= {self.paths["extract"], *self.deletes}
                removed |= _absorb_commas(self.tree, removed)
            else:
                base = self.path_of(part.name)
            kind = "remainder" if side == "remainder" else None
            return self._yield(base, removed, kind)
        if isinstance(part, SharedConjunct):
            removed = _coordination_siblings(self.tree, self.path_of(part.name))
            return self._yield((), removed)
        if isinstance(part, ReferentNP):
            ref = referent_path(self.tree, self.path_of(part.name))
            if ref is None:
                self.fail(f"no referent noun phrase for {part.name!r}")
            return self._yield(ref, set(), "referent")
        if isinstance(part, InflectedCopula):
            plural = self._number(part.number)
            past = part.past or (part.tense is not None and is_past(self.tree.at(self.path_of(part.tense))))
            word = ("were" if plural else "was") if past else ("are" if plural else "is")
            tag = "VBD" if past else ("VBP" if plural else "VBZ")
            return [(leaf(tag, word), [None], [None])]
        raise TypeError(part)

    def _number(self, which):
        if which in ("sg", "pl"):
            return which == "pl"
        if which.startswith("^"):
            ref = referent_path(self.tree, self.path_of(which[1:]))
            if ref is None:
                self.fail(f"no referent noun phrase for {which[1:]!r}")
            return is_plural(self.tree.at(ref))
        node = self.tree.at(self.path_of(which))
        return is_plural(node) if node.category == "NP" else False

    def render(self, template: RephraseTemplate, side: str) -> Sentence:
        pieces = []
        for part in template.parts:
            pieces += self.part(part, side)
        children, origins, kinds = [], [], []
        for node, orig, kind in pieces:
            for child in _splice(node):
                children.append(child)
            origins += orig
            kinds += kind
        if not children:
            self.fail(f"{side} sentence is empty")
        tree = reindex(ParseTree("ROOT", (ParseTree("S", tuple(children), None, TokenSpan(0, 0)),), None,
                                 TokenSpan(0, 0)))
        tree, origins, kinds = _tidy(tree, origins, kinds)
        if tree is None:
            self.fail(f"{side} sentence is empty")
        return Sentence(_recase(tree, origins), tuple(origins), tuple(kinds))


def _recase(tree: ParseTree, origins) -> ParseTree:
    """Lowercase a source-initial common word that no longer starts the sentence."""
    targets = {k for k, o in enumerate(origins) if o == 0 and k > 0}
    if not targets:
        return tree
    count = [0]

    def go(node):
        if node.is_leaf:
            k = count[0]
            count[0] += 1
            if k in targets and not node.category.startswith("NNP") and node.token != "I":
                return ParseTree(node.label, (), node.token.lower(), node.span)
            return node
        return ParseTree(node.label, tuple(go(c) for c in node.children), None, node.span)

    return go(tree)


def _splice(node: ParseTree) -> list[ParseTree]:
    while not node.is_leaf and len(node.children) == 1 and node.category in ("ROOT", "SBAR"):
        node = node.children[0]
    if node.category == "ROOT":
        out = []
        for c in node.children:
            out += _splice(c)
        return out
    if not node.is_leaf and node.category in ("S", "SINV", "SQ"):
        return list(node.children)
    return [node]


def _tidy(tree, origins, kinds):
    """Drop stray punctuation and dangling conjunctions; end with a period."""
    leaves = list(tree.leaves())
    alive = list(range(len(leaves)))
    while True:
        drop = set()
        n = len(alive)
        for k, i in enumerate(alive):
            cat = leaves[i].category
            is_last = k == n - 1
            nxt = leaves[alive[k + 1]].category if k + 1 < n else None
            if cat in _FINAL and not is_last:
                drop.add(i)
            elif cat in _ORPHANS:
                if k == 0 and not (cat == "CC" and origins[i] == 0):
                    drop.add(i)
                elif nxt is None or nxt in _FINAL:
                    drop.add(i)
                elif cat in (",", ":") and nxt in (",", ":"):
                    drop.add(i)
        quotes = [i for i in alive if leaves[i].category in ("``", "''") and i not in drop]
        opens = sum(leaves[i].category == "``" for i in quotes)
        closes = len(quotes) - opens
        if opens != closes:
            drop.update(quotes)
        if not drop:
            break
        alive = [i for i in alive if i not in drop]
    dropped = set(range(len(leaves))) - set(alive)
    if not alive:
        return None, [], []
    new = prune_leaves(tree, dropped) if dropped else tree
    origins = [origins[i] for i in alive]
    kinds = [kinds[i] for i in alive]
    if new.leaves().__next__() is None or list(new.leaves())[-1].category not in _FINAL:
        s = new.children[0]
        s = ParseTree(s.label, s.children + (leaf(".", "."),), None, s.span) if not s.is_leaf \
            else ParseTree("S", (s, leaf(".", ".")), None, s.span)
        new = reindex(ParseTree("ROOT", (s,), None, new.span))
        origins.append(None)
        kinds.append(None)
    return new, origins, kinds


def _location_flag(tree: ParseTree, paths) -> bool:
    for p in paths:
        for sub in tree.at(p).subtrees():
            if "-LOC" in sub.label:
                return True
    return False


def apply_rule(rule: Rule, leaf_tree: ParseTree, cue_table: CueTable | None = None) -> SplitOutcome | None:
    """Split ``leaf_tree`` with ``rule``; ``None`` when the pattern does not match.

    Raises :class:`RephraseFailure` when the pattern matches but a sentence
    cannot be built; callers treat that as a non-match.
    """
    match = pat.find_first(rule.pattern, leaf_tree)
    if match is None:
        return None
    if "extract" not in match.paths:
        raise RephraseFailure(rule.id, "pattern has no 'extract' capture")
    app = _Application(rule, leaf_tree, match)
    table = cue_table or default_cue_table()
    verb_lemma = None
    if "verb" in match.bindings:
        verb_lemma = lemmatize_verb(match.bindings["verb"].tokens()[0], table.attribution_verbs)
        if verb_lemma not in table.attribution_verbs:
            app.fail(f"{verb_lemma!r} is not a reporting verb")
    extracted = app.render(rule.extract_rephrase, "extract")
    remainder = app.render(rule.remainder_rephrase, "remainder")

    n_source = len(leaf_tree.tokens())
    src_tokens = list(leaf_tree.leaves())
    for side, sent in (("extracted", extracted), ("remainder", remainder)):
        if not any(o is not None and is_content(src_tokens[o].category) for o in sent.origins):
            app.fail(f"{side} sentence has no content word")
    if sum(o is not None for o in remainder.origins) >= n_source:
        app.fail("remainder is not shorter than the source")
    if sum(o is not None for o in extracted.origins) >= n_source:
        app.fail("extracted sentence is not shorter than the source")

    hierarchy = rule.hierarchy
    if hierarchy is Hierarchy.COORDINATE:
        ext_label = rem_label = Label.CORE
    else:
        ctx = match.bindings.get("context")
        if ctx is None:
            app.fail("subordinate rule without 'context' capture")
        if _overlaps(ctx.span, app.extract_span):
            ext_label, rem_label = Label.CONTEXT, Label.CORE
        else:
            ext_label, rem_label = Label.CORE, Label.CONTEXT

    shared = {o for o, k in zip(extracted.origins, extracted.kinds) if k == "shared"}
    rem_positions = [o for o in remainder.origins if o is not None]
    unique = [o for o in rem_positions if o not in shared] or rem_positions
    extracted_first = bool(unique) and app.extract_span.start < min(unique)

    cue, fixed = None, None
    src = rule.cue_source
    if src.kind == "relation":
        fixed = src.relation
    elif src.kind == "phrase":
        cue = src.phrase
    elif src.kind == "template":
        toks = []
        for part in src.template.parts:
            for node, _, _ in app.part(part, "cue"):
                toks += node.tokens()
        cue = tuple(t.lower() for t in toks) or None

    loc_paths = [match.paths["extract"]] + ([match.paths["cue"]] if "cue" in match.paths else [])
    skipped = set()
    for name, node in match.bindings.items():
        if is_delete(name) or name == "cue":
            skipped.update(range(node.span.start, node.span.end))
    return SplitOutcome(
        rule_id=rule.id,
        extracted=extracted,
        remainder=remainder,
        extracted_label=ext_label,
        remainder_label=rem_label,
        cue_phrase=cue,
        fixed_relation=fixed,
        verb_lemma=verb_lemma,
        has_location_entity=_location_flag(leaf_tree, loc_paths),
        extracted_first=extracted_first,
        extract_span=app.extract_span,
        skipped=frozenset(skipped),
    )


def describe(rule: Rule) -> str:
    return (f"{rule.order_index:>2} {rule.id:<8} {rule.group.name:<36} {rule.hierarchy.value:<11} "
            f"{rule.pattern.text}")


__all__ = [
    "Rule", "RuleFile", "RuleGroup", "Hierarchy", "Label", "SplitOutcome", "Sentence", "Diagnostic",
    "load_rules", "lint_rules", "apply_rule", "parse_template", "RephraseFailure", "SchemaError",
    "PatternCompileError", "OrderViolation", "CountMismatch", "CONSTRUCTS", "serialize",
]
