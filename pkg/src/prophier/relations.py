"""Cue-phrase based classification of rhetorical relations."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)


class RhetoricalRelation(str, enum.Enum):
    CONTRAST = "Contrast"
    LIST = "List"
    DISJUNCTION = "Disjunction"
    CAUSE = "Cause"
    RESULT = "Result"
    TEMPORAL = "Temporal"
    BACKGROUND = "Background"
    CONDITION = "Condition"
    ELABORATION = "Elaboration"
    EXPLANATION = "Explanation"
    SPATIAL = "Spatial"
    ATTRIBUTION = "Attribution"
    UNKNOWN = "Unknown"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, name: str) -> "RhetoricalRelation":
        for rel in cls:
            if rel.value.lower() == name.strip().lower():
                return rel
        raise UnknownRelationName(name)


class CueTableError(ValueError):
    pass


class MissingRow(CueTableError):
    def __init__(self, cue, relation=None):
        super().__init__(f"cue table lacks row {relation}\t{cue}" if relation else f"cue table lacks {cue!r}")
        self.cue = cue


class UnknownRelationName(CueTableError):
    def __init__(self, name):
        super().__init__(f"unknown relation name {name!r}")
        self.name = name


R = RhetoricalRelation

# Reference copy of the published cue inventory; the bundled table must equal it.
REFERENCE_CUE_TABLE = {
    R.CONTRAST: ("although", "but", "but now", "despite", "even though", "even when",
                 "except when", "however", "instead", "rather", "still", "though", "thus",
                 "until recently", "while", "yet"),
    R.LIST: ("and", "in addition", "in addition to", "moreover"),
    R.DISJUNCTION: ("or",),
    R.CAUSE: ("largely because", "because", "since"),
    R.RESULT: ("as a result", "as a result of"),
    R.TEMPORAL: ("after", "and after", "next", "then", "before", "previously"),
    R.BACKGROUND: ("as", "now", "once", "when", "with", "without"),
    R.CONDITION: ("if", "in case", "unless", "until"),
    R.ELABORATION: ("more provocatively", "even before", "for example", "further", "recently",
                    "since", "since now", "so", "so far", "where", "whereby", "whether"),
    R.EXPLANATION: ("simply because", "because of", "indeed", "so", "so that"),
}

# cues listed under several relations resolve to the earliest relation here
DEFAULT_AMBIGUITY_PRIORITY = (R.CAUSE, R.EXPLANATION, R.ELABORATION)


def reference_pairs() -> set[tuple[str, RhetoricalRelation]]:
    return {(cue, rel) for rel, cues in REFERENCE_CUE_TABLE.items() for cue in cues}


_IRREGULAR = {
    "said": "say", "says": "say", "told": "tell", "thought": "think", "wrote": "write",
    "written": "write", "felt": "feel", "knew": "know", "known": "know", "heard": "hear",
    "saw": "see", "seen": "see", "found": "find", "held": "hold", "meant": "mean",
    "was": "be", "were": "be", "is": "be", "are": "be", "been": "be",
}


def lemmatize_verb(word: str, known: Iterable[str] = ()) -> str:
    """Crude verb lemmatizer; prefers a candidate found in ``known``."""
    w = word.lower()
    if w in _IRREGULAR:
        return _IRREGULAR[w]
    known = set(known)
    candidates = [w]
    if w.endswith("ies") or w.endswith("ied"):
        candidates.append(w[:-3] + "y")
    if w.endswith("es") or w.endswith("ed"):
        candidates += [w[:-2], w[:-1]]
        if len(w) > 4 and w[-3] == w[-4]:
            candidates.append(w[:-3])  # admitted -> admit
    if w.endswith("s"):
        candidates.append(w[:-1])
    if w.endswith("ing"):
        candidates += [w[:-3], w[:-3] + "e"]
    for cand in candidates:
        if cand in known:
            return cand
    return w


@dataclass(frozen=True)
class CueTable:
    entries: tuple  # ((cue tokens, relation), ...) longest phrase first
    attribution_verbs: frozenset
    location_markers: frozenset
    priority: tuple = DEFAULT_AMBIGUITY_PRIORITY

    def pairs(self) -> set[tuple[str, RhetoricalRelation]]:
        return {(" ".join(cue), rel) for cue, rel in self.entries}

    def lookup(self, cue: Sequence[str]) -> RhetoricalRelation | None:
        """Exact phrase first, else the longest table phrase occurring in ``cue``."""
        cue = tuple(t.lower() for t in cue)
        if not cue:
            return None
        exact = [rel for phrase, rel in self.entries if phrase == cue]
        if exact:
            return self._resolve(exact)
        best_len, best_pos, hits = 0, None, []
        for phrase, rel in self.entries:
            n = len(phrase)
            if n < best_len:
                break
            for pos in range(len(cue) - n + 1):
                if cue[pos:pos + n] == phrase:
                    if n > best_len or best_pos is None or pos < best_pos:
                        best_len, best_pos, hits = n, pos, [rel]
                    elif pos == best_pos:
                        hits.append(rel)
                    break
        return self._resolve(hits) if hits else None

    def _resolve(self, rels):
        rels = list(dict.fromkeys(rels))
        if len(rels) == 1:
            return rels[0]
        for rel in self.priority:
            if rel in rels:
                return rel
        return rels[0]

    def classify(self, cue: Sequence[str] | None = None, attribution_verb_lemma: str | None = None,
                 has_location_entity: bool = False) -> RhetoricalRelation:
        if attribution_verb_lemma and attribution_verb_lemma.lower() in self.attribution_verbs:
            return R.ATTRIBUTION
        cue = [t.lower() for t in cue or ()]
        rel = self.lookup(cue)
        if rel is not None:
            return rel
        if has_location_entity and cue and cue[0] in self.location_markers:
            return R.SPATIAL
        return R.UNKNOWN

    def is_attribution_verb(self, word: str) -> bool:
        return lemmatize_verb(word, self.attribution_verbs) in self.attribution_verbs


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line.strip() and not line.lstrip().startswith("#"):
                yield lineno, line


def _resource(name):
    return resources.files("prophier.resources").joinpath(name)


def load_cue_table(path=None, attribution_path=None, location_path=None,
                   priority=DEFAULT_AMBIGUITY_PRIORITY, strict=True) -> CueTable:
    """Load a ``relation<TAB>cue`` file plus the attribution and location lists.

    With ``strict`` every reference row must be present; the bundled table must
    additionally contain nothing else.
    """
    bundled = path is None
    path = path or _resource("cue_phrases.tsv")
    pairs = []
    for lineno, line in _lines(path):
        if "\t" not in line:
            raise CueTableError(f"{path}:{lineno}: expected 'relation<TAB>cue'")
        name, cue = line.split("\t", 1)
        rel = RhetoricalRelation.parse(name)
        pairs.append((tuple(cue.strip().lower().split()), rel))
    if strict:
        have = {(" ".join(c), r) for c, r in pairs}
        for cue, rel in sorted(reference_pairs() - have, key=lambda p: (p[1].value, p[0])):
            raise MissingRow(cue, rel)
        if bundled and have != reference_pairs():
            raise CueTableError(f"bundled cue table has extra rows: {sorted(have - reference_pairs())}")
    pairs.sort(key=lambda p: -len(p[0]))
    verbs = frozenset(w.strip().lower() for _, w in _lines(attribution_path or _resource("attribution_verbs.txt")))
    places = frozenset(w.strip().lower() for _, w in _lines(location_path or _resource("location_markers.txt")))
    return CueTable(tuple(pairs), verbs, places, tuple(priority))


def classify(cue=None, context_hints=None, table: CueTable | None = None) -> RhetoricalRelation:
    hints = context_hints or {}
    table = table or default_cue_table()
    return table.classify(cue, hints.get("attribution_verb_lemma"), bool(hints.get("has_location_entity")))


_DEFAULT = None


def default_cue_table() -> CueTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_cue_table()
    return _DEFAULT
