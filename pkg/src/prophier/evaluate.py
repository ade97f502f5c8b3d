"""Alignment of propositions to gold discourse units and precision scoring."""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from importlib import resources
from typing import Sequence

from .relations import RhetoricalRelation
from .transform import LinkedPropositionTree, context_layers, leaves_in_order, lowest_common_relation, relation_nodes

DEFAULT_THRESHOLD = 0.65
NUCLEARITY = ("NN", "NS", "SN")


class EvalError(ValueError):
    pass


class GoldFormatError(EvalError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnmappedRelation(EvalError):
    def __init__(self, name):
        super().__init__(f"relation {name!r} is not in the grouping map")
        self.name = name


@dataclass(frozen=True)
class GoldLink:
    i: int
    j: int
    nuclearity: str
    relation: str


@dataclass(frozen=True)
class GoldSentence:
    sentence_id: str
    text: str
    edus: tuple
    gold_links: tuple


def load_gold(path) -> list[GoldSentence]:
    """Read JSON lines: {"id", "text", "edus": [..], "links": [[i, j, "NN|NS|SN", relation], ..]}."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            out.append(parse_gold_record(line, lineno))
    return out


def parse_gold_record(line: str, lineno: int = 1) -> GoldSentence:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise GoldFormatError(lineno, f"invalid JSON ({exc.msg})") from None
    for key in ("id", "edus", "links"):
        if key not in rec:
            raise GoldFormatError(lineno, f"missing field {key!r}")
    edus = tuple(str(e) for e in rec["edus"])
    if not edus:
        raise GoldFormatError(lineno, "no EDUs")
    links = []
    for k, link in enumerate(rec["links"]):
        if not isinstance(link, list) or len(link) != 4:
            raise GoldFormatError(lineno, f"link {k} must be [i, j, nuclearity, relation]")
        i, j, nuc, rel = link
        if nuc not in NUCLEARITY:
            raise GoldFormatError(lineno, f"link {k}: nuclearity must be one of {NUCLEARITY}")
        if not (isinstance(i, int) and isinstance(j, int) and 0 <= i < len(edus) and 0 <= j < len(edus)) or i == j:
            raise GoldFormatError(lineno, f"link {k}: bad EDU indices")
        links.append(GoldLink(i, j, nuc, str(rel)))
    text = rec.get("text") or " ".join(edus)
    return GoldSentence(str(rec["id"]), text, edus, tuple(links))


def _key(name: str) -> str:
    name = name.strip().lower()
    return re.sub(r"-[esn]$", "", name)


def load_grouping(path=None) -> dict[str, str]:
    path = path or resources.files("prophier.resources").joinpath("relation_groups.tsv")
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[1].strip():
                raise EvalError(f"{path}:{lineno}: expected 'relation<TAB>class'")
            mapping[_key(parts[0])] = parts[1].strip()
    return mapping


def group_of(name: str, grouping: dict[str, str]) -> str:
    try:
        return grouping[_key(name)]
    except KeyError:
        raise UnmappedRelation(name) from None


# -- similarity and alignment ------------------------------------------------

_PUNCT = re.compile(r"[^\w\s]")
_SPACE = re.compile(r"\s+")


def normalize(text: str) -> str:
    return _SPACE.sub(" ", _PUNCT.sub(" ", text.lower())).strip()


def similarity(a: str, b: str, normalized: bool = True) -> float:
    """Matching-blocks ratio 2M/T of the two strings."""
    if normalized:
        a, b = normalize(a), normalize(b)
    if a == b:
        return 1.0
    return SequenceMatcher(None, a, b, autojunk=False).ratio()


@dataclass(frozen=True)
class Match:
    prop: int
    edu: int
    score: float


def _text(p) -> str:
    return p if isinstance(p, str) else p.text


def align(props: Sequence, gold: GoldSentence | Sequence[str], threshold: float = DEFAULT_THRESHOLD,
          normalized: bool = True) -> list[Match]:
    """Greedy one-to-one matching by descending score; ties go to lower indices."""
    edus = gold.edus if isinstance(gold, GoldSentence) else tuple(gold)
    cands = []
    for i, p in enumerate(props):
        for j, e in enumerate(edus):
            s = similarity(_text(p), e, normalized)
            if s >= threshold:
                cands.append((s, i, j))
    cands.sort(key=lambda c: (-c[0], c[1], c[2]))
    used_p, used_e, out = set(), set(), []
    for s, i, j in cands:
        if i in used_p or j in used_e:
            continue
        used_p.add(i)
        used_e.add(j)
        out.append(Match(i, j, s))
    return sorted(out, key=lambda m: (m.prop, m.edu))


# -- scoring -----------------------------------------------------------------

@dataclass
class Tally:
    correct: int = 0
    total: int = 0

    @property
    def precision(self) -> float | None:
        return self.correct / self.total if self.total else None

    def add(self, other: "Tally"):
        self.correct += other.correct
        self.total += other.total


def _edu_to_prop(alignment):
    return {m.edu: m.prop for m in alignment}


def score_nuclearity(lpt: LinkedPropositionTree, alignment: Sequence[Match], gold: GoldSentence) -> Tally:
    layers = context_layers(lpt)
    e2p = _edu_to_prop(alignment)
    tally = Tally()
    for link in gold.gold_links:
        if link.i not in e2p or link.j not in e2p:
            continue
        li, lj = layers[e2p[link.i]], layers[e2p[link.j]]
        if link.nuclearity == "NN":
            ok = li == lj
        elif link.nuclearity == "NS":
            ok = lj == li + 1
        else:
            ok = li == lj + 1
        tally.total += 1
        tally.correct += ok
    return tally


@dataclass
class RelationScore:
    per_class: dict = field(default_factory=dict)  # class -> Tally
    unknown: int = 0
    distribution: Counter = field(default_factory=Counter)

    def add(self, other: "RelationScore"):
        for cls, t in other.per_class.items():
            self.per_class.setdefault(cls, Tally()).add(t)
        self.unknown += other.unknown
        self.distribution.update(other.distribution)

    def precision(self) -> dict[str, float | None]:
        return {cls: t.precision for cls, t in sorted(self.per_class.items())}

    def average(self) -> float | None:
        vals = [p for p in self.precision().values() if p is not None]
        return sum(vals) / len(vals) if vals else None


def score_relations(lpt: LinkedPropositionTree, alignment: Sequence[Match], gold: GoldSentence,
                    grouping: dict[str, str]) -> RelationScore:
    e2p = _edu_to_prop(alignment)
    score = RelationScore(distribution=Counter(str(r.relation) for r in relation_nodes(lpt)))
    for link in gold.gold_links:
        gold_cls = group_of(link.relation, grouping)
        if link.i not in e2p or link.j not in e2p:
            continue
        node = lowest_common_relation(lpt, e2p[link.i], e2p[link.j])
        if node is None:
            continue
        if node.relation is RhetoricalRelation.UNKNOWN:
            score.unknown += 1
            continue
        sys_cls = group_of(node.relation.value, grouping)
        t = score.per_class.setdefault(sys_cls, Tally())
        t.total += 1
        t.correct += sys_cls == gold_cls
    return score


@dataclass
class AlignmentReport:
    matched_pairs: list = field(default_factory=list)  # (sentence id, proposition text, edu text, score)
    edus: int = 0
    nuclearity: Tally = field(default_factory=Tally)
    relations: RelationScore = field(default_factory=RelationScore)

    @property
    def match_rate(self) -> float | None:
        return len(self.matched_pairs) / self.edus if self.edus else None

    @property
    def nuclearity_agreement(self) -> float | None:
        return self.nuclearity.precision

    @property
    def relation_precision(self) -> dict:
        return self.relations.precision()

    @property
    def relation_distribution(self) -> dict:
        return dict(sorted(self.relations.distribution.items()))

    def to_dict(self) -> dict:
        return {
            "sentences": len({m[0] for m in self.matched_pairs}),
            "edus": self.edus,
            "matched": len(self.matched_pairs),
            "match_rate": self.match_rate,
            "nuclearity": {"correct": self.nuclearity.correct, "scored": self.nuclearity.total,
                           "precision": self.nuclearity_agreement},
            "relations": {cls: {"correct": t.correct, "predicted": t.total, "precision": t.precision}
                          for cls, t in sorted(self.relations.per_class.items())},
            "average_relation_precision": self.relations.average(),
            "unknown": self.relations.unknown,
            "distribution": self.relation_distribution,
        }


def evaluate(pairs: Sequence[tuple[LinkedPropositionTree, GoldSentence]], grouping: dict[str, str] | None = None,
             threshold: float = DEFAULT_THRESHOLD, normalized: bool = True) -> AlignmentReport:
    grouping = grouping if grouping is not None else load_grouping()
    report = AlignmentReport()
    for lpt, gold in pairs:
        props = leaves_in_order(lpt)
        alignment = align(props, gold, threshold, normalized)
        report.edus += len(gold.edus)
        report.matched_pairs += [(gold.sentence_id, props[m.prop].text, gold.edus[m.edu], m.score)
                                 for m in alignment]
        report.nuclearity.add(score_nuclearity(lpt, alignment, gold))
        report.relations.add(score_relations(lpt, alignment, gold, grouping))
    return report


def fmt(value: float | None, digits: int = 4) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"
