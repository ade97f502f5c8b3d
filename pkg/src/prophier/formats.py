"""Serializations of linked proposition trees: tree, flat and structured."""

from __future__ import annotations

import json
from typing import Iterable

from .relations import RhetoricalRelation
from .rules import Label
from .transform import ClauseType, Leaf, LinkedPropositionTree, Proposition, Relation, context_layers, leaves_in_order
from .tree import TreeError, detokenize, parse_bracketed, serialize

SCHEMA_VERSION = "1"
FORMATS = ("tree", "flat", "structured")


class FormatError(ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


# -- structured --------------------------------------------------------------

def _node_dict(node) -> dict:
    if isinstance(node, Leaf):
        p = node.prop
        return {"node_type": "proposition", "text": p.text, "tokens": list(p.tokens),
                "clause_type": p.clause_type.value if p.clause_type else None, "parse": serialize(p.tree)}
    children = []
    for label, child in node.children:
        d = {"label": label.value}
        d.update(_node_dict(child))
        children.append(d)
    return {"node_type": "relation", "relation": node.relation.value, "rule": node.rule_id,
            "cue": list(node.cue) if node.cue else None, "children": children}


def to_structured(lpt: LinkedPropositionTree, sentence_id: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "id": sentence_id, "source": list(lpt.source),
            "root": _node_dict(lpt.root)}


def write_structured(lpt: LinkedPropositionTree, sentence_id: str) -> str:
    return json.dumps(to_structured(lpt, sentence_id), ensure_ascii=False, sort_keys=True)


def error_record(sentence_id: str, message: str) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, "id": sentence_id, "error": message}, sort_keys=True)


def _node_from(d: dict):
    kind = d.get("node_type")
    if kind == "proposition":
        ctype = ClauseType(d["clause_type"]) if d.get("clause_type") else None
        return Leaf(Proposition(tuple(d["tokens"]), parse_bracketed(d["parse"]), ctype))
    if kind == "relation":
        kids = d["children"]
        if len(kids) != 2:
            raise ValueError("relation node must have two children")
        pairs = [(Label(k["label"]), _node_from(k)) for k in kids]
        return Relation(RhetoricalRelation.parse(d["relation"]), pairs[0], pairs[1], d.get("rule", ""),
                        tuple(d["cue"]) if d.get("cue") else None)
    raise ValueError(f"unknown node_type {kind!r}")


def read_structured(lines: Iterable[str]) -> list[tuple[str, LinkedPropositionTree | None, str | None]]:
    """Parse structured output into (id, lpt, error) triples."""
    out = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if rec.get("schema_version") != SCHEMA_VERSION:
                raise ValueError(f"unsupported schema_version {rec.get('schema_version')!r}")
            if "error" in rec:
                out.append((str(rec["id"]), None, rec["error"]))
                continue
            lpt = LinkedPropositionTree(_node_from(rec["root"]), tuple(rec["source"]))
        except (ValueError, KeyError, TypeError, TreeError) as exc:
            raise FormatError(lineno, str(exc)) from None
        out.append((str(rec["id"]), lpt, None))
    return out


# -- tree --------------------------------------------------------------------

def write_tree(lpt: LinkedPropositionTree, sentence_id: str) -> str:
    lines = [f"# {sentence_id}: {detokenize(lpt.source)}"]

    def go(node, prefix, depth):
        pad = "  " * depth
        if isinstance(node, Leaf):
            lines.append(f"{pad}{prefix}{' '.join(node.prop.tokens)}")
            return
        lines.append(f"{pad}{prefix}[{node.relation.value}]")
        for label, child in node.children:
            go(child, f"{label.value}: ", depth + 1)

    go(lpt.root, "", 0)
    return "\n".join(lines) + "\n"


def read_tree(text: str) -> list[tuple[str, tuple]]:
    """Parse tree output into (id, shape) pairs; see :func:`shape`."""
    results = []
    block: list[tuple[int, str]] = []
    sid = None

    def flush():
        if sid is not None and not block:
            results.append((sid, None))
        elif sid is not None:
            pos, node = _tree_node(block, 0, 0)
            if pos != len(block):
                raise FormatError(block[pos][0], "unexpected line")
            results.append((sid, node))

    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        if raw.startswith("# "):
            flush()
            sid = raw[2:].split(":", 1)[0]
            block = []
        else:
            block.append((lineno, raw))
    flush()
    return results


def _tree_node(block, pos, depth):
    lineno, raw = block[pos]
    indent = len(raw) - len(raw.lstrip(" "))
    if indent != 2 * depth:
        raise FormatError(lineno, "bad indentation")
    body = raw.strip()
    if depth:
        label, _, body = body.partition(": ")
        if label not in ("core", "context"):
            raise FormatError(lineno, "expected 'core:' or 'context:'")
    else:
        label = None
    if body.startswith("[") and body.endswith("]"):
        rel = body[1:-1]
        pos, left = _tree_node(block, pos + 1, depth + 1)
        pos, right = _tree_node(block, pos, depth + 1)
        return pos, (label, rel, left, right)
    return pos + 1, (label, tuple(body.split()))


def shape(lpt: LinkedPropositionTree) -> tuple:
    """Relations, edge labels and leaf tokens as nested tuples."""
    def go(node, label):
        if isinstance(node, Leaf):
            return (label, tuple(node.prop.tokens))
        (ll, lc), (rl, rc) = node.children
        return (label, node.relation.value, go(lc, ll.value), go(rc, rl.value))
    return go(lpt.root, None)


# -- flat --------------------------------------------------------------------

def _head(node, offset):
    """Index of the core head leaf of a subtree whose first leaf is ``offset``."""
    while isinstance(node, Relation):
        (ll, lc), (rl, rc) = node.children
        if ll is Label.CORE or rl is not Label.CORE:
            node = lc
        else:
            offset += _count(lc)
            node = rc
    return offset


def _count(node):
    return 1 if isinstance(node, Leaf) else _count(node.left[1]) + _count(node.right[1])


def flat_links(lpt: LinkedPropositionTree) -> dict[int, list[tuple[str, int, str]]]:
    links: dict[int, list] = {}

    def go(node, offset):
        if isinstance(node, Leaf):
            return
        (ll, lc), (rl, rc) = node.children
        r_off = offset + _count(lc)
        a, b = _head(lc, offset), _head(rc, r_off)
        rel = node.relation.value.upper()
        if ll is rl:
            links.setdefault(a, []).append((rel, b, "core<->core"))
            links.setdefault(b, []).append((rel, a, "core<->core"))
        else:
            core, ctx = (a, b) if ll is Label.CORE else (b, a)
            links.setdefault(core, []).append((rel, ctx, "core->context"))
            links.setdefault(ctx, []).append((rel, core, "core->context"))
        go(lc, offset)
        go(rc, r_off)

    go(lpt.root, 0)
    return links


def write_flat(lpt: LinkedPropositionTree, sentence_id: str) -> str:
    lines = [f"# {sentence_id}: {detokenize(lpt.source)}"]
    links = flat_links(lpt)
    for i, (prop, layer) in enumerate(zip(leaves_in_order(lpt), context_layers(lpt))):
        lines.append(f"#{i + 1}\t{layer}\t{prop.text}")
        for rel, target, direction in links.get(i, []):
            lines.append(f"\tL:{rel}\t#{target + 1}\t{direction}")
    return "\n".join(lines) + "\n"


def render(lpt: LinkedPropositionTree, sentence_id: str, fmt: str) -> str:
    if fmt == "tree":
        return write_tree(lpt, sentence_id)
    if fmt == "flat":
        return write_flat(lpt, sentence_id)
    if fmt == "structured":
        return write_structured(lpt, sentence_id) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def render_error(sentence_id: str, message: str, fmt: str) -> str:
    if fmt == "structured":
        return error_record(sentence_id, message) + "\n"
    return f"# {sentence_id}: error: {message}\n"
