"""Tree-query patterns over constituency trees.

A small Tregex-like language. Grammar (EBNF)::

    pattern   = expr ;
    expr      = ( "(" expr ")" | head ) { relation } ;
    head      = [ "!" ] labels [ words ] { "=" name } ;
    words     = "[" [ "!" ] word { "|" word } "]" ;
    labels    = "__" | label { "|" label } ;
    relation  = op operand ;
    operand   = "(" expr ")" | head ;
    op        = "<" | "<<" | "<:" | "<<:" | "<," | "<-" | "<+" "(" labels ")"
              | "$.." | "$+" | "$,," | "$-" ;

Relations following a head all constrain that head: ``A < B $.. C`` means A
has a child B and A has a later sister C. Parentheses nest: ``A < (B < C)``.
Labels match the bare category of a node (functional tags stripped). A word
list restricts the node's lowercased yield: ``IN[if|unless]``, ``IN[!that]``,
``SBAR[so that]``. A node may carry several captures (``SBAR=delete=context``); a negated node
(``!NP``) may not carry any.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterator

from .tree import ParseTree


class PatternError(ValueError):
    pass


class PatternSyntaxError(PatternError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownOperator(PatternSyntaxError):
    def __init__(self, glyph, position):
        super().__init__(f"unknown operator {glyph!r}", position)
        self.glyph = glyph


class DuplicateCapture(PatternError):
    def __init__(self, name):
        super().__init__(f"duplicate capture {name!r}")
        self.name = name


class Op(enum.Enum):
    CHILD = "<"
    DOMINATES = "<<"
    ONLY_CHILD = "<:"
    UNARY_DOMINATES = "<<:"
    FIRST_CHILD = "<,"
    LAST_CHILD = "<-"
    CHAIN_DOMINATES = "<+"
    SISTER_PRECEDES = "$.."
    IMMEDIATE_SISTER_PRECEDES = "$+"
    SISTER_FOLLOWS = "$,,"
    IMMEDIATE_SISTER_FOLLOWS = "$-"


_OPS = {op.value: op for op in Op}


@dataclass(frozen=True)
class Relation:
    op: Op
    target: "PatternNode"
    chain: frozenset | None = None  # categories for <+(C)


@dataclass(frozen=True)
class PatternNode:
    categories: frozenset | None  # None is the wildcard __
    negated: bool = False
    captures: tuple = ()
    relations: tuple = ()
    words: frozenset | None = None
    words_negated: bool = False

    def accepts(self, node: ParseTree) -> bool:
        hit = self.categories is None or node.category in self.categories
        if hit == self.negated:
            return False
        if self.words is not None:
            text = " ".join(node.tokens()).lower()
            return (text in self.words) != self.words_negated
        return True

    def walk(self) -> Iterator["PatternNode"]:
        yield self
        for rel in self.relations:
            yield from rel.target.walk()

    def operators(self) -> list[Op]:
        return [rel.op for n in self.walk() for rel in n.relations]


@dataclass(frozen=True)
class Pattern:
    root: PatternNode
    capture_names: frozenset
    text: str = ""

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class MatchResult:
    anchor: ParseTree
    anchor_path: tuple
    bindings: dict = field(hash=False)  # capture name -> ParseTree
    paths: dict = field(hash=False)  # capture name -> path in the searched tree


# -- compiler ----------------------------------------------------------------

_LABEL_RE = re.compile(r"[^\s()=!<|\[]+")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OP_RE = re.compile(r"[<>$.,:+\-&~^*%#@|]+")


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.captures: list[str] = []

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            raise PatternSyntaxError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def labels(self):
        self.skip()
        start = self.pos
        names = []
        while True:
            m = _LABEL_RE.match(self.text, self.pos)
            if not m:
                raise PatternSyntaxError("expected a node label", self.pos)
            names.append(m.group())
            self.pos = m.end()
            if self.pos < len(self.text) and self.text[self.pos] == "|":
                self.pos += 1
                continue
            break
        if "__" in names:
            if len(names) > 1:
                raise PatternSyntaxError("wildcard cannot be alternated", start)
            return None
        return frozenset(names)

    def head(self):
        negated = False
        if self.peek() == "!":
            negated = True
            self.pos += 1
        cats = self.labels()
        words, words_negated = None, False
        if self.pos < len(self.text) and self.text[self.pos] == "[":
            end = self.text.find("]", self.pos)
            if end < 0:
                raise PatternSyntaxError("unclosed word list", self.pos)
            body = self.text[self.pos + 1:end]
            if body.startswith("!"):
                words_negated, body = True, body[1:]
            words = frozenset(w.strip().lower() for w in body.split("|"))
            if "" in words:
                raise PatternSyntaxError("empty word in word list", self.pos)
            self.pos = end + 1
        caps = []
        while self.pos < len(self.text) and self.text[self.pos] == "=":
            self.pos += 1
            m = _NAME_RE.match(self.text, self.pos)
            if not m:
                raise PatternSyntaxError("expected capture name", self.pos)
            name = m.group()
            if name in self.captures:
                raise DuplicateCapture(name)
            self.captures.append(name)
            caps.append(name)
            self.pos = m.end()
        if negated and caps:
            raise PatternSyntaxError("negated node cannot carry a capture", self.pos)
        return (cats, negated, tuple(caps), words, words_negated)

    def expr(self):
        if self.peek() == "(":
            self.pos += 1
            result = self.expr()
            self.expect(")")
            extra = self.relations()
            if extra:
                result = PatternNode(result.categories, result.negated, result.captures,
                                     result.relations + extra, result.words, result.words_negated)
            return result
        head = self.head()
        cats, negated, caps, words, wneg = head
        return PatternNode(cats, negated, caps, self.relations(), words, wneg)

    def relations(self):
        out = []
        while self.peek() not in ("", ")"):
            out.append(self.relation())
        return tuple(out)

    def relation(self):
        start = self.pos
        m = _OP_RE.match(self.text, self.pos)
        if not m:
            raise PatternSyntaxError("expected an operator", self.pos)
        glyph = m.group()
        op = _OPS.get(glyph)
        if op is None:
            raise UnknownOperator(glyph, start)
        self.pos = m.end()
        chain = None
        if op is Op.CHAIN_DOMINATES:
            if self.pos >= len(self.text) or self.text[self.pos] != "(":
                raise PatternSyntaxError("'<+' needs a category argument '(C)'", self.pos)
            self.pos += 1
            chain = self.labels()
            self.expect(")")
        if self.peek() == "(":
            self.pos += 1
            target = self.expr()
            self.expect(")")
        else:
            cats, negated, caps, words, wneg = self.head()
            target = PatternNode(cats, negated, caps, (), words, wneg)
        return Relation(op, target, chain)


def compile(pattern_text: str) -> Pattern:
    parser = _Parser(pattern_text)
    if not parser.peek():
        raise PatternSyntaxError("empty pattern", 0)
    root = parser.expr()
    if parser.peek():
        raise PatternSyntaxError(f"unexpected {parser.peek()!r}", parser.pos)
    return Pattern(root, frozenset(parser.captures), pattern_text)


# -- matcher -----------------------------------------------------------------

def _candidates(tree: ParseTree, path: tuple, rel: Relation) -> Iterator[tuple]:
    """Paths standing in ``rel.op`` to the node at ``path``, in pre-order."""
    op = rel.op
    a = tree.at(path)
    if op is Op.CHILD:
        for i in range(len(a.children)):
            yield path + (i,)
    elif op is Op.DOMINATES:
        for sub, _ in a.positions():
            if sub:
                yield path + sub
    elif op is Op.ONLY_CHILD:
        if len(a.children) == 1:
            yield path + (0,)
    elif op is Op.UNARY_DOMINATES:
        cur, node = path, a
        while len(node.children) == 1:
            cur, node = cur + (0,), node.children[0]
            yield cur
    elif op is Op.FIRST_CHILD:
        if a.children:
            yield path + (0,)
    elif op is Op.LAST_CHILD:
        if a.children:
            yield path + (len(a.children) - 1,)
    elif op is Op.CHAIN_DOMINATES:
        yield from _chain(a, path, rel.chain)
    else:
        if not path:
            return
        parent, idx = tree.at(path[:-1]), path[-1]
        n = len(parent.children)
        if op is Op.SISTER_PRECEDES:
            js = range(idx + 1, n)
        elif op is Op.IMMEDIATE_SISTER_PRECEDES:
            js = [idx + 1] if idx + 1 < n else []
        elif op is Op.SISTER_FOLLOWS:
            js = range(0, idx)
        else:
            js = [idx - 1] if idx > 0 else []
        for j in js:
            yield path[:-1] + (j,)


def _chain(node, path, cats):
    # children are always reachable; deeper nodes only through nodes whose category is in cats
    for i, child in enumerate(node.children):
        yield path + (i,)
        if cats is None or child.category in cats:
            yield from _chain(child, path + (i,), cats)


def _match(pnode: PatternNode, tree: ParseTree, path: tuple, bound: dict) -> Iterator[dict]:
    if not pnode.accepts(tree.at(path)):
        return
    bound = dict(bound)
    for name in pnode.captures:
        bound[name] = path
    yield from _relations(pnode.relations, 0, tree, path, bound)


def _relations(rels, k, tree, path, bound):
    if k == len(rels):
        yield bound
        return
    rel = rels[k]
    for cand in _candidates(tree, path, rel):
        for b in _match(rel.target, tree, cand, bound):
            yield from _relations(rels, k + 1, tree, path, b)


def _result(tree, path, bound):
    return MatchResult(
        anchor=tree.at(path),
        anchor_path=path,
        bindings={name: tree.at(p) for name, p in bound.items()},
        paths=dict(bound),
    )


def iter_matches(pattern: Pattern, tree: ParseTree) -> Iterator[MatchResult]:
    for path, _ in tree.positions():
        for bound in _match(pattern.root, tree, path, {}):
            yield _result(tree, path, bound)
            break


def find_all(pattern: Pattern, tree: ParseTree) -> list[MatchResult]:
    """One match per matching anchor, anchors in pre-order.

    For each anchor the bindings are those of the first successful assignment
    when pattern nodes are bound in pattern pre-order and candidates are tried
    in tree pre-order.
    """
    return list(iter_matches(pattern, tree))


def find_first(pattern: Pattern, tree: ParseTree) -> MatchResult | None:
    return next(iter_matches(pattern, tree), None)
