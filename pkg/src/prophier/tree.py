"""Immutable constituency trees and the bracketed (Penn Treebank style) codec."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence


class TreeError(ValueError):
    pass


class UnbalancedBrackets(TreeError):
    def __init__(self, position, message="unbalanced brackets"):
        super().__init__(f"{message} at position {position}")
        self.position = position


class EmptyTree(TreeError):
    pass


class LeafWithChildren(TreeError):
    pass


_ESCAPES = {"-LRB-": "(", "-RRB-": ")", "-LCB-": "{", "-RCB-": "}", "-LSB-": "[", "-RSB-": "]"}
_UNESCAPES = {"(": "-LRB-", ")": "-RRB-", "{": "-LCB-", "}": "-RCB-"}


class TokenSpan(NamedTuple):
    start: int
    end: int

    def __len__(self):
        return self.end - self.start

    def contains(self, other: "TokenSpan") -> bool:
        return self.start <= other.start and other.end <= self.end


def category(label: str) -> str:
    """Bare syntactic category: functional tags and indices stripped."""
    if label.startswith("-") and label.endswith("-"):
        return label  # -LRB-, -NONE-, ...
    for i, ch in enumerate(label):
        if ch in "-=" and i > 0:
            return label[:i]
    return label


@dataclass(frozen=True)
class ParseTree:
    label: str
    children: tuple = ()
    token: str | None = None
    span: TokenSpan = field(default=TokenSpan(0, 0))

    def __post_init__(self):
        if (self.token is None) == (not self.children):
            raise LeafWithChildren(
                f"node {self.label!r} must have either a token or children, not both/neither")

    @property
    def category(self) -> str:
        return category(self.label)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> Iterator["ParseTree"]:
        if self.is_leaf:
            yield self
        else:
            for child in self.children:
                yield from child.leaves()

    def tokens(self) -> list[str]:
        return [leaf.token for leaf in self.leaves()]

    def subtrees(self) -> Iterator["ParseTree"]:
        """Pre-order traversal including self."""
        yield self
        for child in self.children:
            yield from child.subtrees()

    def positions(self, _prefix=()) -> Iterator[tuple[tuple[int, ...], "ParseTree"]]:
        """Pre-order (path, node) pairs; a path is the tuple of child indices from the root."""
        yield _prefix, self
        for i, child in enumerate(self.children):
            yield from child.positions(_prefix + (i,))

    def at(self, path: Sequence[int]) -> "ParseTree":
        node = self
        for i in path:
            node = node.children[i]
        return node

    def __len__(self):
        return len(self.span)

    def __str__(self):
        return serialize(self)


def leaf(label: str, token: str) -> ParseTree:
    return ParseTree(label, (), token, TokenSpan(0, 1))


def node(label: str, children: Sequence[ParseTree]) -> ParseTree:
    """Build an internal node; spans of the result are reindexed from 0."""
    return reindex(ParseTree(label, tuple(children), None, TokenSpan(0, 0)))


def reindex(tree: ParseTree, start: int = 0) -> ParseTree:
    if tree.is_leaf:
        span = TokenSpan(start, start + 1)
        return tree if tree.span == span else ParseTree(tree.label, (), tree.token, span)
    children = []
    pos = start
    for child in tree.children:
        child = reindex(child, pos)
        children.append(child)
        pos = child.span.end
    return ParseTree(tree.label, tuple(children), None, TokenSpan(start, pos))


def yield_text(tree: ParseTree) -> list[str]:
    return tree.tokens()


def relabel(tree: ParseTree, label: str) -> ParseTree:
    return ParseTree(label, tree.children, tree.token, tree.span)


# -- codec -------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


def _lex(text):
    for m in _TOKEN_RE.finditer(text):
        yield m.start(), m.group()


def parse_bracketed(text: str) -> ParseTree:
    """Parse one bracketed tree.

    Empty-element leaves (``-NONE-``) are dropped and spans recomputed. An
    unlabeled outermost bracket, as in ``( (S ...))``, becomes ``ROOT``.
    """
    tokens = list(_lex(text))
    if not tokens:
        raise EmptyTree("no tree in input")
    stack: list[list] = []  # [label, children, token, open_pos]
    result = None
    i = 0
    while i < len(tokens):
        pos, tok = tokens[i]
        if tok == "(":
            if result is not None:
                raise UnbalancedBrackets(pos, "text after complete tree")
            label = ""
            if i + 1 < len(tokens) and tokens[i + 1][1] not in "()":
                label = tokens[i + 1][1]
                i += 1
            stack.append([label, [], None, pos])
        elif tok == ")":
            if not stack:
                raise UnbalancedBrackets(pos, "unexpected closing bracket")
            label, children, token, open_pos = stack.pop()
            if not label:
                label = "ROOT" if not stack else ""
                if not label:
                    raise TreeError(f"unlabeled node at position {open_pos}")
            if token is None and not children:
                if stack:
                    raise EmptyTree(f"empty node {label!r} at position {open_pos}")
                raise EmptyTree("tree has no tokens")
            kept = tuple(c for c in children if c is not None)
            if label == "-NONE-" or (token is None and not kept):
                built = None  # empty element, or a node that only dominated empty elements
            else:
                built = ParseTree(label, kept, token, TokenSpan(0, 0))
            if stack:
                stack[-1][1].append(built)
            else:
                if built is None:
                    raise EmptyTree("tree has no tokens")
                result = built
        else:
            if not stack:
                raise UnbalancedBrackets(pos, "token outside brackets")
            top = stack[-1]
            if top[2] is not None or top[1]:
                raise LeafWithChildren(f"node {top[0]!r} mixes tokens and children at position {pos}")
            top[2] = _ESCAPES.get(tok, tok)
            if i + 1 < len(tokens) and tokens[i + 1][1] != ")":
                raise LeafWithChildren(f"leaf {top[0]!r} has extra content at position {tokens[i + 1][0]}")
        i += 1
    if stack:
        raise UnbalancedBrackets(len(text), f"{len(stack)} unclosed bracket(s)")
    if result is None:
        raise EmptyTree("no tree in input")
    return reindex(result)


def escape_token(token: str) -> str:
    return _UNESCAPES.get(token, token)


def serialize(tree: ParseTree) -> str:
    if tree.is_leaf:
        return f"({tree.label} {escape_token(tree.token)})"
    return "(" + tree.label + " " + " ".join(serialize(c) for c in tree.children) + ")"


def read_trees(lines) -> list[ParseTree]:
    """One tree per non-blank line; lines starting with ``#`` are comments."""
    trees = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            trees.append(parse_bracketed(line))
        except TreeError as exc:
            raise TreeError(f"line {lineno}: {exc}") from exc
    return trees


def detokenize(tokens: Sequence[str]) -> str:
    """Readable sentence text; capitalizes the first word."""
    out = ""
    for tok in tokens:
        if not out:
            out = tok
        elif tok in {".", ",", ";", ":", "?", "!", "'s", "n't", "''", ")", "%"} or tok.startswith("'"):
            out += tok
        elif out.endswith(("(", "``", "$")):
            out += tok
        else:
            out += " " + tok
    out = out.replace("``", '"').replace("''", '"')
    return out[:1].upper() + out[1:]
