"""Independent reference implementations used to cross-check the library.

None of these import the code they check. They trade speed for obviousness.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

# -- tree-pattern reference matcher ------------------------------------------


@dataclass
class QNode:
    """A pattern node as generated by the tests (not the library's AST)."""

    cats: tuple | None  # None = wildcard
    negated: bool = False
    captures: tuple = ()
    rels: list = field(default_factory=list)  # (glyph, chain cats or None, QNode)

    def render(self) -> str:
        head = "__" if self.cats is None else "|".join(self.cats)
        if self.negated:
            head = "!" + head
        head += "".join(f"={c}" for c in self.captures)
        parts = [head]
        for glyph, chain, target in self.rels:
            op = glyph + (f"({'|'.join(chain)})" if chain else "")
            parts.append(f"{op} ({target.render()})" if target.rels else f"{op} {target.render()}")
        return " ".join(parts)

    def preorder(self):
        yield self
        for _, _, t in self.rels:
            yield from t.preorder()

    def edges(self):
        for glyph, chain, t in self.rels:
            yield self, glyph, chain, t
            yield from t.edges()


def bare(label: str) -> str:
    if label.startswith("-") and label.endswith("-"):
        return label
    cut = [i for i, ch in enumerate(label) if ch in "-=" and i > 0]
    return label[:cut[0]] if cut else label


def tree_nodes(tree):
    """(path, node) pairs in pre-order."""
    out = []

    def go(n, p):
        out.append((p, n))
        for i, c in enumerate(n.children):
            go(c, p + (i,))

    go(tree, ())
    return out


def holds(glyph, chain, a, b, at) -> bool:
    """Declarative truth of ``A glyph B`` over tree paths."""
    na = at[a]
    proper_desc = len(b) > len(a) and b[:len(a)] == a
    between = [b[:k] for k in range(len(a) + 1, len(b))]  # strictly between a and b
    if glyph == "<":
        return b[:-1] == a and len(b) == len(a) + 1
    if glyph == "<<":
        return proper_desc
    if glyph == "<:":
        return b[:-1] == a and len(b) == len(a) + 1 and len(na.children) == 1
    if glyph == "<<:":
        return proper_desc and all(len(at[p].children) == 1 for p in [a] + between)
    if glyph == "<,":
        return len(b) == len(a) + 1 and b[:-1] == a and b[-1] == 0
    if glyph == "<-":
        return len(b) == len(a) + 1 and b[:-1] == a and b[-1] == len(na.children) - 1
    if glyph == "<+":
        return proper_desc and all(bare(at[p].label) in chain for p in between)
    sisters = bool(a) and bool(b) and a[:-1] == b[:-1] and a != b
    if not sisters:
        return False
    if glyph == "$..":
        return at[a].span[1] <= at[b].span[0]
    if glyph == "$,,":
        return at[b].span[1] <= at[a].span[0]
    if glyph == "$+":
        return b[-1] == a[-1] + 1
    if glyph == "$-":
        return b[-1] == a[-1] - 1
    raise ValueError(glyph)


def label_ok(q: QNode, node) -> bool:
    hit = q.cats is None or bare(node.label) in q.cats
    return hit != q.negated


def brute_force_matches(q: QNode, tree):
    """For every anchor in pre-order: the lexicographically first satisfying
    assignment of pattern nodes (pattern pre-order) to tree nodes (tree pre-order).

    Returns [(anchor path, {capture: path})].
    """
    nodes = tree_nodes(tree)
    at = dict(nodes)
    order = list(q.preorder())
    parent_edge = {}
    for src, glyph, chain, tgt in q.edges():
        parent_edge[id(tgt)] = (src, glyph, chain)
    results = []
    for anchor, anode in nodes:
        if not label_ok(q, anode):
            continue
        found = _search(order, 1, {id(q): anchor}, parent_edge, nodes, at)
        if found is not None:
            caps = {c: found[id(pn)] for pn in order for c in pn.captures}
            results.append((anchor, caps))
    return results


def _search(order, k, assign, parent_edge, nodes, at):
    if k == len(order):
        return assign
    pn = order[k]
    src, glyph, chain = parent_edge[id(pn)]
    for path, node in nodes:
        if label_ok(pn, node) and holds(glyph, chain, assign[id(src)], path, at):
            got = _search(order, k + 1, {**assign, id(pn): path}, parent_edge, nodes, at)
            if got is not None:
                return got
    return None


GLYPHS = ["<", "<<", "<:", "<<:", "<,", "<-", "<+", "$..", "$+", "$,,", "$-"]
CATS = ["S", "NP", "VP", "PP", "DT", "NN", "VB", "IN"]


def random_tree(rng: random.Random, max_nodes: int = 12) -> str:
    """A random bracketed tree with at most ``max_nodes`` nodes."""
    budget = [rng.randint(3, max_nodes)]
    counter = [0]

    def word():
        counter[0] += 1
        return f"w{counter[0]}"

    def build(depth):
        budget[0] -= 1
        if depth >= 4 or budget[0] <= 1 or rng.random() < 0.3:
            return f"({rng.choice(['DT', 'NN', 'VB', 'IN'])} {word()})"
        kids = []
        for _ in range(rng.randint(1, 3)):
            if budget[0] <= 0:
                break
            kids.append(build(depth + 1))
        if not kids:
            return f"({rng.choice(['DT', 'NN', 'VB', 'IN'])} {word()})"
        return f"({rng.choice(['S', 'NP', 'VP', 'PP'])} {' '.join(kids)})"

    return build(0)


def random_pattern(rng: random.Random, max_ops: int = 4) -> QNode:
    n_ops = rng.randint(0, max_ops)
    caps = iter(f"c{i}" for i in range(20))

    def head():
        r = rng.random()
        cats = None if r < 0.55 else tuple(rng.sample(CATS, rng.choice([1, 1, 2])))
        negated = cats is not None and rng.random() < 0.15
        captures = () if negated else tuple(next(caps) for _ in range(rng.choice([0, 0, 1, 2])))
        return QNode(cats, negated, captures)

    root = head()
    pool = [root]
    for _ in range(n_ops):
        src = rng.choice(pool)
        glyph = rng.choice(GLYPHS)
        chain = tuple(rng.sample(CATS[:4], rng.randint(1, 2))) if glyph == "<+" else None
        tgt = head()
        src.rels.append((glyph, chain, tgt))
        pool.append(tgt)
    return root


# -- matching-blocks similarity ----------------------------------------------


def longest_common_block(a: str, b: str, alo: int, ahi: int, blo: int, bhi: int):
    """Longest common substring of a[alo:ahi] and b[blo:bhi]; ties go to the
    earliest start in a, then the earliest start in b."""
    best = (alo, blo, 0)
    for i in range(alo, ahi):
        for j in range(blo, bhi):
            k = 0
            while i + k < ahi and j + k < bhi and a[i + k] == b[j + k]:
                k += 1
            if k > best[2]:
                best = (i, j, k)
    return best


def matched_chars(a: str, b: str, alo=0, ahi=None, blo=0, bhi=None) -> int:
    ahi = len(a) if ahi is None else ahi
    bhi = len(b) if bhi is None else bhi
    i, j, k = longest_common_block(a, b, alo, ahi, blo, bhi)
    if k == 0:
        return 0
    return k + matched_chars(a, b, alo, i, blo, j) + matched_chars(a, b, i + k, ahi, j + k, bhi)


def oracle_ratio(a: str, b: str) -> float:
    total = len(a) + len(b)
    return 2.0 * matched_chars(a, b) / total if total else 1.0


# -- greedy alignment by repeated maximum ------------------------------------


def oracle_align(scores: list[list[float]], threshold: float):
    """Repeatedly take the best remaining (prop, edu) pair, lowest indices on ties."""
    free_p = set(range(len(scores)))
    free_e = set(range(len(scores[0]) if scores else 0))
    out = []
    while True:
        best = None
        for i in sorted(free_p):
            for j in sorted(free_e):
                s = scores[i][j]
                if s >= threshold and (best is None or s > best[0]):
                    best = (s, i, j)
        if best is None:
            return sorted((i, j) for _, i, j in out)
        out.append(best)
        free_p.discard(best[1])
        free_e.discard(best[2])
