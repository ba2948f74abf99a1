"""Faces of the permutoassociahedron and the map ``phi`` onto tree-faces.

A face is a rooted plane tree whose leaves carry the blocks of an ordered
partition of S minus the root label.  In code the plane tree is a nested
tuple (internal nodes, ordered, >= 2 children) whose leaves are frozensets
(blocks).  The whole polytope is the single block S - {r}.

Bracketing text uses set literals, e.g. ``(({3},{4,5}),{2},{1,6,7})``; the
outermost parentheses stand for the root node, and ``({1,2,3})`` is the
single-block top face.

Faces are compared as plane objects (reflections are different faces); only
``phi`` forgets the plane structure.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter, deque
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import lru_cache

from .trees import PhyloTree, to_newick

__all__ = [
    "BracketingError",
    "KPFace",
    "covering_moves",
    "enumerate_kp_faces",
    "enumerate_kp_vertices",
    "fiber_sizes",
    "is_refinement",
    "parse_bracketing",
    "phi",
    "phi_fibers",
]


class BracketingError(ValueError):
    pass


def _elements(node) -> frozenset[int]:
    if isinstance(node, frozenset):
        return node
    return frozenset().union(*(_elements(c) for c in node))


def _count_internal(node) -> int:
    if isinstance(node, frozenset):
        return 0
    return 1 + sum(_count_internal(c) for c in node)


def _render(node) -> str:
    if isinstance(node, frozenset):
        return "{" + ",".join(map(str, sorted(node))) + "}"
    return "(" + ",".join(_render(c) for c in node) + ")"


@dataclass(frozen=True)
class KPFace:
    root: int
    tree: object

    def __post_init__(self):
        seen: set[int] = set()

        def check(node, top):
            if isinstance(node, frozenset):
                if not node:
                    raise BracketingError("empty block")
                if seen & node:
                    raise BracketingError(f"element(s) {sorted(seen & node)} repeated")
                seen.update(node)
                return
            if not isinstance(node, tuple):
                raise BracketingError(f"bad node {node!r}")
            if len(node) < 2:
                raise BracketingError("unary bracket")
            for c in node:
                check(c, False)

        check(self.tree, True)
        if self.root in seen:
            raise BracketingError(f"root label {self.root} also appears in a block")
        if len(seen) < 2:
            raise BracketingError("need at least two non-root elements")

    @property
    def elements(self) -> frozenset[int]:
        return _elements(self.tree)

    @property
    def labels(self) -> frozenset[int]:
        return self.elements | {self.root}

    @property
    def m(self) -> int:
        return len(self.elements)

    @property
    def dim(self) -> int:
        return self.m - 1 - _count_internal(self.tree)

    def blocks(self) -> list[frozenset[int]]:
        out = []

        def walk(node):
            if isinstance(node, frozenset):
                out.append(node)
            else:
                for c in node:
                    walk(c)

        walk(self.tree)
        return out

    def is_vertex(self) -> bool:
        return self.dim == 0

    def render(self) -> str:
        if isinstance(self.tree, frozenset):
            return "(" + _render(self.tree) + ")"
        return _render(self.tree)

    __str__ = render

    def to_json(self) -> dict:
        blocks = self.blocks()
        index = iter(range(len(blocks)))

        def shape(node):
            if isinstance(node, frozenset):
                return next(index)
            return [shape(c) for c in node]

        return {"root": self.root, "tree": shape(self.tree), "blocks": [sorted(b) for b in blocks]}

    @classmethod
    def from_json(cls, data: dict) -> KPFace:
        blocks = [frozenset(b) for b in data["blocks"]]

        def build(node):
            if isinstance(node, int):
                return blocks[node]
            return tuple(build(c) for c in node)

        return cls(int(data["root"]), build(data["tree"]))


_TOKEN = re.compile(r"\s*(?:(\d+)|(.))")


def parse_bracketing(text: str, root_label: int | None = None) -> KPFace:
    """Parse a bracketed ordered partition; the root label defaults to max + 1."""
    tokens = []
    for m in _TOKEN.finditer(text):
        if m.group(1) is not None:
            tokens.append(("int", int(m.group(1)), m.start(1)))
        elif m.group(2) is not None:
            tokens.append((m.group(2), None, m.start(2)))
    tokens.append(("end", None, len(text)))
    pos = 0

    def expect(kind):
        nonlocal pos
        tok = tokens[pos]
        if tok[0] != kind:
            raise BracketingError(f"expected {kind!r} at position {tok[2]}")
        pos += 1
        return tok

    def block():
        nonlocal pos
        expect("{")
        items = [expect("int")[1]]
        while tokens[pos][0] == ",":
            pos += 1
            items.append(expect("int")[1])
        end = expect("}")
        if len(set(items)) != len(items):
            raise BracketingError(f"repeated element in block ending at position {end[2]}")
        return frozenset(items)

    def item():
        tok = tokens[pos]
        if tok[0] == "{":
            return block()
        if tok[0] == "(":
            return group(top=False)
        raise BracketingError(f"unexpected {tok[0]!r} at position {tok[2]}")

    def group(top):
        nonlocal pos
        start = expect("(")[2]
        children = [item()]
        while tokens[pos][0] == ",":
            pos += 1
            children.append(item())
        expect(")")
        if len(children) == 1:
            if top and isinstance(children[0], frozenset):
                return children[0]
            raise BracketingError(f"unary bracket at position {start}")
        return tuple(children)

    if tokens[0][0] == "{":
        tree = block()
    else:
        tree = group(top=True)
    if tokens[pos][0] != "end":
        raise BracketingError(f"trailing input at position {tokens[pos][2]}")
    if root_label is None:
        root_label = max(_elements(tree)) + 1
    return KPFace(root_label, tree)


# -- phi ---------------------------------------------------------------------------

def phi(f: KPFace) -> PhyloTree:
    """Blow each block up into a corolla, hang the root label off the root,
    and forget the plane embedding."""
    edges = []
    fresh = itertools.count(0, -1)

    def build(node) -> int:
        if isinstance(node, frozenset) and len(node) == 1:
            return next(iter(node))
        v = next(fresh)
        kids = sorted(node) if isinstance(node, frozenset) else node
        for c in kids:
            edges.append((v, c if isinstance(node, frozenset) else build(c)))
        return v

    top = build(f.tree)
    edges.append((top, f.root))
    return PhyloTree(edges)


# -- covering relations ----------------------------------------------------------

def _ordered_partitions(elems: tuple[int, ...]) -> Iterator[tuple[frozenset[int], ...]]:
    if not elems:
        yield ()
        return
    for r in range(1, len(elems) + 1):
        for first in itertools.combinations(elems, r):
            rest = tuple(e for e in elems if e not in first)
            for tail in _ordered_partitions(rest):
                yield (frozenset(first),) + tail


def _node_moves(node) -> Iterator[object]:
    if isinstance(node, frozenset):
        if len(node) >= 2:
            for part in _ordered_partitions(tuple(sorted(node))):
                if len(part) >= 2:
                    yield part
        return
    k = len(node)
    for i in range(k):
        for j in range(i + 2, k + 1):
            if j - i < k:
                yield node[:i] + (node[i:j],) + node[j:]
    for idx, child in enumerate(node):
        for new in _node_moves(child):
            yield node[:idx] + (new,) + node[idx + 1:]


def covering_moves(f: KPFace) -> list[KPFace]:
    """Faces covered by ``f``: insert one bracket around a contiguous run of
    siblings, or subdivide one block into an ordered corolla of blocks."""
    return [KPFace(f.root, t) for t in _node_moves(f.tree)]


def _match(s, c) -> bool:
    if _elements(s) != _elements(c):
        return False
    if isinstance(c, frozenset):
        return True
    if isinstance(s, frozenset):
        return False
    queue = deque(s)
    for ci in c:
        target = _elements(ci)
        while True:
            if not queue:
                return False
            q = queue.popleft()
            eq = _elements(q)
            if eq == target:
                if not _match(q, ci):
                    return False
                break
            if target < eq and isinstance(q, tuple):
                queue.extendleft(reversed(q))
                continue
            return False
    return not queue


def is_refinement(f1: KPFace, f2: KPFace) -> bool:
    """True iff f1 <= f2 in the face order (f1 is a face of f2).

    f2 must arise from f1 by erasing non-root brackets and merging whole
    subtrees into single blocks; the check walks both trees top-down.
    """
    if f1.root != f2.root or f1.elements != f2.elements:
        raise ValueError("faces are over different label sets or roots")
    return _match(f1.tree, f2.tree)


# -- enumeration --------------------------------------------------------------------

def _split_root(labels: Iterable[int], root_label: int | None) -> tuple[tuple[int, ...], int]:
    labels = sorted(set(labels))
    if root_label is None:
        root_label = labels[-1]
    if root_label not in labels:
        raise ValueError(f"root label {root_label} is not in S")
    rest = tuple(x for x in labels if x != root_label)
    if len(rest) < 2:
        raise ValueError("need |S - {r}| >= 2")
    return rest, root_label


@lru_cache(maxsize=None)
def _bracketings(k: int) -> tuple:
    """All binary plane trees on leaf positions 0..k-1."""
    if k == 1:
        return (0,)
    out = []
    for i in range(1, k):
        for left in _bracketings(i):
            for right in _bracketings(k - i):
                out.append((left, _shift(right, i)))
    return tuple(out)


def _shift(shape, by):
    if isinstance(shape, int):
        return shape + by
    return tuple(_shift(c, by) for c in shape)


def _fill(shape, perm):
    if isinstance(shape, int):
        return frozenset((perm[shape],))
    return tuple(_fill(c, perm) for c in shape)


def enumerate_kp_vertices(S: Iterable[int], root_label: int | None = None) -> Iterator[KPFace]:
    """All vertices (binary, singleton blocks): Catalan(m-1) * m! of them."""
    rest, r = _split_root(S, root_label)
    shapes = _bracketings(len(rest))
    for perm in itertools.permutations(rest):
        for shape in shapes:
            yield KPFace(r, _fill(shape, perm))


def enumerate_kp_faces(S: Iterable[int], root_label: int | None = None, *, max_m: int | None = 4) -> list[KPFace]:
    """Every face, found by closing the top face under covering moves."""
    rest, r = _split_root(S, root_label)
    if max_m is not None and len(rest) > max_m:
        raise ValueError(f"full face enumeration is limited to m <= {max_m}")
    top = KPFace(r, frozenset(rest))
    seen = {top}
    queue = deque([top])
    while queue:
        for g in covering_moves(queue.popleft()):
            if g not in seen:
                seen.add(g)
                queue.append(g)
    return sorted(seen, key=lambda f: (-f.dim, f.render()))


def phi_fibers(S: Iterable[int], root_label: int | None = None, *, max_m: int | None = 7) -> dict[PhyloTree, list[KPFace]]:
    """Group the vertices of KP by their image under phi."""
    rest, r = _split_root(S, root_label)
    if max_m is not None and len(rest) > max_m:
        raise ValueError(f"fiber enumeration is limited to m <= {max_m}")
    out: dict[PhyloTree, list[KPFace]] = {}
    for f in enumerate_kp_vertices(rest + (r,), r):
        out.setdefault(phi(f), []).append(f)
    return out


def fiber_sizes(S: Iterable[int], root_label: int | None = None, *, max_m: int | None = 7) -> Counter:
    """Canonical Newick of each phi-image -> number of vertices mapping there."""
    rest, r = _split_root(S, root_label)
    if max_m is not None and len(rest) > max_m:
        raise ValueError(f"fiber enumeration is limited to m <= {max_m}")
    return Counter(to_newick(phi(f)) for f in enumerate_kp_vertices(rest + (r,), r))
