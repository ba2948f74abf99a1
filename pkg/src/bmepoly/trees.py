"""Unrooted leaf-labelled phylogenetic trees.

Leaves are positive integers; internal nodes are negative integers.  A tree
is immutable once built, and two trees compare equal when they have the same
leaf set and display the same splits (no degree-2 nodes are ever present, so
that determines the topology).

Canonical Newick
----------------
``to_newick`` roots the tree at the internal neighbour of the smallest leaf
and orders the children of every node by their smallest descendant leaf.
The smallest leaf is therefore always printed first, e.g. the quartet with
cherries {1,2} and {3,4} prints as ``(1,2,(3,4));``.  Two trees are
isomorphic (as leaf-labelled trees) iff their canonical strings coincide.
"""

from __future__ import annotations

import itertools
import warnings
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass

__all__ = [
    "NewickError",
    "PhyloTree",
    "Split",
    "cherries",
    "contract_clade",
    "displays",
    "enumerate_binary_trees",
    "expansions",
    "graft_clades",
    "is_caterpillar",
    "parse_newick",
    "random_binary_tree",
    "refines",
    "relabel",
    "splits_of",
    "to_newick",
]


class NewickError(ValueError):
    """Malformed Newick input; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class Split:
    """Bipartition of a leaf set.

    ``side`` is the part that does not contain the smallest leaf, so the two
    orientations of a split share one representation.
    """

    side: frozenset[int]
    leaves: frozenset[int]

    def __post_init__(self):
        if not self.side or not self.side < self.leaves:
            raise ValueError("a split needs two nonempty parts")
        if min(self.leaves) in self.side:
            object.__setattr__(self, "side", self.leaves - self.side)

    @classmethod
    def of(cls, part: Iterable[int], leaves: Iterable[int]) -> Split:
        return cls(frozenset(part), frozenset(leaves))

    @property
    def other(self) -> frozenset[int]:
        return self.leaves - self.side

    @property
    def parts(self) -> tuple[frozenset[int], frozenset[int]]:
        return self.other, self.side

    @property
    def sizes(self) -> tuple[int, int]:
        a, b = len(self.side), len(self.leaves) - len(self.side)
        return (min(a, b), max(a, b))

    @property
    def smaller(self) -> frozenset[int]:
        """The smaller part; on a tie, the part holding the smallest leaf."""
        side, other = self.side, self.other
        return side if len(side) < len(other) else other

    def is_trivial(self) -> bool:
        return min(self.sizes) < 2

    def __str__(self) -> str:
        fmt = lambda s: "{" + ",".join(map(str, sorted(s))) + "}"
        return f"{fmt(self.other)}|{fmt(self.side)}"


class PhyloTree:
    """Immutable unrooted phylogenetic tree.

    Build from an edge list over leaf nodes (positive ints, degree 1) and
    internal nodes (non-positive ints, degree >= 3).
    """

    __slots__ = ("_adj", "_leaves", "_splits", "_newick")

    def __init__(self, edges: Iterable[tuple[int, int]], *, _trusted: bool = False):
        adj: dict[int, list[int]] = {}
        for u, v in edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        self._adj = {k: tuple(sorted(v)) for k, v in adj.items()}
        self._leaves = tuple(sorted(k for k in adj if k > 0))
        self._splits = None
        self._newick = None
        if not _trusted:
            self._validate()

    def _validate(self):
        adj = self._adj
        if len(self._leaves) < 3:
            raise ValueError("a phylogenetic tree needs at least 3 leaves")
        n_edges = sum(len(v) for v in adj.values()) // 2
        if n_edges != len(adj) - 1:
            raise ValueError("edge list does not describe a tree")
        for node, nbrs in adj.items():
            if len(set(nbrs)) != len(nbrs) or node in nbrs:
                raise ValueError(f"repeated edge or loop at node {node}")
            if node > 0 and len(nbrs) != 1:
                raise ValueError(f"leaf {node} has degree {len(nbrs)}")
            if node <= 0 and len(nbrs) < 3:
                raise ValueError(f"internal node {node} has degree {len(nbrs)}")
        seen = {self._leaves[0]}
        stack = [self._leaves[0]]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(adj):
            raise ValueError("edge list is disconnected")

    # -- construction -------------------------------------------------------

    @classmethod
    def star(cls, leaves: Iterable[int]) -> PhyloTree:
        return cls([(0, leaf) for leaf in leaves])

    @classmethod
    def from_splits(cls, leaves: Iterable[int], splits: Iterable[Split]) -> PhyloTree:
        """Build the tree displaying exactly the given (compatible) splits."""
        leaves = frozenset(leaves)
        root_leaf = min(leaves)
        clusters = {s.side for s in splits if not s.is_trivial()}
        for c in clusters:
            if root_leaf in c or not c < leaves:
                raise ValueError("split does not match the leaf set")
        ordered = sorted(clusters, key=len)
        for a, b in itertools.combinations(ordered, 2):
            if a & b and not a <= b:
                raise ValueError("splits are not pairwise compatible")
        node_of = {c: -(i + 1) for i, c in enumerate(ordered)}
        edges = []
        for i, c in enumerate(ordered):
            parent = next((p for p in ordered[i + 1:] if c < p), None)
            edges.append((node_of[parent] if parent else 0, node_of[c]))
        for leaf in leaves:
            if leaf == root_leaf:
                edges.append((0, leaf))
                continue
            parent = next((c for c in ordered if leaf in c), None)
            edges.append((node_of[parent] if parent else 0, leaf))
        return cls(edges)

    # -- basic queries --------------------------------------------------------

    @property
    def leaves(self) -> tuple[int, ...]:
        return self._leaves

    @property
    def n(self) -> int:
        return len(self._leaves)

    @property
    def internal_nodes(self) -> tuple[int, ...]:
        return tuple(sorted(k for k in self._adj if k <= 0))

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted((u, v) for u, nb in self._adj.items() for v in nb if u < v))

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self._adj[node]

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def is_binary(self) -> bool:
        return all(len(v) == 3 for k, v in self._adj.items() if k <= 0)

    def path_nodes(self, a: int, b: int) -> list[int]:
        """Nodes on the a-b path, endpoints included."""
        parent = {a: None}
        stack = [a]
        while stack:
            u = stack.pop()
            if u == b:
                break
            for w in self._adj[u]:
                if w not in parent:
                    parent[w] = u
                    stack.append(w)
        path = [b]
        while path[-1] != a:
            path.append(parent[path[-1]])
        return path[::-1]

    def _rooted(self, root: int):
        """Parent map and preorder list with the given root."""
        parent = {root: None}
        order = [root]
        i = 0
        while i < len(order):
            u = order[i]
            i += 1
            for w in self._adj[u]:
                if w != parent[u]:
                    parent[w] = u
                    order.append(w)
        return parent, order

    def _below(self, root: int) -> tuple[dict, dict[int, frozenset[int]]]:
        parent, order = self._rooted(root)
        below: dict[int, frozenset[int]] = {}
        for u in reversed(order):
            if u > 0 and u != root:
                below[u] = frozenset((u,))
            else:
                below[u] = frozenset().union(
                    *(below[w] for w in self._adj[u] if w != parent[u])
                )
        return parent, below

    @property
    def splits(self) -> frozenset[Split]:
        if self._splits is None:
            r = self._leaves[0]
            parent, below = self._below(r)
            leaves = frozenset(self._leaves)
            self._splits = frozenset(
                Split(below[v], leaves)
                for v, p in parent.items()
                if v <= 0 and p is not None and p <= 0
            )
        return self._splits

    def __eq__(self, other):
        if not isinstance(other, PhyloTree):
            return NotImplemented
        return self._leaves == other._leaves and self.splits == other.splits

    def __hash__(self):
        return hash((self._leaves, self.splits))

    def __repr__(self):
        return f"PhyloTree({to_newick(self)!r})"


# -- Newick ----------------------------------------------------------------

_DELIMS = set("(),:;[]'")


def _tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "[":
            j = text.find("]", i)
            if j < 0:
                raise NewickError("unterminated comment", i)
            i = j + 1
        elif c == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise NewickError("unterminated quoted label", i)
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            yield ("label", "".join(buf), i)
            i = j + 1
        elif c in "(),:;":
            yield (c, c, i)
            i += 1
        else:
            j = i
            while j < n and text[j] not in _DELIMS and not text[j].isspace():
                j += 1
            yield ("label", text[i:j], i)
            i = j
    yield ("end", "", n)


def parse_newick(text: str, names: Mapping[str, int] | None = None) -> PhyloTree:
    """Parse a Newick string into an unrooted topology.

    Leaf labels must be integers unless ``names`` maps them to integers.
    Branch lengths and internal node labels are read and dropped (with a
    warning); a degree-2 root is suppressed.
    """
    tokens = list(_tokenize(text))
    pos = 0
    edges: list[tuple[int, int]] = []
    leaf_pos: dict[int, int] = {}
    counter = itertools.count(1)
    dropped = []

    def peek():
        return tokens[pos]

    def take(kind):
        nonlocal pos
        tok = tokens[pos]
        if tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            if kind == ")" and tok[0] in ("end", ";"):
                raise NewickError("unbalanced parentheses: missing ')'", tok[2])
            raise NewickError(f"expected {kind!r}, found {what}", tok[2])
        pos += 1
        return tok

    def leaf_label(tok):
        raw = tok[1]
        if names is not None and raw in names:
            label = names[raw]
        else:
            try:
                label = int(raw)
            except ValueError:
                raise NewickError(f"leaf label {raw!r} is not an integer", tok[2]) from None
        if label < 1:
            raise NewickError(f"leaf label {label} must be positive", tok[2])
        if label in leaf_pos:
            raise NewickError(f"duplicate leaf label {label}", tok[2])
        leaf_pos[label] = tok[2]
        return label

    def trailer(is_leaf_label: bool):
        nonlocal pos
        if not is_leaf_label and peek()[0] == "label":
            dropped.append("internal label")
            pos += 1
        if peek()[0] == ":":
            pos += 1
            tok = take("label")
            try:
                float(tok[1])
            except ValueError:
                raise NewickError(f"bad branch length {tok[1]!r}", tok[2]) from None
            dropped.append("branch length")

    def subtree(is_root: bool) -> int:
        nonlocal pos
        tok = peek()
        if tok[0] == "(":
            start = tok[2]
            pos += 1
            children = [subtree(False)]
            while peek()[0] == ",":
                pos += 1
                children.append(subtree(False))
            take(")")
            trailer(False)
            if len(children) == 1:
                raise NewickError("internal node with a single child (degree 2)", start)
            if is_root and len(children) == 2:
                return _join_root(children)
            node = -next(counter)
            edges.extend((node, c) for c in children)
            return node
        if tok[0] == "label":
            pos += 1
            label = leaf_label(tok)
            trailer(True)
            return label
        if tok[0] in (",", ")", ";", "end"):
            raise NewickError("missing leaf label", tok[2])
        raise NewickError(f"unexpected {tok[1]!r}", tok[2])

    def _join_root(children):
        a, b = children
        if a > 0 and b > 0:
            raise NewickError("tree has fewer than 3 leaves", 0)
        edges.append((a, b))
        return min(a, b)

    if peek()[0] == "end":
        raise NewickError("empty Newick string", 0)
    root = subtree(True)
    tok = peek()
    if tok[0] == ")":
        raise NewickError("unbalanced parentheses: unexpected ')'", tok[2])
    take(";")
    if peek()[0] != "end":
        raise NewickError("trailing characters after ';'", peek()[2])
    if root > 0:
        raise NewickError("a single leaf is not a tree", 0)
    if len(leaf_pos) < 3:
        raise NewickError("tree has fewer than 3 leaves", 0)
    if dropped:
        kinds = ", ".join(sorted(set(dropped)))
        warnings.warn(f"Newick {kinds} ignored; only the topology is kept", stacklevel=2)
    return PhyloTree(edges)


def _quote(name: str) -> str:
    if any(c in _DELIMS or c.isspace() for c in name):
        return "'" + name.replace("'", "''") + "'"
    return name


def to_newick(t: PhyloTree, names: Mapping[int, str] | None = None) -> str:
    """Canonical Newick string (see module docstring for the convention)."""
    if names is None and t._newick is not None:
        return t._newick
    adj = t._adj
    first = t.leaves[0]
    root = adj[first][0]

    def render(u, parent):
        if u > 0:
            return u, _quote(names[u]) if names else str(u)
        parts = sorted(render(w, u) for w in adj[u] if w != parent)
        return parts[0][0], "(" + ",".join(s for _, s in parts) + ")"

    text = render(root, None)[1] + ";"
    if names is None:
        t._newick = text
    return text


# -- enumeration -------------------------------------------------------------

def _check_n(n: int):
    if n < 3:
        raise ValueError(f"need n >= 3 leaves, got {n}")


def _insertions(n: int) -> Iterator[list[tuple[int, int]]]:
    """Edge lists of all binary trees on 1..n in leaf-insertion order."""
    edges = [(0, 1), (0, 2), (0, 3)]

    def grow(edges, k):
        if k > n:
            yield edges
            return
        w = -(k - 3)
        for i, (u, v) in enumerate(edges):
            new = edges[:i] + [(u, w)] + edges[i + 1:] + [(w, v), (w, k)]
            yield from grow(new, k + 1)

    yield from grow(edges, 4)


def enumerate_binary_trees(n: int) -> Iterator[PhyloTree]:
    """Yield every binary tree on leaves 1..n exactly once ((2n-5)!! trees).

    Leaf k is inserted on each edge of each (k-1)-leaf tree, with edges
    taken in the order they were created, so the stream is reproducible.
    """
    _check_n(n)
    for edges in _insertions(n):
        yield PhyloTree(edges, _trusted=True)


def random_binary_tree(n: int, rng) -> PhyloTree:
    """Binary tree on 1..n by inserting leaves 4..n on uniformly chosen edges.

    ``rng`` is a ``random.Random``; every topology is equally likely.
    """
    _check_n(n)
    edges = [(0, 1), (0, 2), (0, 3)]
    for k in range(4, n + 1):
        i = rng.randrange(len(edges))
        u, v = edges[i]
        w = -(k - 3)
        edges[i] = (u, w)
        edges += [(w, v), (w, k)]
    return PhyloTree(edges, _trusted=True)


def relabel(t: PhyloTree, mapping: Mapping[int, int]) -> PhyloTree:
    """Rename leaves; labels missing from ``mapping`` are kept."""
    def f(u):
        return mapping.get(u, u) if u > 0 else u

    return PhyloTree([(f(u), f(v)) for u, v in t.edges])


# -- split / cherry queries -----------------------------------------------------

def splits_of(t: PhyloTree) -> frozenset[Split]:
    """Splits induced by the internal edges of ``t``."""
    return t.splits


def _same_leaves(a: Iterable[int], b: Iterable[int], what: str):
    if frozenset(a) != frozenset(b):
        raise ValueError(f"leaf-set mismatch between {what}")


def displays(t: PhyloTree, s: Split) -> bool:
    _same_leaves(t.leaves, s.leaves, "tree and split")
    return s in t.splits


def cherries(t: PhyloTree) -> list[tuple[int, int]]:
    """All leaf pairs that share a neighbour, sorted."""
    out = []
    for node in t.internal_nodes:
        kids = sorted(w for w in t.neighbors(node) if w > 0)
        out.extend(itertools.combinations(kids, 2))
    return sorted(out)


def is_caterpillar(t: PhyloTree) -> tuple[tuple[int, int], tuple[int, int]] | None:
    """The two end cherries if ``t`` is a caterpillar, else None."""
    if not t.is_binary():
        raise ValueError("is_caterpillar needs a binary tree")
    ch = cherries(t)
    if len(ch) == 2:
        return ch[0], ch[1]
    return None


def refines(tb: PhyloTree, t: PhyloTree) -> bool:
    """True iff binary ``tb`` displays every split of ``t``."""
    _same_leaves(tb.leaves, t.leaves, "trees")
    if not tb.is_binary():
        raise ValueError("refines expects a binary first argument")
    return t.splits <= tb.splits


def expansions(t: PhyloTree) -> list[PhyloTree]:
    """Trees obtained by expanding one node of degree > 3 into an edge."""
    out = set()
    leaves = frozenset(t.leaves)
    for node in t.internal_nodes:
        nbrs = t.neighbors(node)
        if len(nbrs) < 4:
            continue
        parent, below = t._below(node)
        sets = [below[w] for w in nbrs]
        first, rest = sets[0], sets[1:]
        # groups containing the first neighbour, each side >= 2 neighbours
        for r in range(1, len(rest) - 1):
            for combo in itertools.combinations(rest, r):
                side = first.union(*combo)
                out.add(PhyloTree.from_splits(leaves, t.splits | {Split(side, leaves)}))
    return sorted(out, key=to_newick)


def contract_clade(t: PhyloTree, clade: Iterable[int], new_label: int) -> PhyloTree:
    """Replace a displayed clade (at least 2 leaves) by the single leaf ``new_label``."""
    clade = frozenset(clade)
    if len(clade) < 2:
        raise ValueError("a clade needs at least 2 leaves")
    rest = frozenset(t.leaves) - clade
    if new_label in rest or new_label < 1:
        raise ValueError(f"label {new_label} is unusable for the contracted clade")
    if len(rest) < 2:
        raise ValueError("contraction would leave fewer than 3 leaves")
    root = min(rest)
    parent, below = t._below(root)
    anchor = next((v for v, s in below.items() if s == clade and v != root), None)
    if anchor is None:
        raise ValueError(f"{sorted(clade)} is not a clade of {to_newick(t)}")
    _, order = t._rooted(root)
    drop = set()
    for u in order:
        if u == anchor or parent[u] in drop:
            drop.add(u)
    edges = [(u, v) for u, v in t.edges if u not in drop and v not in drop]
    edges.append((parent[anchor], new_label))
    return PhyloTree(edges)


def graft_clades(t: PhyloTree, clades: Mapping[int, object]) -> PhyloTree:
    """Replace leaves by rooted subtrees.

    ``clades[leaf]`` is a nested tuple of labels, e.g. ``(4, (5, 6))``; a
    bare int just relabels the leaf.
    """
    edges = [e for e in t.edges]
    fresh = itertools.count(min(t.internal_nodes) - 1, -1)

    def build(node, attach, out):
        if isinstance(node, int):
            out.append((attach, node))
            return
        if len(node) < 2:
            raise ValueError("clade nodes need at least two children")
        inner = next(fresh)
        out.append((attach, inner))
        for child in node:
            build(child, inner, out)

    result = []
    for u, v in edges:
        if v in clades:
            build(clades[v], u, result)
        elif u in clades:
            build(clades[u], v, result)
        else:
            result.append((u, v))
    return PhyloTree(result)
