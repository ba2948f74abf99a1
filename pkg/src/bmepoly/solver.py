"""BME tree reconstruction.

Four routes to the tree minimising ``d . x(t)``:

* ``solve_exhaustive`` scans every binary tree (the oracle);
* ``solve_nj`` is neighbour joining (greedy, not always optimal);
* ``solve_bnb`` runs branch-and-bound with exact LP bounds over the
  splitohedron, branching on cherries;
* ``certify_splitohedron_vertex`` checks that a tree is a vertex of the
  relaxation, which is what lets the LP close nodes integrally.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, lcm
from typing import NamedTuple

import numpy as np

from . import linalg
from .coords import CoordVector, _exact, dot, pair_index, pairs, tree_from_x, x_vector
from .distances import DistanceMatrix
from .facets import (
    LinearInequality,
    cherry_cladeface,
    kraft_equalities,
    splitohedron_catalog,
    vertex_table,
)
from .lp import LPProblem, lp_min
from .trees import PhyloTree, cherries, enumerate_binary_trees, graft_clades, is_caterpillar, to_newick

__all__ = [
    "BnbCertificate",
    "Optimum",
    "certify_splitohedron_vertex",
    "reduce_on_cherry",
    "solve_bnb",
    "solve_exhaustive",
    "solve_nj",
]

log = logging.getLogger(__name__)

EXHAUSTIVE_MAX_N = 10


class Optimum(NamedTuple):
    tree: PhyloTree
    value: Fraction
    ties: list[PhyloTree]


# -- exhaustive oracle -----------------------------------------------------------

@lru_cache(maxsize=None)
def _vertex_arrays(n: int) -> tuple[tuple[PhyloTree, ...], np.ndarray]:
    trees, rows = [], []
    for t, x in vertex_table(n):
        trees.append(t)
        rows.append(x.entries)
    return tuple(trees), np.array(rows, dtype=np.int64)


def _integer_objective(entries: Iterable) -> tuple[list[int], int]:
    fr = [Fraction(e) for e in entries]
    scale = lcm(*(f.denominator for f in fr)) if fr else 1
    return [int(f * scale) for f in fr], scale


def _tree_values(n: int, entries: Iterable) -> tuple[tuple[PhyloTree, ...], np.ndarray, int]:
    """All trees at n with their (scaled integer) objective values."""
    ints, scale = _integer_objective(entries)
    trees, X = _vertex_arrays(n)
    bound = max((abs(v) for v in ints), default=0) * (1 << max(n - 3, 0)) * comb(n, 2)
    if bound < 2**62:
        vals = X @ np.array(ints, dtype=np.int64)
    else:
        vals = X.astype(object) @ np.array(ints, dtype=object)
    return trees, vals, scale


def _best_trees(n: int, entries, forbidden: Iterable[tuple[int, int]] = ()):
    """Minimum value and minimisers among trees avoiding the given cherries."""
    trees, vals, scale = _tree_values(n, entries)
    mask = np.ones(len(trees), dtype=bool)
    if n >= 4:
        _, X = _vertex_arrays(n)
        top = 1 << (n - 3)
        for a, b in forbidden:
            mask &= X[:, pair_index(a, b, n)] != top
    if not mask.any():
        return None, []
    allowed = np.flatnonzero(mask)
    best = min(vals[i] for i in allowed)
    winners = sorted((trees[i] for i in allowed if vals[i] == best), key=to_newick)
    return _exact(Fraction(int(best), scale)), winners


def solve_exhaustive(d: DistanceMatrix, *, max_n: int | None = EXHAUSTIVE_MAX_N) -> Optimum:
    """Minimise d . x(t) by scanning all (2n-5)!! binary trees.

    Ties are broken by canonical Newick; every tied tree is returned.
    """
    n = d.n
    if max_n is not None and n > max_n:
        raise ValueError(
            f"exhaustive search over {n} taxa exceeds the guard n <= {max_n}; use solve_bnb"
        )
    value, winners = _best_trees(n, d.entries)
    return Optimum(winners[0], value, winners)


# -- neighbour joining ------------------------------------------------------------

def solve_nj(d: DistanceMatrix) -> PhyloTree:
    """Neighbour-joining topology; ties in Q go to the lexicographically
    smallest pair of active nodes (original leaves before joined nodes)."""
    n = d.n
    if n == 3:
        return PhyloTree.star(range(1, 4))
    active = list(range(1, n + 1))
    dist: dict[tuple[int, int], Fraction] = {}
    for (i, j), e in zip(pairs(n), d.entries):
        dist[i, j] = dist[j, i] = Fraction(e)
    edges = []
    fresh = -1
    while len(active) > 3:
        r = len(active)
        totals = {u: sum(dist[u, v] for v in active if v != u) for u in active}
        best = None
        for ia, u in enumerate(active):
            for v in active[ia + 1:]:
                q = (r - 2) * dist[u, v] - totals[u] - totals[v]
                if best is None or q < best[0]:
                    best = (q, u, v)
        _, u, v = best
        w = fresh
        fresh -= 1
        edges += [(w, u), (w, v)]
        active = [k for k in active if k not in (u, v)]
        for k in active:
            dist[w, k] = dist[k, w] = (dist[u, k] + dist[v, k] - dist[u, v]) / 2
        active.append(w)
    edges += [(0, k) for k in active]
    return PhyloTree(edges)


# -- cherry reduction ------------------------------------------------------------

def cherry_relabel(n: int, a: int, b: int) -> dict[int, int]:
    """Old label -> new label after merging cherry {a, b}.

    The merged leaf takes the smaller label; labels above the larger one
    shift down by one.
    """
    a, b = sorted((a, b))
    out = {}
    for k in range(1, n + 1):
        if k == b:
            out[k] = a
        else:
            out[k] = k - 1 if k > b else k
    return out


def reduce_on_cherry(d: DistanceMatrix, a: int, b: int) -> tuple[DistanceMatrix, Fraction]:
    """Distances for the (n-1)-taxon problem with cherry {a, b} forced.

    For every tree t with cherry {a, b}, ``d . x(t) = offset + d' . x'(t')``
    where t' is t with the cherry collapsed onto the merged leaf.
    """
    n = d.n
    if a == b:
        raise ValueError("cherry needs two distinct leaves")
    if n < 5:
        raise ValueError("reduce_on_cherry needs n >= 5; evaluate the 3 quartet trees directly")
    a, b = sorted((a, b))
    relabel = cherry_relabel(n, a, b)
    values = {}
    for (i, j) in pairs(n):
        if {i, j} == {a, b}:
            continue
        ni, nj = relabel[i], relabel[j]
        key = (min(ni, nj), max(ni, nj))
        if a in (i, j) or b in (i, j):
            values[key] = values.get(key, 0) + d[i, j]
        else:
            values[key] = 2 * d[i, j]
    names = [None] * (n - 1)
    for k in range(1, n + 1):
        if k != b:
            names[relabel[k] - 1] = d.names[k - 1]
    names[a - 1] = f"({d.names[a - 1]},{d.names[b - 1]})"
    offset = _exact(Fraction(d[a, b]) * (1 << (n - 3)))
    return DistanceMatrix.from_pairs(n - 1, values, names), offset


# -- branch and bound ---------------------------------------------------------------

@dataclass
class BnbCertificate:
    tree: PhyloTree
    value_x: Fraction
    value_c: Fraction
    ties: list[PhyloTree]
    nodes: int
    log: list[dict] = field(default_factory=list)
    method: str = "bnb"

    def to_json(self, names=None) -> dict:
        return {
            "schema": "bmepoly.certificate/1",
            "method": self.method,
            "n": self.tree.n,
            "value_x": str(self.value_x),
            "value_c": str(self.value_c),
            "tree": to_newick(self.tree, names),
            "ties": [to_newick(t, names) for t in self.ties],
            "nodes": self.nodes,
            "log": self.log,
        }


@dataclass
class _Node:
    d: DistanceMatrix
    offset: Fraction
    clades: tuple  # clades[k-1] is the original-label structure under current leaf k
    forbidden: frozenset  # pairs (current labels) that may not form a cherry
    depth: int = 0
    parent: int | None = None
    bound: Fraction | None = None
    how: str = "root"


def _clade_str(node) -> str:
    if isinstance(node, int):
        return str(node)
    return "(" + ",".join(_clade_str(c) for c in node) + ")"


def _as_tree(n: int, current: PhyloTree, clades: tuple) -> PhyloTree:
    mapping = {k: clades[k - 1] for k in current.leaves}
    return graft_clades(current, mapping)


def _nearest_pow2_gap(v: Fraction, top: int) -> Fraction:
    gap = None
    p = 1
    while p <= top:
        g = abs(v - p)
        gap = g if gap is None or g < gap else gap
        p <<= 1
    return gap


def choose_branch_pair(point: CoordVector, forbidden: frozenset) -> tuple[int, int] | None:
    """Undecided pair whose LP value looks least like a tree coordinate.

    Pairs above 2^(n-4) come first (only there does the 'not a cherry'
    child cut off the current point); then farthest from a power of two,
    then largest value, then lexicographic.
    """
    n = point.n
    top = 1 << (n - 3)
    half = Fraction(top, 2)
    best, best_key = None, None
    for (i, j), v in point.items():
        if (i, j) in forbidden:
            continue
        v = Fraction(v)
        key = (not v > half, -_nearest_pow2_gap(v, top), -v, (i, j))
        if best_key is None or key < best_key:
            best, best_key = (i, j), key
    return best


def _node_problem(node: _Node) -> LPProblem:
    n = node.d.n
    cat = splitohedron_catalog(n)
    extra = [
        LinearInequality(n, (((a, b), 1),), "<=", 1 << (n - 4), "custom", ("not-cherry", a, b))
        for a, b in sorted(node.forbidden)
    ]
    return LPProblem(n, node.d.vector, list(cat.inequalities) + extra, list(cat.equalities))


def solve_bnb(d: DistanceMatrix, *, exhaustive_below: int = 7, incumbent: PhyloTree | None = None) -> BnbCertificate:
    """Provably optimal BME tree by LP-based branch-and-bound.

    Nodes with at most ``exhaustive_below`` current taxa are closed by
    enumeration; larger nodes get an exact LP bound over the splitohedron
    plus the node's branching constraints.  The left child of a branch on
    {a, b} forces that cherry (the problem shrinks by one taxon); the right
    child adds x_ab <= 2^(n-4).  The neighbour-joining tree seeds the
    incumbent.
    """
    n = d.n
    threshold = max(exhaustive_below, 4)
    scale_c = 1 << (n - 2)
    if n == 3:
        star = PhyloTree.star(range(1, 4))
        value = dot(d.vector, x_vector(star))
        return BnbCertificate(star, value, _exact(Fraction(value, 2)), [star], 1,
                              [{"id": 0, "outcome": "trivial", "n": 3}])

    start = incumbent if incumbent is not None else solve_nj(d)
    best_value = dot(d.vector, x_vector(start))
    best_trees = {start}
    entries: list[dict] = []
    stack = [_Node(d, Fraction(0), tuple(range(1, n + 1)), frozenset())]
    counter = 0

    def offer(value, trees):
        nonlocal best_value, best_trees
        if value < best_value:
            best_value, best_trees = value, set(trees)
        elif value == best_value:
            best_trees.update(trees)

    while stack:
        node = stack.pop()
        nid = counter
        counter += 1
        m = node.d.n
        rec = {"id": nid, "parent": node.parent, "depth": node.depth, "n": m, "branch": node.how}
        entries.append(rec)

        if m <= threshold:
            value, winners = _best_trees(m, node.d.entries, node.forbidden)
            if value is None:
                rec["outcome"] = "pruned:infeasible"
                continue
            total = node.offset + value
            rec["bound"] = str(_exact(total))
            rec["outcome"] = "exhaustive"
            offer(total, [_as_tree(n, t, node.clades) for t in winners])
            continue

        res = lp_min(_node_problem(node))
        rec["pivots"] = res.pivots
        if res.status != "optimal":
            rec["outcome"] = "pruned:infeasible"
            continue
        lp_bound = node.offset + res.optimum
        bound = lp_bound if node.bound is None else max(lp_bound, node.bound)
        rec["lp_bound"] = str(_exact(lp_bound))
        rec["bound"] = str(_exact(bound))
        if bound >= best_value:
            if bound == best_value:
                tree = tree_from_x(res.point)
                if tree is not None and lp_bound == bound:
                    offer(bound, [_as_tree(n, tree, node.clades)])
            rec["outcome"] = "pruned:bound"
            continue
        tree = tree_from_x(res.point)
        if tree is not None:
            rec["outcome"] = "integral"
            offer(lp_bound, [_as_tree(n, tree, node.clades)])
            continue
        pair = choose_branch_pair(res.point, node.forbidden)
        if pair is None:
            rec["outcome"] = "pruned:no-cherry"
            continue
        a, b = pair
        ca, cb = node.clades[a - 1], node.clades[b - 1]
        rec["outcome"] = "branched"
        rec["pair"] = [_clade_str(ca), _clade_str(cb)]
        rec["x_pair"] = str(res.point[a, b])

        right = _Node(node.d, node.offset, node.clades, node.forbidden | {(a, b)},
                      node.depth + 1, nid, bound, f"not-cherry {_clade_str(ca)},{_clade_str(cb)}")
        d2, off = reduce_on_cherry(node.d, a, b)
        relabel = cherry_relabel(m, a, b)
        clades = [None] * (m - 1)
        for k in range(1, m + 1):
            if k != b:
                clades[relabel[k] - 1] = node.clades[k - 1]
        clades[relabel[a] - 1] = (ca, cb)
        forbidden = frozenset(
            (min(relabel[i], relabel[j]), max(relabel[i], relabel[j]))
            for i, j in node.forbidden
            if not {i, j} & {a, b}
        )
        left = _Node(d2, node.offset + off, tuple(clades), forbidden,
                     node.depth + 1, nid, bound, f"cherry {_clade_str(ca)},{_clade_str(cb)}")
        stack.append(right)
        stack.append(left)

    ties = sorted(best_trees, key=to_newick)
    value = _exact(best_value)
    log.debug("bnb finished: %d nodes, value %s", counter, value)
    return BnbCertificate(ties[0], value, _exact(Fraction(value) / scale_c), ties, counter, entries)


# -- splitohedron vertex certificate -------------------------------------------------

@dataclass
class VertexReport:
    n: int
    cherries: int
    caterpillar: bool
    formula_count: int
    direct_count: int
    cherry_clade_tight: int
    dimension: int
    rank: int
    certified: bool
    tight: list[LinearInequality]
    witness: tuple[int, ...] | None = None

    @property
    def count_condition(self) -> bool:
        return self.formula_count >= self.dimension

    def to_json(self) -> dict:
        return {
            "schema": "bmepoly.vertex/1",
            "n": self.n,
            "cherries": self.cherries,
            "caterpillar": self.caterpillar,
            "formula_count": self.formula_count,
            "direct_count": self.direct_count,
            "cherry_clade_tight": self.cherry_clade_tight,
            "dimension": self.dimension,
            "count_condition": self.count_condition,
            "rank": self.rank,
            "ambient": comb(self.n, 2),
            "certified": self.certified,
            "witness": list(self.witness) if self.witness is not None else None,
        }


def certify_splitohedron_vertex(t: PhyloTree) -> VertexReport:
    """Incidence count and exact vertex certificate for x(t) in the splitohedron.

    ``formula_count`` is (2n-5)p + n - 3 (+4 for caterpillars);
    ``direct_count`` counts the tight caterpillar, intersecting-cherry and
    split inequalities of the catalog.  ``certified`` means the tight
    constraint normals together with the Kraft equalities have full rank
    C(n,2), i.e. x(t) is a vertex.  Otherwise ``witness`` is an integer
    direction v, orthogonal to every tight normal and to the Kraft rows,
    such that x(t) +/- eps*v stays in the splitohedron for small eps: an
    explicit proof that x(t) is not a vertex.
    """
    if not t.is_binary():
        raise ValueError("certify_splitohedron_vertex needs a binary tree")
    n = t.n
    if n < 4:
        raise ValueError("need n >= 4")
    x = x_vector(t)
    cat = splitohedron_catalog(n)
    tight = [q for q in cat.inequalities if q.is_tight(x)]
    p = len(cherries(t))
    cat_tree = is_caterpillar(t) is not None
    formula = (2 * n - 5) * p + n - 3 + (4 if cat_tree else 0)
    direct = sum(q.family != "cherry-clade" for q in tight)
    normals = [q.coeffs.entries for q in tight] + [q.coeffs.entries for q in cat.equalities]
    r = linalg.rank(normals)
    witness = None
    if r < comb(n, 2):
        witness = tuple(linalg.nullspace_vector(normals, comb(n, 2)))
    return VertexReport(
        n=n,
        cherries=p,
        caterpillar=cat_tree,
        formula_count=formula,
        direct_count=direct,
        cherry_clade_tight=len(tight) - direct,
        dimension=comb(n, 2) - n,
        rank=r,
        certified=r == comb(n, 2),
        tight=tight,
        witness=witness,
    )
