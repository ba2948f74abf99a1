"""Pauplin coordinates and other vectors indexed by leaf pairs.

Entries are ordered lexicographically by pair: (1,2), (1,3), ..., (1,n),
(2,3), ..., (n-1,n).  All arithmetic is exact (``int`` / ``Fraction``).
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

from .trees import PhyloTree, contract_clade, graft_clades

__all__ = [
    "CoordVector",
    "c_vector",
    "dot",
    "kraft_check",
    "pair_index",
    "pair_of",
    "pairs",
    "topo_distance_vector",
    "tree_from_x",
    "x_vector",
]


def pair_index(i: int, j: int, n: int) -> int:
    """0-based lexicographic rank of the pair (i, j), 1 <= i < j <= n."""
    if not (1 <= i < j <= n):
        raise ValueError(f"invalid pair ({i}, {j}) for n={n}")
    return (i - 1) * (2 * n - i) // 2 + (j - i - 1)


def pair_of(k: int, n: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index`."""
    if not 0 <= k < comb(n, 2):
        raise ValueError(f"index {k} out of range for n={n}")
    return pairs(n)[k]


@lru_cache(maxsize=None)
def pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1))


@dataclass(frozen=True)
class CoordVector:
    """A vector with one exact entry per leaf pair, in lexicographic order."""

    n: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != comb(self.n, 2):
            raise ValueError(
                f"expected {comb(self.n, 2)} entries for n={self.n}, got {len(self.entries)}"
            )

    @classmethod
    def from_pairs(cls, n: int, values: dict[tuple[int, int], object], default=0):
        return cls(n, tuple(values.get(p, default) for p in pairs(n)))

    @classmethod
    def zeros(cls, n: int) -> CoordVector:
        return cls(n, (0,) * comb(n, 2))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, key):
        if isinstance(key, tuple):
            i, j = sorted(key)
            return self.entries[pair_index(i, j, self.n)]
        return self.entries[key]

    def items(self):
        return zip(pairs(self.n), self.entries)

    def to_json(self) -> dict:
        return {"n": self.n, "entries": [str(Fraction(e)) for e in self.entries]}

    @classmethod
    def from_json(cls, data: dict | str) -> CoordVector:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["n"]), tuple(_exact(Fraction(e)) for e in data["entries"]))


def _exact(q: Fraction):
    return q.numerator if q.denominator == 1 else q


def _require_standard_labels(t: PhyloTree):
    if t.leaves != tuple(range(1, t.n + 1)):
        raise ValueError("coordinate vectors need leaves labelled 1..n")


def _edge_distances(t: PhyloTree) -> dict[tuple[int, int], int]:
    out = {}
    for a in t.leaves:
        dist = {a: 0}
        frontier = [a]
        while frontier:
            nxt = []
            for u in frontier:
                for w in t.neighbors(u):
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        nxt.append(w)
            frontier = nxt
        for b in t.leaves:
            if b > a:
                out[a, b] = dist[b]
    return out


def topo_distance_vector(t: PhyloTree) -> CoordVector:
    """Number of edges on each leaf-to-leaf path."""
    _require_standard_labels(t)
    dist = _edge_distances(t)
    return CoordVector(t.n, tuple(dist[p] for p in pairs(t.n)))


def x_vector(t: PhyloTree) -> CoordVector:
    """Scaled BME vertex x_ij = 2^(n-2-l_ij) of a binary tree.

    l_ij counts internal nodes on the i-j path, i.e. edges minus one.
    """
    _require_standard_labels(t)
    if not t.is_binary():
        raise ValueError("x_vector is defined for binary trees only")
    n = t.n
    dist = _edge_distances(t)
    return CoordVector(n, tuple(1 << (n - 1 - dist[p]) for p in pairs(n)))


def c_vector(v: CoordVector) -> CoordVector:
    """Unscaled Pauplin coordinates x / 2^(n-2)."""
    scale = 1 << (v.n - 2)
    return CoordVector(v.n, tuple(_exact(Fraction(e, scale)) for e in v.entries))


def kraft_check(v: CoordVector) -> list:
    """Residual sum_j v_ij - 2^(n-2) for each leaf i (all zero iff Kraft holds)."""
    n = v.n
    sums = [0] * n
    for (i, j), e in zip(pairs(n), v.entries):
        sums[i - 1] += e
        sums[j - 1] += e
    target = 1 << (n - 2)
    return [s - target for s in sums]


def dot(a: CoordVector | Sequence, b: CoordVector | Sequence):
    if isinstance(a, CoordVector) and isinstance(b, CoordVector) and a.n != b.n:
        raise ValueError(f"leaf-count mismatch: {a.n} vs {b.n}")
    ea = a.entries if isinstance(a, CoordVector) else a
    eb = b.entries if isinstance(b, CoordVector) else b
    if len(ea) != len(eb):
        raise ValueError(f"length mismatch: {len(ea)} vs {len(eb)}")
    return sum((p * q for p, q in zip(ea, eb) if p and q), 0)


def _is_pow2(q) -> bool:
    q = Fraction(q)
    return q.denominator == 1 and q.numerator > 0 and q.numerator & (q.numerator - 1) == 0


def tree_from_x(v: CoordVector) -> PhyloTree | None:
    """The binary tree whose x-vector is ``v``, or None if there is none.

    Cherries are peeled greedily (an entry equal to 2^(n-3) marks a cherry),
    and the candidate is accepted only if it reproduces ``v`` exactly.
    """
    n = v.n
    if n < 3 or not all(_is_pow2(e) for e in v.entries):
        return None
    if any(kraft_check(v)):
        return None
    values = {p: int(e) for p, e in v.items()}
    labels = list(range(1, n + 1))
    clades: dict[int, object] = {k: k for k in labels}
    while len(labels) > 3:
        m = len(labels)
        top = 1 << (m - 3)
        cherry = next(((a, b) for (a, b), e in sorted(values.items()) if e == top), None)
        if cherry is None:
            return None
        a, b = cherry
        survivors = [k for k in labels if k not in cherry]
        new_values = {}
        for idx, i in enumerate(survivors):
            for j in survivors[idx + 1:]:
                e = values[min(i, j), max(i, j)]
                if e % 2:
                    return None
                new_values[min(i, j), max(i, j)] = e // 2
            via_a = values[min(i, a), max(i, a)]
            if via_a != values[min(i, b), max(i, b)]:
                return None
            new_values[min(i, a), max(i, a)] = via_a
        clades[a] = (clades[a], clades[b])
        del clades[b]
        labels = sorted(survivors + [a])
        values = new_values
    if any(e != 1 for e in values.values()):
        return None
    star = PhyloTree.star(labels)
    tree = graft_clades(star, {k: clades[k] for k in labels if clades[k] != k})
    if x_vector(tree) != v:
        return None
    return tree
