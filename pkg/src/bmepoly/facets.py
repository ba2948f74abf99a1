"""Valid inequalities of the BME polytope: facet families, tree-faces and
the splitohedron relaxation, plus tools to count and certify them on the
enumerated vertex set.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import comb, factorial

from . import linalg
from .coords import CoordVector, _exact, pair_index, pairs, topo_distance_vector, x_vector
from .trees import PhyloTree, Split, enumerate_binary_trees

__all__ = [
    "FAMILIES",
    "Catalog",
    "LinearInequality",
    "ValidityError",
    "affine_rank",
    "caterpillar_facet",
    "caterpillar_facets",
    "cherry_cladeface",
    "cherry_cladefaces",
    "custom_inequality",
    "cyclic_ordering_facet",
    "cyclic_ordering_facets",
    "double_factorial",
    "intersecting_cherry_facet",
    "intersecting_cherry_facets",
    "kraft_equalities",
    "split_facet",
    "split_facets",
    "splitohedron_catalog",
    "table1_stats",
    "tight_vertices",
    "tree_face_inequality",
    "vertex_table",
]

FAMILIES = (
    "caterpillar",
    "intersecting-cherry",
    "split",
    "cherry-clade",
    "cyclic-ordering",
    "tree-face",
    "kraft",
    "custom",
)
SENSES = ("<=", ">=", "=")

# total facet counts of P_n known from the literature; not recomputed here
KNOWN_FACET_TOTALS = {3: 0, 4: 3, 5: 52, 6: 90262}


def double_factorial(k: int) -> int:
    """k!! with the convention (-1)!! = 0!! = 1."""
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


class ValidityError(ValueError):
    """An inequality is violated by some vertex of the BME polytope."""

    def __init__(self, inequality: LinearInequality, tree: PhyloTree):
        from .trees import to_newick

        self.inequality = inequality
        self.tree = tree
        super().__init__(f"{inequality.render()} is violated by {to_newick(tree)}")


def _pair_name(i: int, j: int, n: int) -> str:
    return f"x{i}{j}" if n <= 9 else f"x{i}_{j}"


@dataclass(frozen=True, eq=False)
class LinearInequality:
    """``sum(coef * x_ij) <sense> rhs`` over the C(n,2) pair coordinates.

    ``terms`` keeps the nonzero coefficients in display order; ``coeffs``
    is the dense vector.
    """

    n: int
    terms: tuple[tuple[tuple[int, int], object], ...]
    sense: str
    rhs: object
    family: str = "custom"
    params: tuple = field(default=())

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown sense {self.sense!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        norm = []
        for (i, j), c in self.terms:
            pair_index(min(i, j), max(i, j), self.n)
            norm.append(((min(i, j), max(i, j)), c))
        object.__setattr__(self, "terms", tuple(norm))

    @cached_property
    def coeffs(self) -> CoordVector:
        dense = [0] * comb(self.n, 2)
        for (i, j), c in self.terms:
            dense[pair_index(i, j, self.n)] += c
        return CoordVector(self.n, tuple(dense))

    @cached_property
    def sparse(self) -> tuple[tuple[int, object], ...]:
        return tuple((k, c) for k, c in enumerate(self.coeffs.entries) if c)

    def key(self):
        return (self.n, self.coeffs.entries, self.sense, self.rhs)

    def __eq__(self, other):
        if not isinstance(other, LinearInequality):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def lhs(self, v: CoordVector | Sequence):
        e = v.entries if isinstance(v, CoordVector) else v
        return sum((c * e[k] for k, c in self.sparse), 0)

    def slack(self, v) -> object:
        """Nonnegative iff ``v`` satisfies the inequality (for '=', minus |residual|)."""
        diff = self.lhs(v) - self.rhs
        if self.sense == "<=":
            return -diff
        if self.sense == ">=":
            return diff
        return -abs(diff)

    def satisfied(self, v) -> bool:
        return self.slack(v) >= 0

    def is_tight(self, v) -> bool:
        return self.lhs(v) == self.rhs

    def as_geq(self) -> tuple[tuple, object]:
        """(dense coefficients, rhs) of the equivalent '>=' form."""
        if self.sense == "<=":
            return tuple(-c for c in self.coeffs.entries), -self.rhs
        return self.coeffs.entries, self.rhs

    def render(self) -> str:
        out = []
        for (i, j), c in self.terms:
            if not c:
                continue
            name = _pair_name(i, j, self.n)
            mag = abs(c)
            coef = "" if mag == 1 else (f"{mag}" if Fraction(mag).denominator == 1 else f"({mag})")
            sign = "-" if c < 0 else ("+" if out else "")
            out.append(f"{sign}{coef}{name}")
        return f"{''.join(out) or '0'} {self.sense} {self.rhs}"

    __str__ = render

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": _jsonable(self.params),
            "n": self.n,
            "coeffs": [str(Fraction(c)) for c in self.coeffs.entries],
            "sense": self.sense,
            "rhs": str(Fraction(self.rhs)),
        }

    @classmethod
    def from_json(cls, data: dict) -> LinearInequality:
        n = int(data["n"])
        coeffs = [_exact(Fraction(c)) for c in data["coeffs"]]
        terms = tuple((p, c) for p, c in zip(pairs(n), coeffs) if c)
        return cls(
            n,
            terms,
            data["sense"],
            _exact(Fraction(data["rhs"])),
            data.get("family", "custom"),
            _tuplify(data.get("params", ())),
        )


def _jsonable(obj):
    if isinstance(obj, (tuple, list)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, frozenset):
        return sorted(obj)
    return obj


def _tuplify(obj):
    if isinstance(obj, list):
        return tuple(_tuplify(x) for x in obj)
    return obj


def _distinct(*leaves: int):
    if len(set(leaves)) != len(leaves):
        raise ValueError(f"leaves must be distinct, got {leaves}")


def _leaf_range(n: int, *leaves: int):
    for leaf in leaves:
        if not 1 <= leaf <= n:
            raise ValueError(f"leaf {leaf} outside 1..{n}")


# -- single inequalities ------------------------------------------------------

def caterpillar_facet(a: int, b: int, n: int) -> LinearInequality:
    """x_ab >= 1: tight on caterpillars with a and b in opposite end cherries."""
    _distinct(a, b)
    _leaf_range(n, a, b)
    a, b = sorted((a, b))
    return LinearInequality(n, (((a, b), 1),), ">=", 1, "caterpillar", (a, b))


def intersecting_cherry_facet(a: int, b: int, c: int, n: int) -> LinearInequality:
    """x_ab + x_bc - x_ac <= 2^(n-3), with ``b`` the shared leaf."""
    _distinct(a, b, c)
    _leaf_range(n, a, b, c)
    a, c = sorted((a, c))
    terms = (((a, b), 1), ((b, c), 1), ((a, c), -1))
    return LinearInequality(n, terms, "<=", 1 << (n - 3), "intersecting-cherry", (a, b, c))


def split_facet(s: Split) -> LinearInequality:
    """Sum of x_ij over pairs inside the smaller side S1 (|S1| = k) <= (k-1) 2^(n-3)."""
    n = len(s.leaves)
    if s.leaves != frozenset(range(1, n + 1)):
        raise ValueError("split must be over leaves 1..n")
    if min(s.sizes) < 3:
        raise ValueError(
            f"split {s} has a side with fewer than 3 leaves; use cherry_cladeface "
            "(2-leaf side) or the caterpillar family instead"
        )
    side = sorted(s.smaller)
    k = len(side)
    terms = tuple(((i, j), 1) for i, j in itertools.combinations(side, 2))
    return LinearInequality(n, terms, "<=", (k - 1) << (n - 3), "split", (tuple(side),))


def cherry_cladeface(a: int, b: int, n: int) -> LinearInequality:
    """x_ab <= 2^(n-3): tight exactly when {a, b} is a cherry."""
    _distinct(a, b)
    _leaf_range(n, a, b)
    a, b = sorted((a, b))
    return LinearInequality(n, (((a, b), 1),), "<=", 1 << (n - 3), "cherry-clade", (a, b))


def _canonical_cycle(cycle: Sequence[int]) -> tuple[int, ...]:
    k = len(cycle)
    start = cycle.index(min(cycle))
    fwd = tuple(cycle[(start + i) % k] for i in range(k))
    bwd = tuple(cycle[(start - i) % k] for i in range(k))
    return min(fwd, bwd)


def cyclic_ordering_facet(cycle: Sequence[int]) -> LinearInequality:
    """Five-term cyclic sum x_ab + x_bc + x_cd + x_de + x_ea <= 13 (n = 5 only)."""
    cycle = tuple(cycle)
    if sorted(cycle) != [1, 2, 3, 4, 5]:
        raise ValueError("cyclic-ordering facets exist for n = 5 only: pass a permutation of 1..5")
    cyc = _canonical_cycle(cycle)
    terms = tuple(((cyc[i], cyc[(i + 1) % 5]), 1) for i in range(5))
    return LinearInequality(5, terms, "<=", 13, "cyclic-ordering", (cyc,))


def tree_face_inequality(t: PhyloTree) -> LinearInequality:
    """sum d_ij(t) x_ij >= 2^(n-2) |E(t)|, tight exactly on binary refinements of t."""
    if t.is_binary():
        raise ValueError("binary trees are vertices; tree-faces need a non-binary tree")
    if not t.splits:
        raise ValueError("the star gives the improper face (the whole polytope)")
    d = topo_distance_vector(t)
    n = t.n
    terms = tuple(d.items())
    rhs = (1 << (n - 2)) * len(t.edges)
    from .trees import to_newick

    return LinearInequality(n, terms, ">=", rhs, "tree-face", (to_newick(t),))


def kraft_equalities(n: int) -> list[LinearInequality]:
    out = []
    for i in range(1, n + 1):
        terms = tuple(((min(i, j), max(i, j)), 1) for j in range(1, n + 1) if j != i)
        out.append(LinearInequality(n, terms, "=", 1 << (n - 2), "kraft", (i,)))
    return out


def custom_inequality(n: int, coeffs: dict[tuple[int, int], object], sense: str, rhs) -> LinearInequality:
    return LinearInequality(n, tuple(coeffs.items()), sense, rhs, "custom")


# -- families -----------------------------------------------------------------

def caterpillar_facets(n: int) -> list[LinearInequality]:
    return [caterpillar_facet(a, b, n) for a, b in pairs(n)]


def intersecting_cherry_facets(n: int) -> list[LinearInequality]:
    out = []
    for b in range(1, n + 1):
        others = [x for x in range(1, n + 1) if x != b]
        out.extend(intersecting_cherry_facet(a, b, c, n) for a, c in itertools.combinations(others, 2))
    return out


def split_facets(n: int) -> list[LinearInequality]:
    """One inequality per split with both sides of size >= 3."""
    leaves = frozenset(range(1, n + 1))
    out = []
    rest = range(2, n + 1)
    # sides not containing leaf 1 enumerate each split once
    for k in range(3, n - 2):
        for side in itertools.combinations(rest, k):
            out.append(split_facet(Split(frozenset(side), leaves)))
    return sorted(out, key=lambda q: (len(q.params[0]), q.params))


def cherry_cladefaces(n: int) -> list[LinearInequality]:
    return [cherry_cladeface(a, b, n) for a, b in pairs(n)]


def cyclic_ordering_facets() -> list[LinearInequality]:
    seen = {}
    for perm in itertools.permutations(range(2, 6)):
        q = cyclic_ordering_facet((1,) + perm)
        seen.setdefault(q.params, q)
    return [seen[k] for k in sorted(seen)]


# -- vertices and tightness ------------------------------------------------------

_CACHE_MAX_N = 8


@lru_cache(maxsize=None)
def _cached_vertices(n: int) -> tuple[tuple[PhyloTree, CoordVector], ...]:
    return tuple((t, x_vector(t)) for t in enumerate_binary_trees(n))


def vertex_table(n: int) -> Iterator[tuple[PhyloTree, CoordVector]]:
    """(tree, x-vector) for every vertex of P_n; memoised for n <= 8."""
    if n <= _CACHE_MAX_N:
        return iter(_cached_vertices(n))
    return ((t, x_vector(t)) for t in enumerate_binary_trees(n))


def _guard(n: int, max_n: int | None, what: str):
    if max_n is not None and n > max_n:
        raise ValueError(f"{what} enumerates (2n-5)!! trees; n={n} exceeds the guard {max_n}")


def tight_vertices(q: LinearInequality, n: int | None = None, *, max_n: int | None = 10) -> list[PhyloTree]:
    """Binary trees on which ``q`` holds with equality.

    Raises :class:`ValidityError` if some vertex violates ``q``.
    """
    n = q.n if n is None else n
    if n != q.n:
        raise ValueError(f"inequality is over n={q.n}, not {n}")
    _guard(n, max_n, "tight_vertices")
    out = []
    for t, x in vertex_table(n):
        s = q.slack(x)
        if s < 0:
            raise ValidityError(q, t)
        if s == 0 and q.is_tight(x):
            out.append(t)
    return out


def affine_rank(points: Sequence[CoordVector | Sequence]) -> int:
    """Affine dimension of a set of points, computed exactly."""
    rows = [p.entries if isinstance(p, CoordVector) else tuple(p) for p in points]
    return linalg.affine_rank(rows)


# -- the splitohedron ------------------------------------------------------------

@dataclass(frozen=True)
class Catalog:
    n: int
    inequalities: tuple[LinearInequality, ...]
    equalities: tuple[LinearInequality, ...]

    def by_family(self, family: str) -> list[LinearInequality]:
        return [q for q in self.inequalities if q.family == family]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for q in self.inequalities:
            out[q.family] += 1
        return dict(out)

    def __iter__(self):
        return iter(self.inequalities + self.equalities)

    def __len__(self):
        return len(self.inequalities) + len(self.equalities)


def _dedup_by_tight_set(family: list[LinearInequality], n: int) -> list[LinearInequality]:
    verts = list(vertex_table(n))
    seen = set()
    out = []
    for q in family:
        key = frozenset(i for i, (_, x) in enumerate(verts) if q.is_tight(x))
        if key not in seen:
            seen.add(key)
            out.append(q)
    return out


@lru_cache(maxsize=None)
def splitohedron_catalog(n: int) -> Catalog:
    """Caterpillar, intersecting-cherry, split and cherry-clade half-spaces
    plus the n Kraft equalities.

    At n = 4 the families describe each facet of the triangle P_4 twice;
    members with identical tight sets are merged there.
    """
    if n < 4:
        raise ValueError("the splitohedron is defined for n >= 4")
    fams = [
        caterpillar_facets(n),
        intersecting_cherry_facets(n),
        split_facets(n),
        cherry_cladefaces(n),
    ]
    if n == 4:
        fams = [_dedup_by_tight_set(f, n) for f in fams]
    ineqs = tuple(q for f in fams for q in f)
    return Catalog(n, ineqs, tuple(kraft_equalities(n)))


def split_facet_count(n: int) -> int:
    return max(0, 2 ** (n - 1) - comb(n, 2) - n - 1)


# -- family statistics ---------------------------------------------------------------

def _family_rows(n: int) -> list[dict]:
    rows = []
    if n < 4:
        return rows
    if n == 4:
        rows.append(dict(family="caterpillar", inequality="x_ab >= 1", count=3, tight=2,
                         tight_formula="(n-2)!"))
        rows.append(dict(family="intersecting-cherry", inequality="x_ab + x_bc - x_ac <= 2",
                         count=3, tight=2, tight_formula="2(2n-7)!!"))
        return rows
    rows.append(dict(family="caterpillar", inequality="x_ab >= 1", count=comb(n, 2),
                     tight=factorial(n - 2), tight_formula="(n-2)!"))
    rows.append(dict(family="intersecting-cherry",
                     inequality=f"x_ab + x_bc - x_ac <= {1 << (n - 3)}",
                     count=comb(n, 2) * (n - 2), tight=2 * double_factorial(2 * n - 7),
                     tight_formula="2(2n-7)!!"))
    if n == 5:
        rows.append(dict(family="cyclic-ordering",
                         inequality="x_ab + x_bc + x_cd + x_de + x_ea <= 13",
                         count=12, tight=5, tight_formula="5"))
    for k in range(3, n // 2 + 1):
        m = n - k
        count = comb(n, k) // 2 if m == k else comb(n, k)
        rows.append(dict(
            family="split",
            sizes=(m, k),
            inequality=f"sum_(i<j in S1, |S1|={k}) x_ij <= {(k - 1) << (n - 3)}",
            count=count,
            tight=double_factorial(2 * m - 3) * double_factorial(2 * k - 3),
            tight_formula="(2m-3)!!(2k-3)!!" if k > 3 else "3(2n-9)!!",
        ))
    return rows


def _family_members(n: int, row: dict) -> list[LinearInequality]:
    fam = row["family"]
    if fam == "cyclic-ordering":
        return cyclic_ordering_facets()
    if fam == "split":
        k = row["sizes"][1]
        return [q for q in split_facets(n) if len(q.params[0]) == k]
    return splitohedron_catalog(n).by_family(fam)


def table1_stats(n: int, verify: bool | None = None) -> dict:
    """Dimension, vertex count and facet-family statistics of P_n.

    With ``verify`` (default: n <= 7) every family member is generated and
    its tight-vertex count is measured by enumeration.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    if verify is None:
        verify = n <= 7
    rows = _family_rows(n)
    for row in rows:
        row["verified"] = None
        if verify:
            members = _family_members(n, row)
            sizes = sorted({len(tight_vertices(q, n, max_n=None)) for q in members})
            row["verified"] = {"count": len(members), "tight": sizes}
            row["ok"] = len(members) == row["count"] and sizes == [row["tight"]]
    return {
        "schema": "bmepoly.table1/1",
        "n": n,
        "dimension": comb(n, 2) - n,
        "vertices": double_factorial(2 * n - 5),
        "facets_total": KNOWN_FACET_TOTALS.get(n),
        "split_facets": split_facet_count(n) if n >= 6 else 0,
        "families": rows,
        "verified": verify,
    }
