import random
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bmepoly.coords import x_vector
from bmepoly.facets import (
    KNOWN_FACET_TOTALS,
    LinearInequality,
    ValidityError,
    affine_rank,
    caterpillar_facet,
    cherry_cladeface,
    custom_inequality,
    cyclic_ordering_facets,
    double_factorial,
    intersecting_cherry_facet,
    split_facet,
    splitohedron_catalog,
    table1_stats,
    tight_vertices,
    tree_face_inequality,
    vertex_table,
)
from bmepoly.trees import PhyloTree, Split, cherries, is_caterpillar, parse_newick, random_binary_tree, refines


def test_double_factorial():
    assert [double_factorial(2 * n - 5) for n in range(3, 9)] == [1, 3, 15, 105, 945, 10395]
    assert double_factorial(-1) == double_factorial(0) == 1


def test_render_and_json():
    q = intersecting_cherry_facet(1, 2, 3, 5)
    assert q.render() == "x12+x23-x13 <= 4"
    assert LinearInequality.from_json(q.to_json()) == q
    assert caterpillar_facet(2, 1, 6).render() == "x12 >= 1"


def test_sense_validation():
    with pytest.raises(ValueError):
        custom_inequality(4, {(1, 2): 1}, "<", 3)


def test_caterpillar_tight_set_n5():
    tight = tight_vertices(caterpillar_facet(1, 2, 5))
    assert len(tight) == 6
    for t in tight:
        ends = is_caterpillar(t)
        assert ends is not None
        assert (1 in ends[0] and 2 in ends[1]) or (1 in ends[1] and 2 in ends[0])


def test_intersecting_cherry_tight_set_n6():
    tight = tight_vertices(intersecting_cherry_facet(1, 2, 3, 6))
    assert len(tight) == 30 == 2 * double_factorial(5)
    assert all({(1, 2), (2, 3)} & set(cherries(t)) for t in tight)


def test_cherry_cladeface_n5():
    q = cherry_cladeface(1, 2, 5)
    assert q.render() == "x12 <= 4"
    tight = tight_vertices(q)
    assert len(tight) == 3
    assert all((1, 2) in cherries(t) for t in tight)


def test_split_facet_rules():
    leaves = range(1, 7)
    q = split_facet(Split.of({4, 5, 6}, leaves))
    assert q.rhs == 16 and q.params == ((1, 2, 3),)
    assert len(tight_vertices(q)) == 9
    with pytest.raises(ValueError):
        split_facet(Split.of({1, 2}, leaves))


def test_split_facet_tight_iff_displayed():
    leaves = range(1, 8)
    s = Split.of({1, 2, 3}, leaves)
    q = split_facet(s)
    for t, x in vertex_table(7):
        assert q.is_tight(x) == (s in t.splits)


def test_example_tree_face():
    center = parse_newick("((1,2,3),(4,5));")
    q = tree_face_inequality(center)
    coeff = {p: c for p, c in q.terms}
    assert all(coeff[p] == 2 for p in [(1, 2), (1, 3), (2, 3), (4, 5)])
    assert all(coeff[p] == 3 for p in [(1, 4), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5)])
    assert q.sense == ">=" and q.rhs == 48
    assert len(tight_vertices(q)) == 3


def test_tree_face_rejections():
    with pytest.raises(ValueError):
        tree_face_inequality(parse_newick("(1,2,(3,4));"))
    with pytest.raises(ValueError):
        tree_face_inequality(parse_newick("(1,2,3,4,5);"))


def test_invalid_inequality_detected():
    bogus = custom_inequality(5, {(1, 2): 1}, "<=", 3)
    with pytest.raises(ValidityError):
        tight_vertices(bogus)


def test_family_stats_rows():
    s5 = table1_stats(5, verify=True)
    fams = {r["family"]: r for r in s5["families"]}
    assert (fams["caterpillar"]["count"], fams["caterpillar"]["tight"]) == (10, 6)
    assert (fams["intersecting-cherry"]["count"], fams["intersecting-cherry"]["tight"]) == (30, 6)
    assert (fams["cyclic-ordering"]["count"], fams["cyclic-ordering"]["tight"]) == (12, 5)
    assert all(r["ok"] for r in s5["families"])
    s7 = table1_stats(7, verify=False)
    split = [r for r in s7["families"] if r["family"] == "split"][0]
    assert (split["count"], split["tight"]) == (35, 45)
    assert s7["split_facets"] == 35


def test_family_stats_formula_only():
    s = table1_stats(20)
    assert s["split_facets"] == 2**19 - comb(20, 2) - 21
    assert s["dimension"] == comb(20, 2) - 20
    assert s["facets_total"] is None
    assert table1_stats(6)["facets_total"] == KNOWN_FACET_TOTALS[6] == 90262


@pytest.mark.parametrize("n", [4, 5, 6])
def test_polytope_dimension(n):
    assert affine_rank([x for _, x in vertex_table(n)]) == comb(n, 2) - n


@pytest.mark.parametrize("n", [5, 6])
def test_catalog_facets_have_full_tight_rank(n):
    cat = splitohedron_catalog(n)
    members = [q for q in cat.inequalities if q.family != "cherry-clade"]
    if n == 5:
        members += cyclic_ordering_facets()
    for q in members:
        pts = [x_vector(t) for t in tight_vertices(q)]
        assert affine_rank(pts) == comb(n, 2) - n - 1, q.render()


def test_cherry_clade_is_not_a_facet():
    q = cherry_cladeface(1, 2, 6)
    pts = [x_vector(t) for t in tight_vertices(q)]
    assert affine_rank(pts) < comb(6, 2) - 6 - 1


def test_catalog_sizes():
    for n in (5, 6, 7):
        c = splitohedron_catalog(n).counts()
        assert c["caterpillar"] == comb(n, 2) == c["cherry-clade"]
        assert c["intersecting-cherry"] == comb(n, 2) * (n - 2)
        assert c.get("split", 0) == max(0, 2 ** (n - 1) - comb(n, 2) - n - 1)
        assert len(splitohedron_catalog(n).equalities) == n
    c4 = splitohedron_catalog(4).counts()
    assert c4["caterpillar"] == 3 and c4["intersecting-cherry"] == 3


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_relaxation_contains_every_tree(n):
    cat = splitohedron_catalog(n)
    for _, x in vertex_table(n):
        assert all(q.satisfied(x) for q in cat)


@given(st.integers(5, 8), st.integers(0, 2**32))
def test_tree_faces_of_contracted_trees(n, seed):
    # contracting one internal edge leaves a degree-4 node: three binary refinements
    rng = random.Random(seed)
    t = random_binary_tree(n, rng)
    splits = sorted(t.splits, key=str)
    drop = splits[rng.randrange(len(splits))]
    coarse = PhyloTree.from_splits(t.leaves, t.splits - {drop})
    q = tree_face_inequality(coarse)
    tight = tight_vertices(q)
    assert len(tight) == 3
    assert all(refines(b, coarse) for b in tight)
