import itertools
from math import comb, factorial

import pytest

from bmepoly.facets import double_factorial
from bmepoly.kp import (
    BracketingError,
    KPFace,
    covering_moves,
    enumerate_kp_faces,
    enumerate_kp_vertices,
    fiber_sizes,
    is_refinement,
    parse_bracketing,
    phi,
    phi_fibers,
)
from bmepoly.trees import PhyloTree, parse_newick, to_newick

BASE = "(({3},{4,5}),{2},{1,6,7})"


def catalan(k):
    return comb(2 * k, k) // (k + 1)


def test_parse_and_render():
    f = parse_bracketing(BASE, root_label=8)
    assert f.render() == BASE
    assert f.m == 7
    assert f.dim == 7 - 1 - 2
    assert len(f.blocks()) == 4
    assert KPFace.from_json(f.to_json()) == f


def test_default_root_label():
    assert parse_bracketing("(({1},{2}),{3})").root == 4


@pytest.mark.parametrize(
    "finer",
    [
        "((({3},{4,5}),{2}),{1,6,7})",
        "(({3},{4,5}),{2},({1},{6},{7}))",
        "(({3},{4,5}),{2},({1,7},{6}))",
    ],
)
def test_covering_examples(finer):
    f = parse_bracketing(BASE, 8)
    g = parse_bracketing(finer, 8)
    assert g in covering_moves(f)
    assert g.dim == f.dim - 1 or finer.endswith("({1},{6},{7}))")
    assert is_refinement(g, f)
    assert not is_refinement(f, g)


def test_covering_moves_only_refine():
    f = parse_bracketing(BASE, 8)
    for g in covering_moves(f):
        assert is_refinement(g, f)
        assert g.dim < f.dim


def test_top_face_and_unary_bracket():
    top = parse_bracketing("({1,2,3})", 4)
    assert top.dim == 2
    assert isinstance(top.tree, frozenset)
    with pytest.raises(BracketingError):
        parse_bracketing("(({1,2}),{3})", 4)


@pytest.mark.parametrize(
    "text",
    ["(({1},{2}),{3}", "({1},{1})", "({},{2})", "({1},{2}))", "({1};{2})", "{1,2"],
)
def test_malformed_bracketings(text):
    with pytest.raises(BracketingError):
        parse_bracketing(text)


def test_root_label_clash():
    with pytest.raises(BracketingError):
        parse_bracketing("({1},{2})", root_label=2)


def test_phi_examples():
    assert phi(parse_bracketing("(({1},{2}),{3})", 4)) == parse_newick("((1,2),(3,4));")
    assert phi(parse_bracketing("({1,2,3})", 4)) == PhyloTree.star([1, 2, 3, 4])
    f = parse_bracketing(BASE, 8)
    assert to_newick(phi(f)) == to_newick(parse_newick("(((3,(4,5)),2,(1,6,7)),8);"))


def test_phi_forgets_plane_order():
    a = parse_bracketing("(({1},{2}),{3})", 4)
    b = parse_bracketing("({3},({2},{1}))", 4)
    assert a != b
    assert phi(a) == phi(b)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_vertex_count(m):
    verts = list(enumerate_kp_vertices(range(1, m + 2)))
    assert len(verts) == factorial(m) * catalan(m - 1)
    assert len(set(verts)) == len(verts)
    assert all(v.is_vertex() for v in verts)


@pytest.mark.parametrize("n,size", [(4, 4), (5, 8), (6, 16)])
def test_fibers_uniform(n, size):
    sizes = fiber_sizes(range(1, n + 1))
    assert len(sizes) == double_factorial(2 * n - 5)
    assert set(sizes.values()) == {size}
    fibers = phi_fibers(range(1, n + 1))
    assert all(t.is_binary() for t in fibers)


def test_face_counts_and_euler():
    faces3 = enumerate_kp_faces(range(1, 5))
    assert len(faces3) == 25
    faces4 = enumerate_kp_faces(range(1, 6))
    by_dim = {}
    for f in faces4:
        by_dim[f.dim] = by_dim.get(f.dim, 0) + 1
    assert len(faces4) == 387
    # Euler relation of a 3-polytope boundary plus the polytope itself
    assert by_dim[0] - by_dim[1] + by_dim[2] - by_dim[3] == 1


def test_order_preservation_on_covering_pairs():
    for m in (2, 3, 4):
        for f in enumerate_kp_faces(range(1, m + 2)):
            image = phi(f)
            for g in covering_moves(f):
                assert is_refinement(g, f)
                finer = phi(g)
                assert image.splits <= finer.splits


def test_is_refinement_partial_order():
    faces = enumerate_kp_faces(range(1, 5))
    for f, g in itertools.product(faces, repeat=2):
        if is_refinement(f, g) and is_refinement(g, f):
            assert f == g
    top = faces[0]
    assert all(is_refinement(f, top) for f in faces)


def test_enumeration_guard():
    with pytest.raises(ValueError):
        enumerate_kp_faces(range(1, 7))
