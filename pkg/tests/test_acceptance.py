"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Sizes and time limits are the stated ones; nothing is scaled down.
"""

import random
import time
from math import comb

import pytest

from bmepoly.coords import kraft_check, x_vector
from bmepoly.facets import (
    KNOWN_FACET_TOTALS,
    affine_rank,
    splitohedron_catalog,
    table1_stats,
    tight_vertices,
    tree_face_inequality,
    vertex_table,
)
from bmepoly.kp import covering_moves, enumerate_kp_faces, fiber_sizes, is_refinement, phi
from bmepoly.solver import certify_splitohedron_vertex, solve_bnb, solve_exhaustive, solve_nj
from bmepoly.trees import enumerate_binary_trees, parse_newick

from conftest import random_additive, random_matrix


def report(capsys, number, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    with capsys.disabled():
        print(f"\ncriterion {number}: {status} ({detail}; {elapsed:.2f}s of {limit:g}s)")
    assert ok, detail
    assert within, f"took {elapsed:.1f}s, limit {limit}s"


def test_criterion_01_vertex_counts(capsys):
    t0 = time.perf_counter()
    counts = [sum(1 for _ in enumerate_binary_trees(n)) for n in range(3, 9)]
    elapsed = time.perf_counter() - t0
    report(capsys, 1, counts == [1, 3, 15, 105, 945, 10395], f"counts {counts}", elapsed, 10)


def test_criterion_02_kraft(capsys):
    t0 = time.perf_counter()
    bad = 0
    total = 0
    for n in range(3, 9):
        for t in enumerate_binary_trees(n):
            total += 1
            bad += any(kraft_check(x_vector(t)))
    elapsed = time.perf_counter() - t0
    report(capsys, 2, bad == 0, f"{total} trees, {bad} with nonzero residual", elapsed, 30)


def test_criterion_03_dimension(capsys):
    t0 = time.perf_counter()
    dims = [affine_rank([x_vector(t) for t in enumerate_binary_trees(n)]) for n in (4, 5, 6)]
    elapsed = time.perf_counter() - t0
    report(capsys, 3, dims == [2, 5, 9], f"dimensions {dims}", elapsed, 10)


def test_criterion_04_family_counts(capsys):
    t0 = time.perf_counter()
    want = {
        5: {"caterpillar": (10, 6), "intersecting-cherry": (30, 6), "cyclic-ordering": (12, 5)},
        6: {"caterpillar": (15, 24), "intersecting-cherry": (60, 30), "split": (10, 9)},
    }
    got = {}
    for n in (5, 6):
        stats = table1_stats(n, verify=True)
        got[n] = {
            r["family"]: (r["verified"]["count"], r["verified"]["tight"])
            for r in stats["families"]
        }
    ok = all(
        got[n][fam] == (count, [tight]) for n, fams in want.items() for fam, (count, tight) in fams.items()
    )
    elapsed = time.perf_counter() - t0
    report(capsys, 4, ok, f"measured {got}", elapsed, 60)


def test_criterion_05_facet_certification(capsys):
    t0 = time.perf_counter()
    failures = []
    checked = 0
    # every caterpillar, intersecting-cherry and split facet at n = 6 and 7
    # (a superset of the single (3,4)-split asked for at n = 7)
    for n in (6, 7):
        target = comb(n, 2) - n - 1
        for q in splitohedron_catalog(n).inequalities:
            if q.family == "cherry-clade":
                continue
            r = affine_rank([x_vector(t) for t in tight_vertices(q)])
            checked += 1
            if r != target:
                failures.append((n, q.render(), r))
    elapsed = time.perf_counter() - t0
    report(capsys, 5, not failures, f"{checked} facets checked, failures {failures[:3]}", elapsed, 300)


def test_criterion_06_example_inequality(capsys):
    t0 = time.perf_counter()
    q = tree_face_inequality(parse_newick("((1,2,3),(4,5));"))
    coeff = dict(q.terms)
    twos = [(1, 2), (1, 3), (2, 3), (4, 5)]
    threes = [(1, 4), (1, 5), (2, 4), (2, 5), (3, 4), (3, 5)]
    tight = tight_vertices(q)
    ok = (
        all(coeff[p] == 2 for p in twos)
        and all(coeff[p] == 3 for p in threes)
        and q.sense == ">="
        and q.rhs == 48
        and len(tight) == 3
    )
    elapsed = time.perf_counter() - t0
    report(capsys, 6, ok, f"{q.render()}, tight on {len(tight)} trees", elapsed, 1)


def test_criterion_07_phi(capsys):
    t0 = time.perf_counter()
    sizes = {n: sorted(set(fiber_sizes(range(1, n + 1)).values())) for n in (4, 5, 6)}
    pairs = 0
    broken = 0
    for m in (2, 3, 4):
        for f in enumerate_kp_faces(range(1, m + 2)):
            image = phi(f)
            for g in covering_moves(f):
                pairs += 1
                if not (is_refinement(g, f) and image.splits <= phi(g).splits):
                    broken += 1
    ok = sizes == {4: [4], 5: [8], 6: [16]} and broken == 0
    elapsed = time.perf_counter() - t0
    report(capsys, 7, ok, f"fiber sizes {sizes}; {pairs} covering pairs, {broken} not order-preserving", elapsed, 60)


def test_criterion_08_splitohedron_vertices(capsys):
    t0 = time.perf_counter()
    summary = {}
    ok = True
    for n in (6, 7):
        reps = [certify_splitohedron_vertex(t) for t in enumerate_binary_trees(n)]
        certified = sum(r.certified for r in reps)
        counts = sum(r.formula_count == r.direct_count for r in reps)
        summary[n] = f"{certified}/{len(reps)} rank-certified, {counts}/{len(reps)} counts match, ranks {sorted({r.rank for r in reps})} of {comb(n, 2)}"
        ok &= certified == len(reps) and counts == len(reps)
    elapsed = time.perf_counter() - t0
    report(capsys, 8, ok, "; ".join(f"n={n}: {s}" for n, s in summary.items()), elapsed, 300)


def test_criterion_09_solver_equivalence(capsys):
    rng = random.Random(9)
    t0 = time.perf_counter()
    mismatches = []
    nodes = {}
    for n in (5, 6, 7, 8):
        nodes[n] = 0
        for k in range(100):
            d = random_matrix(n, rng)
            best = solve_exhaustive(d)
            cert = solve_bnb(d)
            nodes[n] += cert.nodes
            if cert.value_x != best.value or cert.tree not in best.ties:
                mismatches.append((n, k))
    elapsed = time.perf_counter() - t0
    report(capsys, 9, not mismatches, f"400 matrices, mismatches {mismatches}, bnb nodes per n {nodes}", elapsed, 600)


def test_criterion_10_additive_recovery(capsys):
    rng = random.Random(10)
    t0 = time.perf_counter()
    failures = []
    for n in (5, 6, 7, 8, 9):
        for k in range(100):
            t, lengths, d = random_additive(n, rng)
            cert = solve_bnb(d)
            ok = (
                solve_nj(d) == t
                and cert.tree == t
                and cert.value_x == 2 ** (n - 2) * sum(lengths.values())
            )
            if not ok:
                failures.append((n, k))
    elapsed = time.perf_counter() - t0
    report(capsys, 10, not failures, f"500 trees, failures {failures}", elapsed, 600)


def test_criterion_11_documentation_only(capsys):
    # the 90262 facets of P_6 come from a hull computation that is out of
    # scope here; the value is quoted, never recomputed
    t0 = time.perf_counter()
    stats = table1_stats(6, verify=False)
    ok = stats["facets_total"] == KNOWN_FACET_TOTALS[6] == 90262
    elapsed = time.perf_counter() - t0
    report(capsys, 11, ok, "documentation only: total facet count 90262 for P_6 is quoted, not recomputed", elapsed, 1)
