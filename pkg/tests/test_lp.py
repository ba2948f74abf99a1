import itertools
import random
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from bmepoly.coords import CoordVector, dot
from bmepoly.facets import custom_inequality, splitohedron_catalog, vertex_table
from bmepoly.linalg import solve_square
from bmepoly.lp import LPProblem, lp_min, simplex_standard

from conftest import random_matrix

PAIRS3 = [(1, 2), (1, 3), (2, 3)]


def box_problem(rng, k, with_eq):
    """Random LP over R^3 inside the box [-5, 5]^3."""
    ineqs = []
    for p in PAIRS3:
        ineqs.append(custom_inequality(3, {p: 1}, ">=", -5))
        ineqs.append(custom_inequality(3, {p: 1}, "<=", 5))
    for _ in range(k):
        coeffs = {p: rng.randint(-4, 4) for p in PAIRS3}
        ineqs.append(custom_inequality(3, coeffs, rng.choice(["<=", ">="]), Fraction(rng.randint(-12, 12), rng.randint(1, 3))))
    eqs = []
    if with_eq:
        eqs.append(custom_inequality(3, {p: rng.randint(-2, 2) or 1 for p in PAIRS3}, "=", rng.randint(-3, 3)))
    obj = CoordVector(3, tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in PAIRS3))
    return LPProblem(3, obj, ineqs, eqs)


def brute_force(p):
    """Minimum over all basic feasible points (exact), or None if infeasible."""
    rows = [(q.coeffs.entries, q.rhs) for q in p.equalities]
    cand = [(q.coeffs.entries, q.rhs) for q in p.inequalities]
    best = None
    need = 3 - len(rows)
    for combo in itertools.combinations(cand, need):
        system = rows + list(combo)
        try:
            x = solve_square([r for r, _ in system], [h for _, h in system])
        except ValueError:
            continue
        pt = CoordVector(3, tuple(x))
        if all(q.slack(pt) >= 0 for q in p.inequalities) and all(q.slack(pt) == 0 for q in p.equalities):
            v = dot(p.objective, pt)
            best = v if best is None or v < best else best
    return best


@given(st.integers(0, 2**32), st.integers(0, 6), st.booleans())
def test_against_vertex_enumeration(seed, k, with_eq):
    p = box_problem(random.Random(seed), k, with_eq)
    want = brute_force(p)
    for method in ("simplex", "auto"):
        res = lp_min(p, method=method)
        if want is None:
            assert res.status == "infeasible"
        else:
            assert res.status == "optimal"
            assert res.optimum == want
            assert all(q.slack(res.point) >= 0 for q in p.inequalities)
            assert all(q.slack(res.point) == 0 for q in p.equalities)
            assert dot(p.objective, res.point) == res.optimum
            assert set(res.tight) == {i for i, q in enumerate(p.inequalities) if q.is_tight(res.point)}


def test_infeasible():
    obj = CoordVector(3, (1, 0, 0))
    p = LPProblem(3, obj, [custom_inequality(3, {(1, 2): 1}, ">=", 2), custom_inequality(3, {(1, 2): 1}, "<=", 1)])
    assert lp_min(p).status == "infeasible"
    assert lp_min(p, method="simplex").status == "infeasible"


def test_unbounded():
    obj = CoordVector(3, (1, 0, 0))
    p = LPProblem(3, obj, [custom_inequality(3, {(1, 2): 1}, "<=", 1)])
    assert lp_min(p).status == "unbounded"


def test_degenerate_textbook_cycling_example():
    # Beale's example: cycles under the plain largest-coefficient rule
    A = [
        [Fraction(1, 4), -8, -1, 9, 1, 0, 0],
        [Fraction(1, 2), -12, Fraction(-1, 2), 3, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    b = [0, 0, 1]
    c = [Fraction(-3, 4), 20, Fraction(-1, 2), 6, 0, 0, 0]
    out = simplex_standard(A, b, c)
    assert out.status == "optimal"
    assert out.value == Fraction(-5, 4)


def test_problem_validation():
    obj = CoordVector(3, (1, 0, 0))
    with pytest.raises(ValueError):
        LPProblem(3, obj, [custom_inequality(3, {(1, 2): 1}, "=", 1)])
    with pytest.raises(ValueError):
        LPProblem(3, obj, [], [custom_inequality(3, {(1, 2): 1}, "<=", 1)])
    with pytest.raises(ValueError):
        LPProblem(4, obj, [])
    with pytest.raises(ValueError):
        lp_min(LPProblem(3, obj, []), method="interior")


def test_min_x12_over_splitohedron():
    cat = splitohedron_catalog(5)
    obj = CoordVector.from_pairs(5, {(1, 2): 1})
    res = lp_min(LPProblem(5, obj, list(cat.inequalities), list(cat.equalities)))
    assert res.optimum == 1


@pytest.mark.parametrize("n", [6, 7])
def test_relaxation_bound_is_sound(n, rng):
    cat = splitohedron_catalog(n)
    xs = np.array([x.entries for _, x in vertex_table(n)], dtype=object)
    for _ in range(8):
        d = random_matrix(n, rng)
        res = lp_min(LPProblem(n, d.vector, list(cat.inequalities), list(cat.equalities)))
        exact = lp_min(LPProblem(n, d.vector, list(cat.inequalities), list(cat.equalities)), method="simplex")
        assert res.optimum == exact.optimum
        assert res.optimum <= min(xs @ np.array(d.entries, dtype=object))


def test_float_cross_check(rng):
    n = 6
    cat = splitohedron_catalog(n)
    d = random_matrix(n, rng)
    res = lp_min(LPProblem(n, d.vector, list(cat.inequalities), list(cat.equalities)), method="simplex")
    A_ub, b_ub = [], []
    for q in cat.inequalities:
        g, h = q.as_geq()
        A_ub.append([-float(v) for v in g])
        b_ub.append(-float(h))
    A_eq = [[float(v) for v in q.coeffs.entries] for q in cat.equalities]
    b_eq = [float(q.rhs) for q in cat.equalities]
    ref = linprog([float(v) for v in d.entries], A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=(None, None))
    assert abs(ref.fun - float(res.optimum)) < 1e-6 * max(1.0, abs(ref.fun))
