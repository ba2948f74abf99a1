"""Exact rational linear programming.

``simplex_standard`` is a two-phase tableau simplex over the integers
(Edmonds' integer-preserving pivots: the stored tableau is the true one
times the current basis determinant, so every update is an exact integer
division).  Entering columns follow Dantzig's rule while the objective
moves and Bland's smallest-index rule through degenerate stretches, which
rules out cycling.

``lp_min`` solves ``min c.x`` over free variables subject to linear
inequalities and equalities by running the simplex on the dual problem,
whose row count is the (small) number of coordinates; the primal optimum is
read off the final simplex multipliers and re-checked exactly.

By default ``lp_min`` first asks a floating-point solver (HiGHS via scipy)
which constraints are active at the optimum, then rebuilds that vertex and
its dual multipliers in exact arithmetic.  The answer is accepted only if
the exact point is feasible and the exact multipliers have the right signs,
which proves optimality; otherwise the exact simplex runs from scratch.
Floats therefore only ever choose a candidate basis.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import numpy as np

from . import linalg
from .coords import CoordVector, _exact, dot
from .facets import LinearInequality

__all__ = ["LPProblem", "LPResult", "SimplexOutcome", "lp_min", "simplex_standard"]

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"


@dataclass
class SimplexOutcome:
    status: str
    value: Fraction | None = None
    solution: list[Fraction] | None = None
    multipliers: list[Fraction] | None = None
    basis: list[int] | None = None
    pivots: int = 0


def _row_scale(values: Sequence) -> int:
    return lcm(*(Fraction(v).denominator for v in values)) if len(values) else 1


class _Tableau:
    """Integer tableau: rows 0..m-1 constraints, then phase-2 and phase-1 cost rows."""

    def __init__(self, A, b, c):
        m, N = len(A), len(c)
        self.m, self.N = m, N
        self.sign = [1] * m
        self.row_scale = [1] * m
        M = np.zeros((m + 2, N + m + 1), dtype=object)
        for i in range(m):
            row = list(A[i]) + [b[i]]
            s = _row_scale(row)
            sign = -1 if b[i] < 0 else 1
            self.sign[i], self.row_scale[i] = sign, s
            for j in range(N):
                M[i, j] = int(Fraction(A[i][j]) * s) * sign
            M[i, N + i] = 1
            M[i, -1] = int(Fraction(b[i]) * s) * sign
        self.cost_scale = _row_scale(c)
        for j in range(N):
            M[m, j] = int(Fraction(c[j]) * self.cost_scale)
        M[m + 1, :N] = -M[:m, :N].sum(axis=0) if m else 0
        M[m + 1, -1] = -M[:m, -1].sum() if m else 0
        self.M = M
        self.D = 1
        self.basis = [N + i for i in range(m)]
        self.pivots = 0

    def pivot(self, r: int, col: int):
        M, D = self.M, self.D
        p = M[r, col]
        pivot_row = M[r].copy()
        M[:] = (M * p - np.outer(M[:, col], pivot_row)) // D
        M[r] = pivot_row
        self.D = p
        if p < 0:
            self.M = -M
            self.D = -p
        self.basis[r] = col
        self.pivots += 1

    def ratio_row(self, col: int, bland: bool) -> int | None:
        M = self.M
        best = None
        for i in range(self.m):
            a = M[i, col]
            if a > 0:
                if best is None:
                    best = i
                    continue
                lhs = M[i, -1] * M[best, col]
                rhs = M[best, -1] * a
                if lhs < rhs or (lhs == rhs and bland and self.basis[i] < self.basis[best]):
                    best = i
                elif lhs == rhs and not bland and self.basis[i] < self.basis[best]:
                    best = i
        return best

    def run(self, cost_row: int, allowed: int) -> str:
        """Minimise the given cost row over columns < ``allowed``."""
        M = self.M
        bland = False
        while True:
            costs = self.M[cost_row, :allowed]
            if bland:
                col = next((j for j in range(allowed) if costs[j] < 0), None)
            else:
                col = None
                best = 0
                for j in range(allowed):
                    if costs[j] < best:
                        best, col = costs[j], j
            if col is None:
                return OPTIMAL
            r = self.ratio_row(col, bland)
            if r is None:
                return UNBOUNDED
            bland = self.M[r, -1] == 0
            self.pivot(r, col)

    def drive_out_artificials(self):
        N = self.N
        for r in range(self.m):
            if self.basis[r] >= N:
                col = next((j for j in range(N) if self.M[r, j] != 0), None)
                if col is not None:
                    self.pivot(r, col)


def simplex_standard(A: Sequence[Sequence], b: Sequence, c: Sequence) -> SimplexOutcome:
    """Solve ``min c.w  s.t.  A w = b, w >= 0`` exactly.

    Returns the optimal ``w``, the value, and the row multipliers ``y``
    (an optimal solution of ``max b.y s.t. A^T y <= c``).
    """
    m, N = len(A), len(c)
    if any(len(row) != N for row in A) or len(b) != m:
        raise ValueError("inconsistent dimensions")
    tab = _Tableau(A, b, c)
    if m:
        tab.run(m + 1, N)
        if tab.M[m + 1, -1] != 0:
            return SimplexOutcome(INFEASIBLE, pivots=tab.pivots)
        tab.drive_out_artificials()
    status = tab.run(m, N)
    if status == UNBOUNDED:
        return SimplexOutcome(UNBOUNDED, pivots=tab.pivots)
    M, D = tab.M, tab.D
    w = [Fraction(0)] * N
    for i, var in enumerate(tab.basis):
        if var < N:
            w[var] = Fraction(M[i, -1], D)
    value = Fraction(-M[m, -1], D * tab.cost_scale)
    y = [
        Fraction(-M[m, N + i] * tab.row_scale[i] * tab.sign[i], D * tab.cost_scale)
        for i in range(m)
    ]
    return SimplexOutcome(OPTIMAL, value, w, y, list(tab.basis), tab.pivots)


@dataclass
class LPProblem:
    """``min objective.x`` subject to inequalities and equalities; x is free."""

    n: int
    objective: CoordVector
    inequalities: list[LinearInequality]
    equalities: list[LinearInequality] = field(default_factory=list)

    def __post_init__(self):
        for q in list(self.inequalities) + list(self.equalities):
            if q.n != self.n:
                raise ValueError(f"constraint over n={q.n} in a problem over n={self.n}")
        for q in self.equalities:
            if q.sense != "=":
                raise ValueError("equalities must have sense '='")
        for q in self.inequalities:
            if q.sense == "=":
                raise ValueError("put '=' constraints in equalities")
        if self.objective.n != self.n:
            raise ValueError("objective dimension mismatch")


@dataclass
class LPResult:
    status: str
    optimum: Fraction | None = None
    point: CoordVector | None = None
    tight: tuple[int, ...] = ()
    pivots: int = 0
    method: str = "simplex"


def _dual_system(p: LPProblem, zero_rhs: bool = False):
    """Columns: one per '>='-normalised inequality, then +/- per equality."""
    rows_g = [q.as_geq() for q in p.inequalities]
    rows_e = [(q.coeffs.entries, q.rhs) for q in p.equalities]
    dim = len(p.objective.entries)
    cols, cost = [], []
    for g, h in rows_g:
        cols.append(g)
        cost.append(-h)
    for e, rhs in rows_e:
        cols.append(e)
        cost.append(-rhs)
        cols.append(tuple(-x for x in e))
        cost.append(rhs)
    A = [[col[j] for col in cols] for j in range(dim)]
    b = [0] * dim if zero_rhs else list(p.objective.entries)
    return A, b, cost


def _guided(p: LPProblem) -> LPResult | None:
    """Exact optimum from a float-suggested basis, or None if it cannot be verified."""
    from scipy.optimize import linprog

    dim = len(p.objective.entries)
    geq = [q.as_geq() for q in p.inequalities]
    eqs = [(q.coeffs.entries, q.rhs) for q in p.equalities]
    c = np.array([float(v) for v in p.objective.entries])
    A_ub = np.array([[-float(v) for v in g] for g, _ in geq]).reshape(len(geq), dim)
    b_ub = np.array([-float(h) for _, h in geq])
    A_eq = np.array([[float(v) for v in e] for e, _ in eqs]).reshape(len(eqs), dim)
    b_eq = np.array([float(h) for _, h in eqs])
    res = linprog(
        c,
        A_ub=A_ub if len(geq) else None,
        b_ub=b_ub if len(geq) else None,
        A_eq=A_eq if len(eqs) else None,
        b_eq=b_eq if len(eqs) else None,
        bounds=(None, None),
        method="highs-ds",
    )
    if res.status != 0:
        return None
    scale = max(1.0, float(np.abs(b_ub).max(initial=0)), float(np.abs(b_eq).max(initial=0)))
    duals = -res.ineqlin.marginals if len(geq) else np.zeros(0)
    slack = res.ineqlin.residual if len(geq) else np.zeros(0)
    # equalities first, then inequalities carrying dual weight, then merely tight ones
    order = sorted(
        (i for i in range(len(geq)) if duals[i] > 1e-9 or slack[i] <= 1e-7 * scale),
        key=lambda i: (not duals[i] > 1e-9, -duals[i], slack[i], i),
    )
    rows = [("e", k) for k in range(len(eqs))] + [("g", i) for i in order]
    basis, Q = [], np.zeros((0, dim))
    for kind, k in rows:
        v = A_eq[k] if kind == "e" else A_ub[k]
        r = v - Q.T @ (Q @ v) if len(Q) else v.copy()
        norm = np.linalg.norm(r)
        if norm > 1e-8 * max(1.0, np.linalg.norm(v)):
            basis.append((kind, k))
            Q = np.vstack([Q, r / norm])
            if len(basis) == dim:
                break
    if len(basis) < dim:
        return None
    mat = [eqs[k][0] if kind == "e" else geq[k][0] for kind, k in basis]
    rhs = [eqs[k][1] if kind == "e" else geq[k][1] for kind, k in basis]
    try:
        x = linalg.solve_square(mat, rhs)
        transposed = [[row[j] for row in mat] for j in range(dim)]
        y = linalg.solve_square(transposed, list(p.objective.entries))
    except ValueError:
        return None
    if any(kind == "g" and yi < 0 for (kind, _), yi in zip(basis, y)):
        return None
    point = CoordVector(p.n, tuple(_exact(v) for v in x))
    if any(q.slack(point) < 0 for q in p.inequalities):
        return None
    optimum = _exact(dot(p.objective, point))
    # weak duality: the multipliers certify optimum as a lower bound
    if sum(yi * h for yi, h in zip(y, rhs)) != optimum:
        return None
    tight = tuple(i for i, q in enumerate(p.inequalities) if q.is_tight(point))
    return LPResult(OPTIMAL, optimum, point, tight, 0, "guided")


def lp_min(p: LPProblem, *, method: str = "auto") -> LPResult:
    """Exact optimum of an :class:`LPProblem`.

    ``method`` is "auto" (verified float guess, exact simplex fallback) or
    "simplex" (exact simplex only).  Infeasible and unbounded problems are
    reported through ``status``; those always come from the exact simplex.
    """
    if method not in ("auto", "simplex"):
        raise ValueError(f"unknown LP method {method!r}")
    if method == "auto":
        out = _guided(p)
        if out is not None:
            return out
    return _simplex_min(p)


def _simplex_min(p: LPProblem) -> LPResult:
    A, b, cost = _dual_system(p)
    out = simplex_standard(A, b, cost)
    if out.status == UNBOUNDED:
        return LPResult(INFEASIBLE, pivots=out.pivots)
    if out.status == INFEASIBLE:
        A0, b0, cost0 = _dual_system(p, zero_rhs=True)
        probe = simplex_standard(A0, b0, cost0)
        status = INFEASIBLE if probe.status == UNBOUNDED else UNBOUNDED
        return LPResult(status, pivots=out.pivots + probe.pivots)
    x = tuple(_exact(-y) for y in out.multipliers)
    point = CoordVector(p.n, x)
    optimum = -out.value
    for q in list(p.inequalities) + list(p.equalities):
        if q.slack(point) < 0:
            raise ArithmeticError(f"recovered point violates {q.render()}")
    if dot(p.objective, point) != optimum:
        raise ArithmeticError("primal and dual objective values disagree")
    tight = tuple(i for i, q in enumerate(p.inequalities) if q.is_tight(point))
    return LPResult(OPTIMAL, _exact(optimum), point, tight, out.pivots)
