"""Exact rank computations over the rationals."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from fractions import Fraction
from math import gcd, lcm

__all__ = ["affine_rank", "nullspace_vector", "rank", "solve_square"]


def _integer_rows(rows: Iterable[Sequence]) -> list[list[int]]:
    out = []
    for row in rows:
        fr = [Fraction(x) for x in row]
        den = lcm(*(f.denominator for f in fr)) if fr else 1
        ints = [int(f * den) for f in fr]
        if any(ints):
            out.append(ints)
    return out


def rank(rows: Iterable[Sequence]) -> int:
    """Rank of a rational matrix by fraction-free elimination."""
    mat = _integer_rows(rows)
    if not mat:
        return 0
    ncols = len(mat[0])
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][col]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        prow = mat[r]
        p = prow[col]
        for i in range(r + 1, len(mat)):
            f = mat[i][col]
            if f:
                row = [p * a - f * b for a, b in zip(mat[i], prow)]
                g = 0
                for a in row:
                    g = gcd(g, a)
                mat[i] = [a // g for a in row] if g > 1 else row
        r += 1
        if r == len(mat):
            break
    return r


def affine_rank(points: Sequence[Sequence]) -> int:
    """Dimension of the affine hull of a nonempty point set."""
    if not points:
        raise ValueError("affine_rank needs at least one point")
    base = list(points[0])
    if any(len(p) != len(base) for p in points):
        raise ValueError("points have different lengths")
    return rank([a - b for a, b in zip(p, base)] for p in points[1:])


def solve_square(a: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve a nonsingular square rational system exactly.

    Bareiss elimination on the integer-scaled augmented matrix, then
    back-substitution in Fractions.
    """
    n = len(a)
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("solve_square needs an n x n matrix and n right-hand sides")
    m = _integer_rows_keep([list(r) + [y] for r, y in zip(a, b)])
    prev = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k]), None)
        if piv is None:
            raise ValueError("singular system")
        m[k], m[piv] = m[piv], m[k]
        pk = m[k]
        p = pk[k]
        for i in range(k + 1, n):
            row = m[i]
            f = row[k]
            m[i] = [(p * x - f * y) // prev for x, y in zip(row, pk)]
        prev = p
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        row = m[i]
        s = Fraction(row[n])
        for j in range(i + 1, n):
            if row[j]:
                s -= row[j] * x[j]
        x[i] = s / row[i]
    return x


def _integer_rows_keep(rows: Iterable[Sequence]) -> list[list[int]]:
    """Like _integer_rows, but zero rows are kept (row positions matter)."""
    out = []
    for row in rows:
        fr = [Fraction(x) for x in row]
        den = lcm(*(f.denominator for f in fr)) if fr else 1
        out.append([int(f * den) for f in fr])
    return out


def nullspace_vector(rows: Sequence[Sequence], ncols: int) -> list[int] | None:
    """A nonzero integer vector v with row . v = 0 for every row, or None."""
    mat = [[Fraction(x) for x in row] for row in rows]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(mat)) if mat[i][col]), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = 1 / mat[r][col]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col]:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
    free = next((c for c in range(ncols) if c not in pivots), None)
    if free is None:
        return None
    v = [Fraction(0)] * ncols
    v[free] = Fraction(1)
    for i, col in enumerate(pivots):
        v[col] = -mat[i][free]
    den = lcm(*(x.denominator for x in v))
    ints = [int(x * den) for x in v]
    g = 0
    for a in ints:
        g = gcd(g, a)
    return [a // g for a in ints]
