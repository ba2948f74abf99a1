"""Dissimilarity matrices: validation, exact parsing, PHYLIP/CSV readers."""

from __future__ import annotations

import csv
import io
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from pathlib import Path

from .coords import CoordVector, _exact, pair_index, pairs
from .trees import PhyloTree

__all__ = [
    "DistanceMatrix",
    "MatrixError",
    "additive_matrix",
    "parse_number",
    "read_csv",
    "read_matrix",
    "read_phylip",
]


class MatrixError(ValueError):
    """Malformed distance data; ``cell`` names the offending entry when known."""

    def __init__(self, message: str, cell: tuple[str, str] | None = None):
        self.cell = cell
        super().__init__(message)


def parse_number(text: str) -> Fraction:
    """Exact value of a decimal or rational literal ('0.1' -> 1/10)."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise MatrixError(f"not a number: {text!r}") from None


@dataclass(frozen=True)
class DistanceMatrix:
    """Nonnegative exact distances on leaves 1..n, stored in lexicographic pair order."""

    n: int
    entries: tuple
    names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 3:
            raise MatrixError("need at least 3 taxa")
        if len(self.entries) != comb(self.n, 2):
            raise MatrixError(f"expected {comb(self.n, 2)} entries, got {len(self.entries)}")
        if not self.names:
            object.__setattr__(self, "names", tuple(str(i) for i in range(1, self.n + 1)))
        if len(self.names) != self.n or len(set(self.names)) != self.n:
            raise MatrixError("taxon names must be n distinct strings")
        fixed = tuple(_exact(Fraction(e)) for e in self.entries)
        object.__setattr__(self, "entries", fixed)
        for (i, j), e in zip(pairs(self.n), fixed):
            if e < 0:
                cell = (self.names[i - 1], self.names[j - 1])
                raise MatrixError(f"negative distance {e} at ({cell[0]}, {cell[1]})", cell)

    @classmethod
    def from_square(cls, rows: Sequence[Sequence], names: Sequence[str] | None = None) -> DistanceMatrix:
        n = len(rows)
        names = tuple(names) if names else tuple(str(i) for i in range(1, n + 1))
        if len(names) != n:
            raise MatrixError("number of names differs from matrix size")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise MatrixError(f"row {names[i]} has {len(row)} entries, expected {n}")
        vals = [[Fraction(x) if not isinstance(x, str) else parse_number(x) for x in row] for row in rows]
        for i in range(n):
            if vals[i][i] != 0:
                raise MatrixError(f"nonzero diagonal at ({names[i]}, {names[i]})", (names[i], names[i]))
            for j in range(i + 1, n):
                if vals[i][j] != vals[j][i]:
                    raise MatrixError(
                        f"asymmetric entries at ({names[i]}, {names[j]}): {vals[i][j]} vs {vals[j][i]}",
                        (names[i], names[j]),
                    )
        return cls(n, tuple(vals[i - 1][j - 1] for i, j in pairs(n)), names)

    @classmethod
    def from_pairs(cls, n: int, values: Mapping[tuple[int, int], object], names=()) -> DistanceMatrix:
        return cls(n, tuple(values.get(p, values.get(p[::-1], 0)) for p in pairs(n)), tuple(names))

    @property
    def vector(self) -> CoordVector:
        return CoordVector(self.n, self.entries)

    def __getitem__(self, key: tuple[int, int]):
        i, j = key
        if i == j:
            return 0
        return self.entries[pair_index(min(i, j), max(i, j), self.n)]

    def square(self) -> list[list]:
        return [[self[i, j] for j in range(1, self.n + 1)] for i in range(1, self.n + 1)]

    def to_phylip(self) -> str:
        lines = [str(self.n)]
        for i in range(1, self.n + 1):
            vals = " ".join(str(self[i, j]) for j in range(1, self.n + 1))
            lines.append(f"{self.names[i - 1]} {vals}")
        return "\n".join(lines) + "\n"


def additive_matrix(t: PhyloTree, lengths: Mapping[tuple[int, int], object]) -> DistanceMatrix:
    """Leaf-to-leaf path lengths of ``t`` under the given edge lengths.

    ``lengths`` is keyed by the edges of ``t`` as listed in ``t.edges``.
    """
    n = t.n
    values = {}
    for a in t.leaves:
        dist = {a: Fraction(0)}
        stack = [a]
        while stack:
            u = stack.pop()
            for w in t.neighbors(u):
                if w not in dist:
                    dist[w] = dist[u] + Fraction(lengths[min(u, w), max(u, w)])
                    stack.append(w)
        for b in t.leaves:
            if b > a:
                values[a, b] = dist[b]
    return DistanceMatrix.from_pairs(n, values)


def _is_number(tok: str) -> bool:
    try:
        Fraction(tok)
    except (ValueError, ZeroDivisionError):
        return False
    return True


def read_phylip(text: str) -> DistanceMatrix:
    """Relaxed PHYLIP: taxon count, then one row per line (name + values).

    Square, lower-triangular and lower-triangular-with-diagonal layouts are
    recognised from the first row.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MatrixError("empty PHYLIP input")
    try:
        n = int(lines[0].split()[0])
    except (ValueError, IndexError):
        raise MatrixError("first PHYLIP line must hold the taxon count") from None
    rows = lines[1:]
    if len(rows) != n:
        raise MatrixError(f"PHYLIP header says {n} taxa but {len(rows)} rows follow")
    names, values = [], []
    for line in rows:
        toks = line.split()
        names.append(toks[0])
        values.append(toks[1:])
    first = len(values[0])
    if first == n:
        layout = "square"
    elif first == 0:
        layout = "lower"
    elif first == 1:
        layout = "lower-diag"
    else:
        raise MatrixError(f"cannot tell PHYLIP layout from first row ({first} values)")
    square = [[Fraction(0)] * n for _ in range(n)]
    for i, toks in enumerate(values):
        expect = {"square": n, "lower": i, "lower-diag": i + 1}[layout]
        if len(toks) != expect:
            raise MatrixError(f"row {names[i]} has {len(toks)} values, expected {expect}")
        for j, tok in enumerate(toks):
            try:
                v = parse_number(tok)
            except MatrixError:
                raise MatrixError(f"bad value {tok!r} at ({names[i]}, {names[j]})", (names[i], names[j])) from None
            if layout == "square":
                square[i][j] = v
            else:
                square[i][j] = square[j][i] = v
    return DistanceMatrix.from_square(square, names)


def read_csv(text: str) -> DistanceMatrix:
    """CSV with a header row of taxon names; rows may repeat the name in a
    leading column."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise MatrixError("empty CSV input")
    header = [c.strip() for c in rows[0]]
    body = rows[1:]
    labelled = header[0] == "" or (body and len(body[0]) == len(header) + 1)
    names = header[1:] if header[0] == "" else header
    n = len(names)
    if len(body) != n:
        raise MatrixError(f"CSV header lists {n} taxa but {len(body)} rows follow")
    square = []
    for i, row in enumerate(body):
        cells = [c.strip() for c in row]
        if labelled:
            if cells[0] != names[i]:
                raise MatrixError(f"row {i + 1} is labelled {cells[0]!r}, expected {names[i]!r}")
            cells = cells[1:]
        if len(cells) != n:
            raise MatrixError(f"row {names[i]} has {len(cells)} values, expected {n}")
        vals = []
        for j, c in enumerate(cells):
            try:
                vals.append(parse_number(c))
            except MatrixError:
                raise MatrixError(f"bad value {c!r} at ({names[i]}, {names[j]})", (names[i], names[j])) from None
        square.append(vals)
    return DistanceMatrix.from_square(square, names)


def read_matrix(path: str | Path) -> DistanceMatrix:
    """Read PHYLIP or CSV, chosen by extension (.csv) or by content."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv" or ("," in text.splitlines()[0] if text.strip() else False):
        return read_csv(text)
    return read_phylip(text)
