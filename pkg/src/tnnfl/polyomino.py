"""Rooted directed polyominoes counted by area and upper perimeter.

A cell set rooted at (0, 0) is directed when every non-root cell has its
right (x+1, y) or upper (x, y+1) neighbour in the set. Following those links
strictly increases x + y, so every chain ends at the root and the set is
automatically connected. The upper perimeter counts cells with no cell
directly above them.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator

from .errors import EnumerationCap, OutsideConvergenceDomain

MAX_ENUM_AREA = 12
MAX_SERIES_ORDER = 16

Cell = tuple[int, int]


@dataclass
class PolyominoTable:
    max_area: int
    counts: dict[tuple[int, int], int] = field(default_factory=dict)

    def get(self, m: int, n: int) -> int:
        return self.counts.get((m, n), 0)

    def row_sums(self) -> list[int]:
        return [sum(c for (m, _), c in self.counts.items() if m == a) for a in range(1, self.max_area + 1)]

    def rows(self) -> Iterator[tuple[int, int, int]]:
        for (m, n) in sorted(self.counts):
            yield m, n, self.counts[(m, n)]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "n", "count"])
        writer.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def upper_perimeter(cells: frozenset[Cell]) -> int:
    return sum((x, y + 1) not in cells for x, y in cells)


def is_directed(cells: frozenset[Cell]) -> bool:
    if (0, 0) not in cells:
        return False
    return all(c == (0, 0) or (c[0] + 1, c[1]) in cells or (c[0], c[1] + 1) in cells for c in cells)


def iter_directed(max_area: int) -> Iterator[tuple[int, frozenset[Cell]]]:
    """Yield (area, cells) for every directed polyomino up to max_area, level by level."""
    level = {frozenset({(0, 0)})}
    for m in range(1, max_area + 1):
        for cells in level:
            yield m, cells
        if m == max_area:
            break
        nxt: set[frozenset[Cell]] = set()
        for cells in level:
            for x, y in cells:
                for cand in ((x - 1, y), (x, y - 1)):
                    if cand not in cells:
                        nxt.add(cells | {cand})
        level = nxt


def enumerate_directed(max_area: int) -> PolyominoTable:
    if max_area > MAX_ENUM_AREA:
        raise EnumerationCap(f"max_area {max_area} exceeds {MAX_ENUM_AREA}")
    table = PolyominoTable(max_area)
    for m, cells in iter_directed(max_area):
        key = (m, upper_perimeter(cells))
        table.counts[key] = table.counts.get(key, 0) + 1
    return table


# -- generating function -------------------------------------------------------------


def _denominator(q: float, p: float) -> float:
    return 1 - q * (2 + p) + q * q * (1 - p)


@dataclass(frozen=True)
class GenFunParams:
    q: float
    p: float

    def diagnostics(self) -> dict[str, float | bool]:
        """The gate used here plus the two alternative convergence conditions."""
        q, p = self.q, self.p
        return {
            "denominator": _denominator(q, p),
            "denominator_positive": _denominator(q, p) > 0,
            "abs_condition": abs(q * (2 + p) - q * q * (1 - p)) < 1,
            "sum_condition": q * (2 + p) + q * q * (1 - p) <= 1,
        }


def gen_fun(params: GenFunParams | float, p: float | None = None) -> float:
    """G(q, p) = Σ D_{m,n} q^m p^n in closed form. Accepts GenFunParams or (q, p)."""
    if isinstance(params, GenFunParams):
        q, p = params.q, params.p
    else:
        q = float(params)
        if p is None:
            raise TypeError("gen_fun(q, p) needs both arguments")
    den = _denominator(q, p)
    if not den > 0:
        raise OutsideConvergenceDomain(f"1 - q(2+p) + q^2(1-p) = {den} <= 0 at q={q}, p={p}")
    return 0.5 * p * (math.sqrt((1 + q) * (1 + q - q * p) / den) - 1)


# truncated bivariate series in (q, p) as nested lists s[i][j] for q^i p^j


def _zeros(M: int, P: int) -> list[list[Fraction]]:
    return [[Fraction(0)] * (P + 1) for _ in range(M + 1)]


def _from_poly(terms: dict[tuple[int, int], int], M: int, P: int) -> list[list[Fraction]]:
    s = _zeros(M, P)
    for (i, j), c in terms.items():
        if i <= M and j <= P:
            s[i][j] += c
    return s


def _series_mul(a, b, M: int, P: int):
    out = _zeros(M, P)
    for i1 in range(M + 1):
        for j1 in range(P + 1):
            if a[i1][j1] == 0:
                continue
            for i2 in range(M + 1 - i1):
                for j2 in range(P + 1 - j1):
                    out[i1 + i2][j1 + j2] += a[i1][j1] * b[i2][j2]
    return out


def _series_inv(a, M: int, P: int):
    a00 = a[0][0]
    out = _zeros(M, P)
    for i in range(M + 1):
        for j in range(P + 1):
            acc = Fraction(int(i == 0 and j == 0))
            for i1 in range(i + 1):
                for j1 in range(j + 1):
                    if (i1, j1) != (0, 0) and a[i1][j1]:
                        acc -= a[i1][j1] * out[i - i1][j - j1]
            out[i][j] = acc / a00
    return out


def _series_sqrt(a, M: int, P: int):
    if a[0][0] != 1:
        raise ValueError("series square root needs unit constant term")
    out = _zeros(M, P)
    out[0][0] = Fraction(1)
    for i in range(M + 1):
        for j in range(P + 1):
            if (i, j) == (0, 0):
                continue
            acc = a[i][j]
            for i1 in range(i + 1):
                for j1 in range(j + 1):
                    if (i1, j1) in ((0, 0), (i, j)):
                        continue
                    acc -= out[i1][j1] * out[i - i1][j - j1]
            out[i][j] = acc / 2
    return out


def series_coefficients(max_area: int, max_perim: int) -> dict[tuple[int, int], Fraction]:
    """Exact Taylor coefficients [q^m p^n] G(q, p) for m <= max_area, n <= max_perim."""
    if max_area > MAX_SERIES_ORDER or max_perim > MAX_SERIES_ORDER:
        raise EnumerationCap(f"series orders are capped at {MAX_SERIES_ORDER}")
    M, P = max_area, max(max_perim - 1, 0)
    num = _from_poly({(0, 0): 1, (1, 0): 2, (2, 0): 1, (2, 1): -1, (1, 1): -1}, M, P)
    den = _from_poly({(0, 0): 1, (1, 0): -2, (1, 1): -1, (2, 0): 1, (2, 1): -1}, M, P)
    root = _series_sqrt(_series_mul(num, _series_inv(den, M, P), M, P), M, P)
    coeffs: dict[tuple[int, int], Fraction] = {}
    for m in range(max_area + 1):
        for n in range(1, max_perim + 1):
            # G = (p/2)(sqrt(R) - 1): the p^n coefficient comes from p^(n-1) of sqrt(R)
            c = root[m][n - 1] - int(m == 0 and n == 1)
            coeffs[(m, n)] = c / 2
    return coeffs


def gen_fun_series(max_area: int, max_perim: int) -> PolyominoTable:
    table = PolyominoTable(max_area)
    for (m, n), c in series_coefficients(max_area, max_perim).items():
        if c.denominator != 1:
            raise ArithmeticError(f"non-integer coefficient {c} at q^{m} p^{n}")
        if c != 0:
            table.counts[(m, n)] = int(c)
    return table
