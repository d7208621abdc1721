"""Dense two-phase simplex over exact rationals.

Problems here have at most a few dozen variables, so every pivot is done in
:class:`fractions.Fraction` arithmetic and Bland's rule picks entering and
leaving variables.  Results are therefore exact for the (exactly converted)
float inputs and independent of pivot-order heuristics.

Standard form: minimize ``c @ x`` subject to ``A @ x == b`` and ``x >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Number = float | int | Fraction


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None = None
    objective: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"

    def values(self) -> list[float]:
        return [float(v) for v in self.x] if self.x is not None else []


def _frac(v: Number) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        p = row[c]
        if p != 1:
            self.rows[r] = row = [v / p for v in row]
            self.rhs[r] = self.rhs[r] / p
        for i, other in enumerate(self.rows):
            if i != r and other[c] != 0:
                f = other[c]
                self.rows[i] = [a - f * b for a, b in zip(other, row)]
                self.rhs[i] = self.rhs[i] - f * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost: list[Fraction]) -> list[Fraction]:
        red = list(cost)
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb != 0:
                red = [rc - cb * a for rc, a in zip(red, self.rows[r])]
        return red

    def optimize(self, cost: list[Fraction], allowed: int) -> str:
        """Bland's rule minimization over columns ``< allowed``."""
        while True:
            red = self.reduced_costs(cost)
            entering = next((j for j in range(allowed) if red[j] < 0), None)
            if entering is None:
                return "optimal"
            best = None
            for r, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    ratio = self.rhs[r] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering)


def solve_lp(c: Sequence[Number], A: Sequence[Sequence[Number]], b: Sequence[Number]) -> LPResult:
    """Minimize ``c @ x`` s.t. ``A @ x == b``, ``x >= 0``."""
    n = len(c)
    m = len(A)
    if any(len(row) != n for row in A) or len(b) != m:
        raise ValueError("inconsistent LP dimensions")
    rows = [[_frac(v) for v in row] for row in A]
    rhs = [_frac(v) for v in b]
    for r in range(m):
        if rhs[r] < 0:
            rows[r] = [-v for v in rows[r]]
            rhs[r] = -rhs[r]
    # phase 1: one artificial per row
    for r in range(m):
        rows[r] = rows[r] + [Fraction(int(i == r)) for i in range(m)]
    tab = _Tableau(rows, rhs, [n + r for r in range(m)])
    phase1 = [Fraction(0)] * n + [Fraction(1)] * m
    tab.optimize(phase1, n + m)
    infeas = sum((tab.rhs[r] for r in range(m) if tab.basis[r] >= n), Fraction(0))
    if infeas > 0:
        return LPResult("infeasible")
    # drive zero-level artificials out of the basis; drop redundant rows
    r = 0
    while r < len(tab.rows):
        if tab.basis[r] >= n:
            col = next((j for j in range(n) if tab.rows[r][j] != 0), None)
            if col is None:
                del tab.rows[r], tab.rhs[r], tab.basis[r]
                continue
            tab.pivot(r, col)
        r += 1
    tab.rows = [row[:n] for row in tab.rows]
    cost = [_frac(v) for v in c]
    status = tab.optimize(cost, n)
    if status == "unbounded":
        return LPResult("unbounded")
    x = [Fraction(0)] * n
    for r, bcol in enumerate(tab.basis):
        x[bcol] = tab.rhs[r]
    obj = sum((ci * xi for ci, xi in zip(cost, x)), Fraction(0))
    return LPResult("optimal", tuple(x), obj)


def find_feasible(A: Sequence[Sequence[Number]], b: Sequence[Number]) -> LPResult:
    """Any ``x >= 0`` with ``A @ x == b`` (phase 1 only)."""
    n = len(A[0]) if A else 0
    return solve_lp([0] * n, A, b)
