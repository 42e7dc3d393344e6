"""Exact phase-one simplex over the rationals.

Decides whether ``A x = b, x >= 0`` has a solution and returns a basic
feasible one.  Bland's rule guarantees termination on degenerate systems.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


def feasible_point(A: Sequence[Sequence[Fraction | int]], b: Sequence[Fraction | int]) -> list[Fraction] | None:
    """Return a non-negative rational ``x`` with ``A x = b``, or None when none exists."""
    m = len(A)
    n = len(A[0]) if m else 0
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for i in range(m):
        row = [Fraction(v) for v in A[i]]
        bi = Fraction(b[i])
        if bi < 0:
            row = [-v for v in row]
            bi = -bi
        rows.append(row + [Fraction(int(k == i)) for k in range(m)])
        rhs.append(bi)
    width = n + m
    # phase-one cost row: reduced costs of minimising the sum of artificials
    cost = [-sum((rows[i][j] for i in range(m)), Fraction(0)) for j in range(n)] + [Fraction(0)] * m
    basis = list(range(n, n + m))

    while True:
        enter = next((j for j in range(n) if cost[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:  # cannot happen in phase one: objective is bounded below by zero
            raise ArithmeticError("unbounded phase-one problem")
        _pivot(rows, rhs, cost, leave, enter, width)
        basis[leave] = enter
    if any(rhs[i] != 0 for i in range(m) if basis[i] >= n):
        return None
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = rhs[i]
    return x


def _pivot(rows: list[list[Fraction]], rhs: list[Fraction], cost: list[Fraction],
           r: int, c: int, width: int) -> None:
    piv = rows[r][c]
    prow = rows[r]
    if piv != 1:
        inv = 1 / piv
        for j in range(width):
            if prow[j]:
                prow[j] *= inv
        rhs[r] *= inv
    nz = [j for j in range(width) if prow[j]]
    for i, row in enumerate(rows):
        if i == r:
            continue
        f = row[c]
        if f:
            for j in nz:
                row[j] -= f * prow[j]
            rhs[i] -= f * rhs[r]
    f = cost[c]
    if f:
        for j in nz:
            cost[j] -= f * prow[j]
