"""Leftmost row minima of a totally monotone matrix (SMAWK).

The matrix is implicit: entries come from an oracle and are evaluated only
when the search needs them. Entries may be the :data:`UPPER` sentinel,
which orders above every finite value and equal to itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence


class _Upper:
    __slots__ = ()

    def __repr__(self):
        return "UPPER"


UPPER = _Upper()


def greater(a, b) -> bool:
    """Strict ``a > b`` under the order that puts UPPER above all reals."""
    if a is UPPER:
        return b is not UPPER
    if b is UPPER:
        return False
    return a > b


@dataclass
class LazyMatrix:
    rows: int
    cols: int
    entry: Callable[[int, int], object]
    evaluations: int = field(default=0, init=False)

    def __call__(self, i: int, j: int):
        self.evaluations += 1
        return self.entry(i, j)


def row_minima(m: LazyMatrix, debug: bool = False) -> list[int]:
    """Column index of the leftmost minimum of every row.

    ``m`` must be totally monotone; on other input the result is meaningless
    but the search still terminates. ``debug`` re-checks every row by a full
    scan and raises ``AssertionError`` on disagreement.
    """
    if m.rows == 0:
        return []
    if m.cols == 0:
        raise ValueError("matrix has no columns")
    argmin: dict[int, int] = {}
    _smawk(m, list(range(m.rows)), list(range(m.cols)), argmin)
    result = [argmin[i] for i in range(m.rows)]
    if debug:
        for i, j in enumerate(result):
            assert j == scan_row_minimum(m.entry, i, m.cols), f"row {i}"
    return result


def _smawk(m: LazyMatrix, rows: Sequence[int], cols: Sequence[int], argmin: dict[int, int]) -> None:
    if not rows:
        return
    # REDUCE: keep at most len(rows) columns that can still hold a row minimum
    stack: list[int] = []
    for c in cols:
        while stack:
            r = rows[len(stack) - 1]
            if not greater(m(r, stack[-1]), m(r, c)):
                break
            stack.pop()
        if len(stack) < len(rows):
            stack.append(c)

    _smawk(m, rows[1::2], stack, argmin)

    # interpolate even rows between the minima of their odd neighbours
    start = 0
    for k in range(0, len(rows), 2):
        r = rows[k]
        if k + 1 < len(rows):
            stop = stack.index(argmin[rows[k + 1]], start)
        else:
            stop = len(stack) - 1
        best_col = stack[start]
        best = m(r, best_col)
        for idx in range(start + 1, stop + 1):
            v = m(r, stack[idx])
            if greater(best, v):
                best, best_col = v, stack[idx]
        argmin[r] = best_col
        start = stop


def scan_row_minimum(entry: Callable[[int, int], object], i: int, cols: int) -> int:
    best_col, best = 0, entry(i, 0)
    for j in range(1, cols):
        v = entry(i, j)
        if greater(best, v):
            best, best_col = v, j
    return best_col


def is_totally_monotone(entry: Callable[[int, int], object], rows: int, cols: int) -> bool:
    """Exhaustive 2x2 check: a[k,i] > a[k,j] implies a[l,i] > a[l,j] for k < l, i < j."""
    for k in range(rows):
        for l in range(k + 1, rows):
            for i in range(cols):
                for j in range(i + 1, cols):
                    if greater(entry(k, i), entry(k, j)) and not greater(entry(l, i), entry(l, j)):
                        return False
    return True
