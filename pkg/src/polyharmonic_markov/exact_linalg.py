import logging
from fractions import Fraction
from math import lcm

import numpy as np

logger = logging.getLogger(__name__)


def _integer_matrix(matrix, ncols: int | None = None) -> np.ndarray:
    rows = [[Fraction(x) for x in row] for row in matrix]
    if ncols is None:
        if not rows:
            raise ValueError("ncols is required for a matrix without rows")
        ncols = len(rows[0])
    out = np.zeros((len(rows), ncols), dtype=object)
    for i, row in enumerate(rows):
        if len(row) != ncols:
            raise ValueError("ragged matrix")
        scale = lcm(*(x.denominator for x in row)) if row else 1
        out[i, :] = [int(x * scale) for x in row]
    return out


def echelon(matrix, ncols: int | None = None):
    """Integer row echelon form.

    Pivots are taken column by column from the left, using the first row at
    or below the current one with a nonzero entry.

    Returns:
        tuple[np.ndarray, list[int]]: echelon rows (object array of ints)
        and the pivot column of each leading row.
    """
    reduced = _integer_matrix(matrix, ncols)
    nrows, ncols = reduced.shape
    previous = 1
    row = 0
    pivots = []
    for col in range(ncols):
        if row == nrows:
            break
        candidates = np.flatnonzero(reduced[row:, col] != 0)
        if not len(candidates):
            continue
        found = row + int(candidates[0])
        if found != row:
            reduced[[row, found]] = reduced[[found, row]]
        pivot = reduced[row, col]
        for below in range(row + 1, nrows):
            factor = reduced[below, col]
            reduced[below, col + 1 :] = (
                pivot * reduced[below, col + 1 :]
                - factor * reduced[row, col + 1 :]
            ) // previous
            reduced[below, col] = 0
        previous = pivot
        pivots.append(col)
        row += 1
    return reduced, pivots


def rank(matrix, ncols: int | None = None) -> int:
    return len(echelon(matrix, ncols)[1])


def _back_substitute(reduced, pivots, values, ncols):
    """Fill pivot unknowns bottom-up; ``values`` already holds free ones."""
    for r in range(len(pivots) - 1, -1, -1):
        col = pivots[r]
        total = Fraction(0)
        for j in range(col + 1, ncols):
            if values[j]:
                total += reduced[r, j] * values[j]
        values[col] = (values[col] - total) / reduced[r, col]
    return values


def solve(matrix, rhs) -> list[Fraction] | None:
    """Solve ``matrix @ x = rhs`` exactly.

    Free unknowns are set to zero, which picks one deterministic solution
    out of the solution set.

    Returns:
        list[Fraction] | None: a solution, or ``None`` if the system is
        inconsistent.
    """
    rhs = list(rhs)
    rows = [list(row) + [b] for row, b in zip(matrix, rhs, strict=True)]
    if not rows:
        raise ValueError("empty system")
    ncols = len(rows[0]) - 1
    reduced, pivots = echelon(rows, ncols + 1)
    if pivots and pivots[-1] == ncols:
        logger.debug("inconsistent system with %d unknowns", ncols)
        return None
    values = [Fraction(0)] * ncols
    for r, col in enumerate(pivots):
        values[col] = Fraction(reduced[r, ncols])
    return _back_substitute(reduced, pivots, values, ncols)


def nullspace(matrix, ncols: int | None = None) -> list[list[Fraction]]:
    """Kernel basis, one vector per free column with a 1 in that column."""
    reduced, pivots = echelon(matrix, ncols)
    ncols = reduced.shape[1]
    basis = []
    for free in sorted(set(range(ncols)) - set(pivots)):
        values = [Fraction(0)] * ncols
        values[free] = Fraction(1)
        basis.append(_back_substitute(reduced, pivots, values, ncols))
    return basis
