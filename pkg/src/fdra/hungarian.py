"""Maximum-reward rectangular linear assignment (Hungarian method).

The solver is the shortest-augmenting-path form of the Hungarian algorithm
with row/column potentials, O(R^2 C) for an R x C matrix with R <= C.  The
inner column scans are vectorised with numpy.
"""
from __future__ import annotations

import numpy as np

ZERO_TOL = 1e-12


class AssignmentInputError(ValueError):
    pass


def _min_cost_rows_le_cols(cost: np.ndarray) -> np.ndarray:
    """Return ``col_of_row`` minimising total cost; requires rows <= cols."""
    rows, cols = cost.shape
    u = np.zeros(rows + 1)
    v = np.zeros(cols + 1)
    # row_of[j]: 1-based row matched to 1-based column j; index 0 is the virtual source
    row_of = np.zeros(cols + 1, dtype=np.int64)
    way = np.zeros(cols + 1, dtype=np.int64)
    padded = np.empty((rows + 1, cols + 1))
    padded[0] = 0.0
    padded[1:, 0] = 0.0
    padded[1:, 1:] = cost

    for i in range(1, rows + 1):
        row_of[0] = i
        j0 = 0
        minv = np.full(cols + 1, np.inf)
        used = np.zeros(cols + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            free = ~used
            free[0] = False
            cur = padded[i0] - u[i0] - v
            better = free & (cur < minv - ZERO_TOL)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[row_of[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if row_of[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1

    col_of_row = np.empty(rows, dtype=np.int64)
    for j in range(1, cols + 1):
        if row_of[j]:
            col_of_row[row_of[j] - 1] = j - 1
    return col_of_row


def solve_assignment(rewards) -> list[tuple[int, int]]:
    """Maximum-total-reward assignment of rows to columns.

    Parameters
    ----------
    rewards : array_like, shape (R, C)
        Finite rewards.  When ``R > C`` the matrix is transposed internally, so
        every column is used once and ``C`` rows stay idle.

    Returns
    -------
    list of (row, col)
        ``min(R, C)`` pairs sorted by row, each row and column at most once.
    """
    a = np.array(rewards, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise AssignmentInputError(f"expected a non-empty 2D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise AssignmentInputError("reward matrix contains non-finite entries")
    transposed = a.shape[0] > a.shape[1]
    if transposed:
        a = a.T
    # maximise by minimising (max - reward), which keeps every cost >= 0
    col_of_row = _min_cost_rows_le_cols(a.max() - a)
    pairs = [(r, int(c)) for r, c in enumerate(col_of_row)]
    if transposed:
        pairs = sorted((c, r) for r, c in pairs)
    return pairs


def assignment_value(rewards, pairs) -> float:
    a = np.asarray(rewards, dtype=float)
    return float(sum(a[r, c] for r, c in pairs))
