"""Low-complexity axial 3D assignment by alternating 2D Hungarian solves.

Starting from a feasible mapping, two of the three index dimensions are locked
into pairs and the remaining (free) dimension is re-matched to those pairs
exactly.  Rotating the free dimension gives a sequence of mappings whose
objective never decreases; the default schedule performs five such solves.
"""
from __future__ import annotations

import itertools
import math
from typing import Iterator, Literal, Sequence

import numpy as np

from .hungarian import solve_assignment
from .model import Assignment3D

FreeDim = Literal["subchannel", "due", "uue"]

FREE_DIMS: tuple[FreeDim, ...] = ("subchannel", "due", "uue")
DEFAULT_SCHEDULE: tuple[FreeDim, ...] = ("subchannel", "due", "uue", "subchannel", "due")
_AXIS = {"uue": 0, "due": 1, "subchannel": 2}
CONVERGED_TOL = 1e-9


def _check_tensor(tensor) -> np.ndarray:
    t = np.asarray(tensor, dtype=float)
    if t.ndim != 3 or min(t.shape) < 1:
        raise ValueError(f"rate tensor must be 3D and non-empty, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("rate tensor contains non-finite entries")
    return t


def initial_assignment(m_count: int, n_count: int, k_count: int) -> Assignment3D:
    """Diagonal mapping {(i, i, i) : i < min(M, N, K)}."""
    size = min(m_count, n_count, k_count)
    if size < 1:
        raise ValueError("all dimensions must be >= 1")
    return Assignment3D(tuple((i, i, i) for i in range(size)))


def random_initial_assignment(
    m_count: int, n_count: int, k_count: int, rng: np.random.Generator
) -> Assignment3D:
    size = min(m_count, n_count, k_count)
    return Assignment3D.from_arrays(
        rng.permutation(m_count)[:size].tolist(),
        rng.permutation(n_count)[:size].tolist(),
        rng.permutation(k_count)[:size].tolist(),
    )


def reassign_one_dimension(tensor, current: Assignment3D, free_dim: FreeDim) -> Assignment3D:
    """Re-match the ``free_dim`` indices to the locked pairs of the other two.

    The reward of locked pair ``d`` with free index ``f`` is the tensor entry
    of the triple formed by ``d`` and ``f``.  The incumbent mapping is one
    feasible matching, so the returned objective is never lower.
    """
    t = _check_tensor(tensor)
    if free_dim not in _AXIS:
        raise ValueError(f"free_dim must be one of {FREE_DIMS}, got {free_dim!r}")
    current.validate(t.shape, complete=False)
    if not len(current):
        return current
    axis = _AXIS[free_dim]
    locked = [a for a in range(3) if a != axis]
    triples = np.array(current.triples)
    p0, p1 = triples[:, locked[0]], triples[:, locked[1]]
    # rows: locked pairs d, columns: every index of the free dimension
    moved = np.moveaxis(t, (locked[0], locked[1], axis), (0, 1, 2))
    rewards = moved[p0, p1, :]
    pairs = solve_assignment(rewards)
    new = triples.copy()
    for d, f in pairs:
        new[d, axis] = f
    return Assignment3D(tuple(map(tuple, new.tolist())))


def mapping_steps(
    tensor,
    schedule: Sequence[FreeDim] = DEFAULT_SCHEDULE,
    start: Assignment3D | None = None,
) -> Iterator[Assignment3D]:
    """Yield the start mapping followed by the mapping after each solve."""
    t = _check_tensor(tensor)
    current = start if start is not None else initial_assignment(*t.shape)
    current.validate(t.shape)
    yield current
    for free_dim in schedule:
        current = reassign_one_dimension(t, current, free_dim)
        yield current


def optimize_3d(
    tensor,
    *,
    mode: Literal["paper", "converged"] = "paper",
    init: Literal["diagonal", "random"] = "diagonal",
    rng: np.random.Generator | None = None,
    max_cycles: int = 100,
    start: Assignment3D | None = None,
) -> Assignment3D:
    """Near-optimal complete 3D assignment maximising the tensor sum.

    ``mode="paper"`` runs the fixed five-solve schedule
    (subchannel, DUE, UUE, subchannel, DUE).  ``mode="converged"`` keeps
    cycling through all three dimensions until a full cycle improves the
    objective by less than 1e-9 (or ``max_cycles`` is reached).  An explicit
    ``start`` mapping overrides ``init``.
    """
    t = _check_tensor(tensor)
    if start is not None:
        pass
    elif init == "random":
        if rng is None:
            raise ValueError("init='random' needs an rng")
        start = random_initial_assignment(*t.shape, rng)
    else:
        start = initial_assignment(*t.shape)

    *_, current = mapping_steps(t, DEFAULT_SCHEDULE, start)
    if mode == "paper":
        return current
    if mode != "converged":
        raise ValueError(f"unknown mode {mode!r}")
    best = current.objective(t)
    for _ in range(max_cycles):
        *_, current = mapping_steps(t, FREE_DIMS, current)
        value = current.objective(t)
        if value - best < CONVERGED_TOL:
            break
        best = value
    return current


def count_complete_assignments(m_count: int, n_count: int, k_count: int) -> int:
    """Number of complete assignments: P(M,L) P(N,L) P(K,L) / L!, L = min(M,N,K)."""
    m_count, n_count, k_count = int(m_count), int(n_count), int(k_count)
    size = min(m_count, n_count, k_count)
    return math.perm(m_count, size) * math.perm(n_count, size) * math.perm(k_count, size) // math.factorial(size)


def iter_complete_assignments(m_count: int, n_count: int, k_count: int) -> Iterator[Assignment3D]:
    """Enumerate every complete assignment exactly once (brute force)."""
    shape = (int(m_count), int(n_count), int(k_count))
    size = min(shape)
    base = int(np.argmin(shape))
    others = [a for a in range(3) if a != base]
    for base_ix in itertools.combinations(range(shape[base]), size):
        for ix1 in itertools.permutations(range(shape[others[0]]), size):
            for ix2 in itertools.permutations(range(shape[others[1]]), size):
                cols = [None, None, None]
                cols[base], cols[others[0]], cols[others[1]] = base_ix, ix1, ix2
                yield Assignment3D(tuple(zip(*cols)))


def exhaustive_assignment(tensor, max_count: int = 5_000_000) -> Assignment3D:
    """Exact maximiser of the tensor sum over all complete assignments.

    Enumerates every assignment (vectorised over the last free axis), so it is
    only usable on small instances; ``max_count`` guards against blow-up.
    """
    t = _check_tensor(tensor)
    shape = t.shape
    total = count_complete_assignments(*shape)
    if total > max_count:
        raise ValueError(f"{total} complete assignments exceed the cap of {max_count}")
    size = min(shape)
    base = int(np.argmin(shape))
    o1, o2 = [a for a in range(3) if a != base]
    moved = np.moveaxis(t, (base, o1, o2), (0, 1, 2))
    perms2 = np.array(list(itertools.permutations(range(shape[o2]), size)), dtype=np.int64)
    best_val, best = -np.inf, None
    for base_ix in itertools.combinations(range(shape[base]), size):
        b = np.array(base_ix)
        for ix1 in itertools.permutations(range(shape[o1]), size):
            sub = moved[b, np.array(ix1), :]  # (size, shape[o2])
            vals = sub[np.arange(size), perms2].sum(axis=1)
            j = int(np.argmax(vals))
            if vals[j] > best_val:
                best_val = vals[j]
                best = (b, np.array(ix1), perms2[j])
    cols = [None, None, None]
    cols[base], cols[o1], cols[o2] = best
    return Assignment3D(tuple(zip(*(c.tolist() for c in cols))))
