"""Reference schemes: equal power, exhaustive search, random and greedy mapping."""
from __future__ import annotations

import math
from typing import Literal

import numpy as np

from . import mapping3d
from .model import (
    AllocationResult,
    Assignment3D,
    PairPowers,
    Scenario,
    Triple,
    build_result,
    rate_tensor,
)

PowersRule = Literal["equal", "grid"]

EXHAUSTIVE_MAX_SLOTS = 6
EXHAUSTIVE_MAX_COUNT = 5_000_000


class ProblemTooLarge(ValueError):
    pass


def equal_power(scenario: Scenario, assignment: Assignment3D) -> dict[Triple, PairPowers]:
    """Each UUE at full budget; the BS budget split evenly over assigned triples."""
    if not len(assignment):
        return {}
    p_down = scenario.p_bs_max / len(assignment)
    return {t: PairPowers(float(scenario.p_uue_max[t[0]]), p_down) for t in assignment}


def equal_power_tensor(scenario: Scenario) -> np.ndarray:
    """Pair rate of every triple under equal power for a complete assignment."""
    p_up = scenario.p_uue_max[:, None, None]
    return rate_tensor(scenario, p_up, scenario.p_bs_max / scenario.n_slots)


def _check_exhaustive_size(scenario: Scenario) -> None:
    if scenario.n_slots > EXHAUSTIVE_MAX_SLOTS:
        raise ProblemTooLarge(
            f"exhaustive search limited to min(M,N,K) <= {EXHAUSTIVE_MAX_SLOTS}, "
            f"got {scenario.n_slots}"
        )
    count = mapping3d.count_complete_assignments(*scenario.shape)
    if count > EXHAUSTIVE_MAX_COUNT:
        raise ProblemTooLarge(f"{count} complete assignments exceed {EXHAUSTIVE_MAX_COUNT}")


# -- power-grid oracle ---------------------------------------------------------

def best_uplink_on_grid(scenario: Scenario, p_down: np.ndarray, up_points: int) -> np.ndarray:
    """max over a uniform p_up grid in [0, P_m] of the pair rate, per triple and p_down.

    Returns an (M, N, K, len(p_down)) array of rates in bits/s/Hz.
    """
    frac = np.linspace(0.0, 1.0, up_points)
    out = np.empty(scenario.shape + (len(p_down),))
    for m in range(scenario.m_count):
        u = scenario.p_uue_max[m] * frac  # (U,)
        up = np.log2(1.0 + u[None, :] * scenario.gain_up[m][:, None] / scenario.uplink_noise)  # (K, U)
        interf = u[None, None, :] * scenario.gain_cross[m][:, :, None] + scenario.sigma_due_sq  # (N, K, U)
        for j, d in enumerate(p_down):
            down = np.log2(1.0 + d * scenario.gain_down[:, :, None] / interf)
            out[m, :, :, j] = np.max(up[None, :, :] + down, axis=2)
    return out


def _best_split(tables: np.ndarray) -> float:
    """Max-plus combination of per-triple tables over BS power units.

    ``tables[i, j]`` is triple i's best rate with j grid units of BS power;
    the units spent across triples sum to the grid size.
    """
    units = tables.shape[1] - 1
    acc = tables[0]
    for row in tables[1:]:
        combined = np.full(units + 1, -np.inf)
        for j in range(units + 1):
            combined[j] = np.max(acc[: j + 1] + row[j::-1])
        acc = combined
    return float(acc[units])


def grid_oracle(
    scenario: Scenario, down_units: int = 400, up_points: int = 2001
) -> tuple[float, Assignment3D]:
    """Exhaustive assignment with gridded power search (joint upper reference).

    Every complete assignment is evaluated; within it the BS budget is split
    on a ``down_units`` grid across triples and each UUE's power is searched
    on ``up_points`` uniform levels in [0, P_m].
    """
    _check_exhaustive_size(scenario)
    p_down = scenario.p_bs_max * np.arange(down_units + 1) / down_units
    tables = best_uplink_on_grid(scenario, p_down, up_points)
    best_val, best = -math.inf, None
    for assignment in mapping3d.iter_complete_assignments(*scenario.shape):
        m, n, k = (np.array(ix) for ix in zip(*assignment.triples))
        value = _best_split(tables[m, n, k])
        if value > best_val:
            best_val, best = value, assignment
    return best_val, best


# -- schemes -------------------------------------------------------------------

def exhaustive_search(scenario: Scenario, powers_rule: PowersRule = "equal") -> AllocationResult:
    """Best complete assignment by enumeration under ``powers_rule``.

    ``"equal"`` uses :func:`equal_power`; ``"grid"`` is the power-grid joint
    oracle, whose reported powers are recovered on the same grid.
    """
    _check_exhaustive_size(scenario)
    if powers_rule == "equal":
        assignment = mapping3d.exhaustive_assignment(equal_power_tensor(scenario), EXHAUSTIVE_MAX_COUNT)
        return build_result(scenario, assignment, equal_power(scenario, assignment))
    if powers_rule == "grid":
        _, assignment = grid_oracle(scenario)
        return build_result(scenario, assignment, _grid_powers(scenario, assignment))
    raise ValueError(f"unknown powers rule {powers_rule!r}")


def _grid_powers(
    scenario: Scenario, assignment: Assignment3D, down_units: int = 400, up_points: int = 2001
) -> dict[Triple, PairPowers]:
    # brute-force the split for the chosen assignment; only used for reporting
    triples = assignment.triples
    p_down = scenario.p_bs_max * np.arange(down_units + 1) / down_units
    frac = np.linspace(0.0, 1.0, up_points)
    per_triple = []
    for m, n, k in triples:
        u = scenario.p_uue_max[m] * frac
        rate = (
            np.log2(1.0 + u * scenario.gain_up[m, k] / scenario.uplink_noise)[None, :]
            + np.log2(1.0 + p_down[:, None] * scenario.gain_down[n, k]
                      / (u[None, :] * scenario.gain_cross[m, n, k] + scenario.sigma_due_sq))
        )
        per_triple.append((rate.max(axis=1), u[rate.argmax(axis=1)]))
    best_val, best_units = -math.inf, None
    for units in _compositions(down_units, len(triples)):
        val = sum(per_triple[i][0][j] for i, j in enumerate(units))
        if val > best_val:
            best_val, best_units = val, units
    return {
        t: PairPowers(float(per_triple[i][1][j]), float(p_down[j]))
        for i, (t, j) in enumerate(zip(triples, best_units))
    }


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def random_mapping(scenario: Scenario, seed) -> Assignment3D:
    """Uniformly random complete assignment."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return mapping3d.random_initial_assignment(*scenario.shape, rng)


def greedy_mapping(
    scenario: Scenario,
    powers_rule: PowersRule = "equal",
    order: np.ndarray | None = None,
) -> Assignment3D:
    """UUEs in turn grab their best free (DUE, subchannel) pair.

    ``order`` overrides the ascending UUE order.
    """
    if powers_rule != "equal":
        raise ValueError("greedy mapping supports the 'equal' powers rule only")
    rates = equal_power_tensor(scenario)
    free = np.ones((scenario.n_count, scenario.k_count), dtype=bool)
    due_free = np.ones(scenario.n_count, dtype=bool)
    sub_free = np.ones(scenario.k_count, dtype=bool)
    triples = []
    for m in (range(scenario.m_count) if order is None else order):
        if len(triples) == scenario.n_slots:
            break
        masked = np.where(free, rates[m], -np.inf)
        n, k = np.unravel_index(int(np.argmax(masked)), masked.shape)
        triples.append((int(m), int(n), int(k)))
        due_free[n] = False
        sub_free[k] = False
        free = due_free[:, None] & sub_free[None, :]
    return Assignment3D(tuple(triples))


def proposed_mapping_equal_power(scenario: Scenario) -> AllocationResult:
    """Alternating-Hungarian mapping on the equal-power rate tensor."""
    assignment = mapping3d.optimize_3d(equal_power_tensor(scenario))
    return build_result(scenario, assignment, equal_power(scenario, assignment))
