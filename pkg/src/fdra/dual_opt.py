"""Joint power allocation and 3D mapping by projected dual subgradient descent.

At fixed multipliers (one per UUE budget plus one for the BS budget) every
triple's power problem is solved in closed form, the per-triple Lagrangian
values form a reward tensor, and the 3D mapping picks the triples.  The
multipliers then move along the budget-slack subgradient with a diminishing
step ``step0 / sqrt(l)``.

Internally the dual function and all prices are in nats; sum rates in the
returned :class:`AllocationResult` are bits/s/Hz.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from . import mapping3d
from .hungarian import assignment_value, solve_assignment
from .model import (
    AllocationResult,
    Assignment3D,
    Diagnostics,
    PairPowers,
    Scenario,
    Triple,
    build_result,
)
from .power_kkt import DUAL_FLOOR, solve_pair_batch

LN2 = math.log(2.0)

MappingMode = Literal["heuristic", "exhaustive"]


@dataclass(frozen=True)
class DualOptions:
    max_iters: int = 500
    tol: float = 1e-4
    step0: float | None = None
    lambda_bs0: float | None = None
    lambda_uue0: tuple[float, ...] | float | None = None
    mapping_mode: MappingMode = "heuristic"
    warm_start: Literal["equal_power", "none"] = "equal_power"
    polish_top: int = 3

    def __post_init__(self) -> None:
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise ValueError(f"dual.max_iters: must be an integer >= 1, got {self.max_iters!r}")
        if not self.tol >= 0:
            raise ValueError(f"dual.tol: must be >= 0, got {self.tol!r}")
        if self.step0 is not None and not self.step0 > 0:
            raise ValueError(f"dual.step0: must be > 0, got {self.step0!r}")
        if self.mapping_mode not in ("heuristic", "exhaustive"):
            raise ValueError(f"dual.mapping_mode: unknown mode {self.mapping_mode!r}")
        if self.warm_start not in ("equal_power", "none"):
            raise ValueError(f"dual.warm_start: unknown option {self.warm_start!r}")
        if not isinstance(self.polish_top, int) or self.polish_top < 0:
            raise ValueError(f"dual.polish_top: must be an integer >= 0, got {self.polish_top!r}")


@dataclass(frozen=True)
class DualState:
    lambda_uue: np.ndarray
    lambda_bs: float
    step0: float
    iteration: int = 1
    best_primal: AllocationResult | None = None

    def __post_init__(self) -> None:
        lam = np.array(self.lambda_uue, dtype=float)
        if np.any(lam < 0) or self.lambda_bs < 0:
            raise ValueError("dual multipliers must be >= 0")
        if self.iteration < 1:
            raise ValueError("iteration counter starts at 1")
        lam.setflags(write=False)
        object.__setattr__(self, "lambda_uue", lam)

    @property
    def step(self) -> float:
        """Current step size, step0 / sqrt(iteration)."""
        return self.step0 / math.sqrt(self.iteration)


@dataclass
class DualEvaluation:
    assignment: Assignment3D
    powers: dict[Triple, PairPowers]
    dual_value: float  # g(lambda), nats
    dual_bound: float  # upper bound on g(lambda), nats
    consumed_bs_power: float
    consumed_uue_power: np.ndarray
    slack_bs: float  # P_b - consumed, the BS subgradient component
    slack_uue: np.ndarray = field(default_factory=lambda: np.zeros(0))


def pair_coefficients(scenario: Scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalised gains broadcastable to (M, N, K): uplink, downlink, cross."""
    a_mb = (scenario.gain_up / scenario.uplink_noise)[:, None, :]
    a_bn = (scenario.gain_down / scenario.sigma_due_sq)[None, :, :]
    a_mn = scenario.gain_cross / scenario.sigma_due_sq
    return a_mb, a_bn, a_mn


def initial_state(scenario: Scenario, options: DualOptions = DualOptions()) -> DualState:
    """Budget-scaled starting multipliers.

    ``lambda_b = L / P_b`` (water level that spreads the BS budget over the
    ``L`` assigned subchannels) and ``lambda_m = 1 / P_m`` (each UUE transmits
    on one subchannel).  Default ``step0`` is a tenth of the largest
    ``lambda_j / budget_j``, so one budget's worth of slack moves a price by
    about 10 % of its starting value.
    """
    if options.lambda_bs0 is not None:
        lam_b = float(options.lambda_bs0)
    else:
        lam_b = scenario.n_slots / scenario.p_bs_max
    if options.lambda_uue0 is not None:
        lam_m = np.broadcast_to(np.asarray(options.lambda_uue0, dtype=float), (scenario.m_count,))
    else:
        lam_m = 1.0 / scenario.p_uue_max
    if options.step0 is not None:
        step0 = float(options.step0)
    else:
        ratios = np.concatenate(([lam_b / scenario.p_bs_max], lam_m / scenario.p_uue_max))
        step0 = float(np.max(ratios)) / 10.0
    return DualState(np.array(lam_m, dtype=float), lam_b, step0)


def mapping_upper_bound(values: np.ndarray) -> float:
    """Upper bound on the best complete-assignment sum of a nonnegative tensor.

    Dropping the exclusivity of one dimension leaves a 2D assignment over the
    other two with rewards maximised along the dropped axis; each of the
    three relaxations bounds the 3D optimum and the smallest is returned.
    """
    bounds = []
    for axis in range(3):
        rewards = values.max(axis=axis)
        bounds.append(assignment_value(rewards, solve_assignment(rewards)))
    return float(min(bounds))


def _map(values: np.ndarray, mode: MappingMode, warm: Assignment3D | None) -> Assignment3D:
    if mode == "exhaustive":
        return mapping3d.exhaustive_assignment(values)
    best = mapping3d.optimize_3d(values)
    if warm is not None:
        other = mapping3d.optimize_3d(values, start=warm)
        if other.objective(values) > best.objective(values):
            best = other
    return best


def evaluate_dual(
    scenario: Scenario,
    state: DualState,
    mapping_mode: MappingMode = "heuristic",
    coefficients=None,
    warm_start: Assignment3D | None = None,
) -> DualEvaluation:
    """Dual function value and its maximiser at the multipliers in ``state``."""
    a_mb, a_bn, a_mn = coefficients if coefficients is not None else pair_coefficients(scenario)
    lam_m = np.maximum(state.lambda_uue, DUAL_FLOOR)[:, None, None]
    lam_b = max(state.lambda_bs, DUAL_FLOOR)
    p_up, p_down, values, _ = solve_pair_batch(a_mb, a_bn, a_mn, lam_m, lam_b)

    assignment = _map(values, mapping_mode, warm_start)
    m, n, k = (np.array(ix, dtype=np.int64) for ix in zip(*assignment.triples))
    powers = {
        t: PairPowers(float(p_up[t]), float(p_down[t])) for t in assignment.triples
    }
    consumed_bs = float(np.sum(p_down[m, n, k]))
    consumed_uue = np.zeros(scenario.m_count)
    np.add.at(consumed_uue, m, p_up[m, n, k])
    constant = float(np.dot(state.lambda_uue, scenario.p_uue_max)) + state.lambda_bs * scenario.p_bs_max
    dual_value = float(np.sum(values[m, n, k])) + constant
    if mapping_mode == "exhaustive":
        dual_bound = dual_value
    else:
        dual_bound = mapping_upper_bound(values) + constant
    return DualEvaluation(
        assignment=assignment,
        powers=powers,
        dual_value=dual_value,
        dual_bound=dual_bound,
        consumed_bs_power=consumed_bs,
        consumed_uue_power=consumed_uue,
        slack_bs=scenario.p_bs_max - consumed_bs,
        slack_uue=scenario.p_uue_max - consumed_uue,
    )


def update_duals(state: DualState, evaluation: DualEvaluation) -> DualState:
    """One projected subgradient step on every multiplier; advances ``iteration``."""
    step = state.step
    lam_b = max(0.0, state.lambda_bs - step * evaluation.slack_bs)
    lam_m = np.maximum(0.0, state.lambda_uue - step * evaluation.slack_uue)
    return replace(state, lambda_uue=lam_m, lambda_bs=lam_b, iteration=state.iteration + 1)


def scaled_subgradient_norm(scenario: Scenario, state: DualState, evaluation: DualEvaluation) -> float:
    """Budget-normalised norm of the projected subgradient.

    Components whose multiplier sits at zero with positive slack cannot move
    and are excluded.
    """
    g = np.concatenate((
        [evaluation.slack_bs / scenario.p_bs_max],
        evaluation.slack_uue / scenario.p_uue_max,
    ))
    lam = np.concatenate(([state.lambda_bs], state.lambda_uue))
    g = np.where((lam <= 0) & (g > 0), 0.0, g)
    return float(np.linalg.norm(g))


def project_to_budgets(
    scenario: Scenario, evaluation: DualEvaluation
) -> dict[Triple, PairPowers]:
    """Feasible powers from a dual point.

    Each UUE's powers are scaled down onto its budget where exceeded.  BS
    powers are scaled to spend exactly ``P_b``: raising a downlink power only
    raises that triple's rate, so an under-spent BS budget is never better.
    If the dual point spends no BS power at all, ``P_b`` is split evenly.
    """
    consumed_bs = evaluation.consumed_bs_power
    n = len(evaluation.powers)
    with np.errstate(divide="ignore"):
        uue_scale = np.where(
            evaluation.consumed_uue_power > 0,
            np.minimum(1.0, scenario.p_uue_max / evaluation.consumed_uue_power),
            1.0,
        )
    out = {}
    for t, p in evaluation.powers.items():
        p_down = p.p_down * scenario.p_bs_max / consumed_bs if consumed_bs > 0 else scenario.p_bs_max / n
        out[t] = PairPowers(p.p_up * float(uue_scale[t[0]]), p_down)
    return out


def optimize_powers(
    scenario: Scenario, assignment: Assignment3D, iters: int = 60
) -> dict[Triple, PairPowers]:
    """Near-optimal powers for a fixed assignment.

    In a complete assignment each UUE owns one triple, so its budget is a box
    on that triple's uplink power and only the BS budget couples triples.
    Bisection on the BS price (log scale) finds where the per-triple optimal
    downlink powers spend ``P_b``; the result is then scaled onto ``P_b``
    exactly.
    """
    if not len(assignment):
        return {}
    m, n, k = (np.array(ix, dtype=np.int64) for ix in zip(*assignment.triples))
    if len(set(m.tolist())) != len(m):
        raise ValueError("optimize_powers needs each UUE in at most one triple")
    a_mb, a_bn, a_mn = pair_coefficients(scenario)
    A = a_mb[m, 0, k]
    B = a_bn[0, n, k]
    C = a_mn[m, n, k]
    cap = scenario.p_uue_max[m]

    def spend(lam_b):
        u, d, _, _ = solve_pair_batch(A, B, C, 0.0, lam_b, p_up_max=cap)
        return u, d

    lo = hi = len(m) / scenario.p_bs_max
    while spend(lo)[1].sum() < scenario.p_bs_max and lo > DUAL_FLOOR:
        lo /= 4.0
    while spend(hi)[1].sum() > scenario.p_bs_max:
        hi *= 4.0
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if spend(mid)[1].sum() > scenario.p_bs_max:
            lo = mid
        else:
            hi = mid
    u, d = spend(hi)
    total = d.sum()
    d = d * (scenario.p_bs_max / total) if total > 0 else np.full(len(m), scenario.p_bs_max / len(m))
    return {
        t: PairPowers(float(u[i]), float(d[i])) for i, t in enumerate(assignment.triples)
    }


def solve_joint(scenario: Scenario, options: DualOptions = DualOptions()) -> AllocationResult:
    """Joint 3D mapping and power allocation for ``scenario``.

    The subgradient loop runs until ``options.max_iters`` or until the scaled
    subgradient norm drops below ``options.tol``.  At each dual point the 3D
    mapping is solved from the diagonal start and from the previous iterate's
    mapping (the first iterate is warm-started from the equal-power mapping
    when ``options.warm_start == "equal_power"``), keeping the better one.

    Primal recovery: every visited dual point yields a feasible allocation via
    :func:`project_to_budgets`.  The ``options.polish_top`` best distinct
    assignments seen, plus the warm-start mapping, are then re-powered with
    :func:`optimize_powers`; the best feasible allocation is returned.
    ``diagnostics.dual_value`` is the smallest upper bound on ``g`` over the
    visited multipliers (``g`` itself under exhaustive mapping), so it bounds
    the optimal sum rate from above; ``diagnostics.dual_gap`` is that value
    minus ``sum_rate``, both in bits/s/Hz.
    """
    started = time.perf_counter()
    coefficients = pair_coefficients(scenario)
    state = initial_state(scenario, options)
    candidates: dict[Assignment3D, float] = {}
    best: AllocationResult | None = None
    best_dual = math.inf
    converged = False
    iterations = 0

    warm = None
    if options.warm_start == "equal_power":
        from .baselines import equal_power_tensor

        warm = mapping3d.optimize_3d(equal_power_tensor(scenario))
    start_mapping = warm

    for _ in range(options.max_iters):
        evaluation = evaluate_dual(
            scenario, state, options.mapping_mode, coefficients, warm_start=warm
        )
        warm = evaluation.assignment
        iterations += 1
        best_dual = min(best_dual, evaluation.dual_bound)
        candidate = build_result(
            scenario, evaluation.assignment, project_to_budgets(scenario, evaluation)
        )
        key = evaluation.assignment
        candidates[key] = max(candidates.get(key, -math.inf), candidate.sum_rate)
        if best is None or candidate.sum_rate > best.sum_rate:
            best = candidate
            state = replace(state, best_primal=best)
        if scaled_subgradient_norm(scenario, state, evaluation) < options.tol:
            converged = True
            break
        state = update_duals(state, evaluation)

    ranked = sorted(candidates, key=lambda a: (-candidates[a], a.triples))
    polish = ranked[: options.polish_top]
    if start_mapping is not None and start_mapping not in polish:
        polish.append(start_mapping)
    for assignment in polish:
        polished = build_result(scenario, assignment, optimize_powers(scenario, assignment))
        if polished.sum_rate > best.sum_rate:
            best = polished

    best.diagnostics = Diagnostics(
        iterations=iterations,
        dual_value=best_dual / LN2,
        dual_gap=best_dual / LN2 - best.sum_rate,
        wall_time_s=time.perf_counter() - started,
        converged=converged,
    )
    return best
