"""Problem instances, solutions and rate arithmetic for the FD-BS OFDMA system.

Index conventions: ``m`` is an uplink user (UUE), ``n`` a downlink user (DUE)
and ``k`` a subchannel, all zero-based.  Powers and noise variances are linear
watts, channel gains are linear power gains, and rates are spectral
efficiencies in bits/s/Hz (log base 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

Triple = tuple[int, int, int]

BUDGET_RTOL = 1e-6
LN2 = math.log(2.0)


class ScenarioError(ValueError):
    """Raised when a scenario violates its structural invariants."""


class AssignmentError(ValueError):
    """Raised when a 3D assignment breaks exclusivity or index ranges."""


def _as_gain_array(name: str, values, shape: tuple[int, ...]) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{name}: not a numeric array ({exc})") from None
    if arr.shape != shape:
        raise ScenarioError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{name}: entries must be finite")
    if np.any(arr < 0):
        raise ScenarioError(f"{name}: entries must be >= 0")
    arr.setflags(write=False)
    return arr


def _positive(name: str, value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{name}: expected a number, got {value!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise ScenarioError(f"{name}: must be finite and > 0, got {value!r}")
    return value


def _count(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ScenarioError(f"{name}: must be a positive integer, got {value!r}")
    return int(value)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A complete problem instance.

    Gain arrays are indexed ``gain_up[m, k]``, ``gain_down[n, k]`` and
    ``gain_cross[m, n, k]`` (UUE m interfering at DUE n on subchannel k).
    Arrays are copied and frozen on construction.
    """

    m_count: int
    n_count: int
    k_count: int
    gain_up: np.ndarray
    gain_down: np.ndarray
    gain_cross: np.ndarray
    sigma_si_sq: float
    sigma_bs_sq: float
    sigma_due_sq: float
    p_bs_max: float
    p_uue_max: np.ndarray

    def __post_init__(self) -> None:
        m = _count("m_count", self.m_count)
        n = _count("n_count", self.n_count)
        k = _count("k_count", self.k_count)
        setter = object.__setattr__
        setter(self, "m_count", m)
        setter(self, "n_count", n)
        setter(self, "k_count", k)
        setter(self, "gain_up", _as_gain_array("gain_up", self.gain_up, (m, k)))
        setter(self, "gain_down", _as_gain_array("gain_down", self.gain_down, (n, k)))
        setter(self, "gain_cross", _as_gain_array("gain_cross", self.gain_cross, (m, n, k)))
        for name in ("sigma_si_sq", "sigma_bs_sq", "sigma_due_sq", "p_bs_max"):
            setter(self, name, _positive(name, getattr(self, name)))
        budgets = np.array(self.p_uue_max, dtype=float).reshape(-1)
        if budgets.shape != (m,):
            raise ScenarioError(f"p_uue_max: expected {m} entries, got {budgets.size}")
        if not np.all(np.isfinite(budgets)) or np.any(budgets <= 0):
            raise ScenarioError("p_uue_max: every entry must be finite and > 0")
        budgets.setflags(write=False)
        setter(self, "p_uue_max", budgets)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.m_count, self.n_count, self.k_count)

    @property
    def n_slots(self) -> int:
        """Number of triples in a complete assignment, min(M, N, K)."""
        return min(self.shape)

    @property
    def uplink_noise(self) -> float:
        return self.sigma_si_sq + self.sigma_bs_sq

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.sigma_si_sq == other.sigma_si_sq
            and self.sigma_bs_sq == other.sigma_bs_sq
            and self.sigma_due_sq == other.sigma_due_sq
            and self.p_bs_max == other.p_bs_max
            and np.array_equal(self.p_uue_max, other.p_uue_max)
            and np.array_equal(self.gain_up, other.gain_up)
            and np.array_equal(self.gain_down, other.gain_down)
            and np.array_equal(self.gain_cross, other.gain_cross)
        )

    __hash__ = None  # type: ignore[assignment]

    def with_budgets(self, p_bs_max: float, p_uue_max: Sequence[float] | float) -> "Scenario":
        """Copy of this instance with different power budgets."""
        budgets = np.broadcast_to(np.asarray(p_uue_max, dtype=float), (self.m_count,))
        return Scenario(
            self.m_count, self.n_count, self.k_count,
            self.gain_up, self.gain_down, self.gain_cross,
            self.sigma_si_sq, self.sigma_bs_sq, self.sigma_due_sq,
            p_bs_max, budgets,
        )


@dataclass(frozen=True)
class Assignment3D:
    """Support of the binary assignment tensor as a sorted tuple of (m, n, k)."""

    triples: tuple[Triple, ...] = ()

    def __post_init__(self) -> None:
        triples = tuple(sorted((int(m), int(n), int(k)) for m, n, k in self.triples))
        object.__setattr__(self, "triples", triples)
        for axis, label in enumerate(("m", "n", "k")):
            used = [t[axis] for t in triples]
            if len(set(used)) != len(used):
                raise AssignmentError(f"index {label} used by more than one triple: {triples}")
            if any(i < 0 for i in used):
                raise AssignmentError(f"negative {label} index in {triples}")

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    def __contains__(self, triple) -> bool:
        return tuple(triple) in self.triples

    def validate(self, shape: tuple[int, int, int], complete: bool = True) -> None:
        """Check index ranges against ``shape`` and, optionally, completeness."""
        for t in self.triples:
            if any(i >= d for i, d in zip(t, shape)):
                raise AssignmentError(f"triple {t} out of range for shape {shape}")
        if complete and len(self.triples) != min(shape):
            raise AssignmentError(
                f"complete assignment needs {min(shape)} triples, got {len(self.triples)}"
            )

    def objective(self, tensor: np.ndarray) -> float:
        """Sum of ``tensor[m, n, k]`` over the assigned triples."""
        if not self.triples:
            return 0.0
        m, n, k = (np.array(ix) for ix in zip(*self.triples))
        return float(np.sum(tensor[m, n, k]))

    @classmethod
    def from_arrays(cls, m: Iterable[int], n: Iterable[int], k: Iterable[int]) -> "Assignment3D":
        return cls(tuple(zip(m, n, k)))


@dataclass(frozen=True)
class PairPowers:
    """Uplink and downlink transmit power (watts) on one assigned triple."""

    p_up: float = 0.0
    p_down: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p_up", "p_down"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
            object.__setattr__(self, name, value)


@dataclass
class Diagnostics:
    iterations: int = 0
    dual_gap: float = float("nan")
    dual_value: float = float("nan")
    wall_time_s: float = 0.0
    converged: bool = False


@dataclass
class AllocationResult:
    assignment: Assignment3D
    powers: dict[Triple, PairPowers]
    per_pair_rate: dict[Triple, float]
    sum_rate: float
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def __post_init__(self) -> None:
        missing = set(self.powers) - set(self.assignment.triples)
        if missing:
            raise AssignmentError(f"powers given for unassigned triples {sorted(missing)}")


# -- rate arithmetic -------------------------------------------------------

def _check_power(name: str, p: float) -> None:
    if not p >= 0 or not math.isfinite(p):
        raise ValueError(f"{name} must be finite and >= 0, got {p!r}")


def _check_variance(name: str, v: float) -> None:
    if not v > 0 or not math.isfinite(v):
        raise ValueError(f"{name} must be finite and > 0, got {v!r}")


def uplink_rate(p_up: float, gain_up: float, sigma_si_sq: float, sigma_bs_sq: float) -> float:
    """Uplink spectral efficiency at the BS, log2(1 + p g / (sigma_D^2 + sigma_B^2))."""
    _check_power("p_up", p_up)
    _check_variance("sigma_si_sq", sigma_si_sq)
    _check_variance("sigma_bs_sq", sigma_bs_sq)
    return math.log1p(p_up * gain_up / (sigma_si_sq + sigma_bs_sq)) / LN2


def downlink_rate(
    p_down: float, p_up: float, gain_down: float, gain_cross: float, sigma_due_sq: float
) -> float:
    """Downlink spectral efficiency at a DUE, treating the co-channel UUE as noise."""
    _check_power("p_down", p_down)
    _check_power("p_up", p_up)
    _check_variance("sigma_due_sq", sigma_due_sq)
    return math.log1p(p_down * gain_down / (p_up * gain_cross + sigma_due_sq)) / LN2


def pair_rate(scenario: Scenario, triple: Triple, powers: PairPowers) -> float:
    """Uplink plus downlink rate of one (m, n, k) triple."""
    m, n, k = triple
    if not (0 <= m < scenario.m_count and 0 <= n < scenario.n_count and 0 <= k < scenario.k_count):
        raise IndexError(f"triple {triple} out of range for shape {scenario.shape}")
    up = uplink_rate(powers.p_up, scenario.gain_up[m, k], scenario.sigma_si_sq, scenario.sigma_bs_sq)
    down = downlink_rate(
        powers.p_down, powers.p_up, scenario.gain_down[n, k],
        scenario.gain_cross[m, n, k], scenario.sigma_due_sq,
    )
    return up + down


def total_rate(
    scenario: Scenario, assignment: Assignment3D, powers: Mapping[Triple, PairPowers]
) -> float:
    """Sum throughput of an assignment under the given per-triple powers."""
    total = 0.0
    for triple in assignment:
        if triple not in powers:
            raise KeyError(f"no powers given for assigned triple {triple}")
        total += pair_rate(scenario, triple, powers[triple])
    return total


def rate_tensor(scenario: Scenario, p_up, p_down) -> np.ndarray:
    """Vectorised pair rate for every (m, n, k), powers broadcast to (M, N, K)."""
    p_up = np.broadcast_to(np.asarray(p_up, dtype=float), scenario.shape)
    p_down = np.broadcast_to(np.asarray(p_down, dtype=float), scenario.shape)
    up = np.log1p(p_up * scenario.gain_up[:, None, :] / scenario.uplink_noise) / LN2
    sinr = p_down * scenario.gain_down[None, :, :] / (
        p_up * scenario.gain_cross + scenario.sigma_due_sq
    )
    return up + np.log1p(sinr) / LN2


def build_result(
    scenario: Scenario,
    assignment: Assignment3D,
    powers: Mapping[Triple, PairPowers],
    diagnostics: Diagnostics | None = None,
) -> AllocationResult:
    """Evaluate rates for ``powers`` on ``assignment`` and package the result."""
    per_pair = {t: pair_rate(scenario, t, powers[t]) for t in assignment}
    return AllocationResult(
        assignment=assignment,
        powers={t: powers[t] for t in assignment},
        per_pair_rate=per_pair,
        sum_rate=math.fsum(per_pair.values()),
        diagnostics=diagnostics or Diagnostics(),
    )


# -- budget bookkeeping ----------------------------------------------------

@dataclass(frozen=True)
class BudgetUsage:
    consumed: float
    budget: float
    satisfied: bool


@dataclass(frozen=True)
class BudgetReport:
    bs: BudgetUsage
    uue: tuple[BudgetUsage, ...]

    @property
    def feasible(self) -> bool:
        return self.bs.satisfied and all(u.satisfied for u in self.uue)


def _usage(consumed: float, budget: float, rtol: float) -> BudgetUsage:
    return BudgetUsage(consumed, budget, consumed <= budget * (1.0 + rtol))


def consumed_power(
    scenario: Scenario, assignment: Assignment3D, powers: Mapping[Triple, PairPowers]
) -> tuple[float, np.ndarray]:
    """BS downlink power and per-UUE uplink power spent on assigned triples."""
    bs = math.fsum(powers[t].p_down for t in assignment if t in powers)
    uue = np.zeros(scenario.m_count)
    for t in assignment:
        if t in powers:
            uue[t[0]] += powers[t].p_up
    return bs, uue


def check_budgets(
    scenario: Scenario,
    assignment: Assignment3D,
    powers: Mapping[Triple, PairPowers],
    rtol: float = BUDGET_RTOL,
) -> BudgetReport:
    """Report BS and per-UUE power consumption against their budgets."""
    bs, uue = consumed_power(scenario, assignment, powers)
    return BudgetReport(
        bs=_usage(bs, scenario.p_bs_max, rtol),
        uue=tuple(_usage(float(c), float(b), rtol) for c, b in zip(uue, scenario.p_uue_max)),
    )
