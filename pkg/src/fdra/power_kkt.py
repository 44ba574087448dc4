"""Closed-form power allocation for one (m, n, k) triple at fixed dual prices.

For a triple with normalised gains ``a_mb`` (uplink SNR per watt), ``a_bn``
(downlink SNR per watt) and ``a_mn`` (UUE-to-DUE interference per watt), the
per-triple Lagrangian is

    f(u, d) = ln(1 + u a_mb) + ln(1 + d a_bn / (u a_mn + 1)) - lam_m u - lam_b d

over ``u = p_up >= 0`` and ``d = p_down >= 0``.  All algebra is in nats.  The
maximiser is found by enumerating the stationary points of the four
sign patterns (both powers positive, uplink only, downlink only, neither)
and keeping the best objective.

Every routine works elementwise on broadcastable numpy arrays so the dual
loop can solve all M*N*K triples at once; the scalar helpers below wrap them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PairPowers

DUAL_FLOOR = 1e-12
LEADING_COEF_RTOL = 1e-14

CASE_BOTH = 1
CASE_UP_ONLY = 2
CASE_DOWN_ONLY = 3
CASE_OFF = 4


@dataclass(frozen=True)
class PairCoefficients:
    a_mb: float
    a_bn: float
    a_mn: float
    lambda_m: float
    lambda_b: float

    def __post_init__(self) -> None:
        for name in ("a_mb", "a_bn"):
            value = float(getattr(self, name))
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        for name in ("a_mn", "lambda_m", "lambda_b"):
            value = float(getattr(self, name))
            if not (value >= 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

    @classmethod
    def from_gains(
        cls,
        gain_up: float,
        gain_down: float,
        gain_cross: float,
        sigma_si_sq: float,
        sigma_bs_sq: float,
        sigma_due_sq: float,
        lambda_m: float,
        lambda_b: float,
    ) -> "PairCoefficients":
        return cls(
            gain_up / (sigma_si_sq + sigma_bs_sq),
            gain_down / sigma_due_sq,
            gain_cross / sigma_due_sq,
            lambda_m,
            lambda_b,
        )

    def floored(self) -> tuple[float, float]:
        return max(self.lambda_m, DUAL_FLOOR), max(self.lambda_b, DUAL_FLOOR)


@dataclass(frozen=True)
class PairSolution:
    powers: PairPowers
    case: int
    value: float


# -- vectorised kernels ------------------------------------------------------

def objective(a_mb, a_bn, a_mn, lam_m, lam_b, p_up, p_down):
    """Per-triple Lagrangian value in nats (elementwise)."""
    return (
        np.log1p(p_up * a_mb)
        + np.log1p(p_down * a_bn / (p_up * a_mn + 1.0))
        - lam_m * p_up
        - lam_b * p_down
    )


def _grad(a_mb, a_bn, a_mn, lam_m, lam_b, p_up, p_down):
    """Partial derivatives (df/dp_up, df/dp_down) of the per-triple Lagrangian."""
    inner = 1.0 + p_up * a_mn
    total = inner + p_down * a_bn
    d_down = a_bn / total - lam_b
    d_up = (
        a_mb / (1.0 + p_up * a_mb)
        - lam_m
        - p_down * a_bn * a_mn / (inner * total)
    )
    return d_up, d_down


def kkt_residuals(a_mb, a_bn, a_mn, lam_m, lam_b, p_up, p_down):
    """Residuals of the two interior stationarity equations.

    The first is the downlink condition written polynomially,
    ``1 + a_mn u + a_bn d - a_bn / lam_b``; the second is ``df/du``.
    """
    r_down = 1.0 + a_mn * p_up + p_down * a_bn - a_bn / lam_b
    r_up, _ = _grad(a_mb, a_bn, a_mn, lam_m, lam_b, p_up, p_down)
    return r_down, r_up


def case2_power(a_mb, lam_m):
    """Uplink-only water level ``1/lam_m - 1/a_mb`` (may be <= 0: infeasible)."""
    return 1.0 / lam_m - 1.0 / a_mb


def case3_power(a_bn, lam_b):
    """Downlink-only water level ``1/lam_b - 1/a_bn`` (may be <= 0: infeasible)."""
    return 1.0 / lam_b - 1.0 / a_bn


def uplink_from_downlink(a_bn, a_mn, lam_b, p_down):
    """Uplink power on the interior branch given the downlink power."""
    return (a_bn / lam_b - a_bn * p_down - 1.0) / a_mn


def case1_quadratic(a_mb, a_bn, a_mn, lam_m, lam_b):
    """Coefficients (c2, c1, c0) of the interior-point quadratic in p_down.

    Paired with :func:`uplink_from_downlink`, its positive roots are the
    interior stationary points.  Kept for cross-checking; the solver uses the
    equivalent, better conditioned form in :func:`case1_roots`.
    """
    A, B, C = a_mb, a_bn, a_mn
    q = 1.0 + A * B / (C * lam_b) - A / C
    c2 = lam_b * A * B - lam_m * B * B * A / C
    c1 = lam_m * B * B * A / (lam_b * C) + (lam_m * B - lam_b * C) * q - A * B
    c0 = A * B / lam_b - lam_m * B / lam_b * q
    return c2, c1, c0


def case1_roots(a_mb, a_bn, a_mn, lam_m, lam_b):
    """Both interior stationary points (p_up, p_down), NaN where absent.

    Substituting the downlink condition into the uplink one leaves a
    quadratic in ``u`` with ``kappa = lam_m - a_mn lam_b / a_bn``::

        kappa a_mb a_mn u^2 + kappa (a_mb + a_mn) u + kappa - (a_mb - a_mn) = 0

    and ``d = 1/lam_b - (1 + a_mn u) / a_bn``.  Its roots are exactly those of
    :func:`case1_quadratic` mapped through the uplink/downlink relation, but it
    is far better conditioned when the gains span many decades.  Returns
    arrays of shape ``(2,) + broadcast_shape``; only candidates with both
    powers strictly positive are kept.
    """
    A, B, C, lm, lb = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (a_mb, a_bn, a_mn, lam_m, lam_b))
    )
    kappa = lm - C * lb / B
    c2 = kappa * A * C
    c1 = kappa * (A + C)
    c0 = kappa - (A - C)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        scale = np.maximum(np.maximum(np.abs(c2), np.abs(c1)), np.abs(c0))
        linear = np.abs(c2) <= LEADING_COEF_RTOL * scale
        disc = c1 * c1 - 4.0 * c2 * c0
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        q = -0.5 * (c1 + np.copysign(sq, c1))
        u = np.stack([np.where(linear, -c0 / c1, q / c2), np.where(linear, np.nan, c0 / q)])
        d = 1.0 / lb - (1.0 + u * C) / B
    valid = (C > 0) & (u > 0) & (d > 0) & np.isfinite(u) & np.isfinite(d)
    return np.where(valid, u, np.nan), np.where(valid, d, np.nan)


def solve_pair_batch(a_mb, a_bn, a_mn, lam_m, lam_b, p_up_max=None):
    """Elementwise optimal (p_up, p_down, value, case) for the per-triple problem.

    Dual prices are floored at ``DUAL_FLOOR`` before use.  With ``a_mn == 0``
    the problem separates and the interior point is the pair of independent
    water levels.  ``p_up_max`` optionally boxes the uplink power; the box
    faces ``p_up = p_up_max`` (with the best downlink power there) are then
    added as candidates and any stationary point outside the box is dropped.
    Ties go to the earlier case in the order off, uplink-only, downlink-only,
    interior.
    """
    A, B, C, lm, lb = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (a_mb, a_bn, a_mn, lam_m, lam_b))
    )
    lm = np.maximum(lm, DUAL_FLOOR)
    lb = np.maximum(lb, DUAL_FLOOR)
    zeros = np.zeros(A.shape)
    nan = np.full(A.shape, np.nan)

    u2 = case2_power(A, lm)
    d3 = case3_power(B, lb)
    u1, d1 = case1_roots(A, B, C, lm, lb)
    separable = (C == 0) & (u2 > 0) & (d3 > 0)
    us = [zeros, np.where(u2 > 0, u2, nan), zeros, u1[0], u1[1], np.where(separable, u2, nan)]
    ds = [zeros, zeros, np.where(d3 > 0, d3, nan), d1[0], d1[1], np.where(separable, d3, nan)]
    cases = [CASE_OFF, CASE_UP_ONLY, CASE_DOWN_ONLY, CASE_BOTH, CASE_BOTH, CASE_BOTH]
    if p_up_max is not None:
        cap = np.broadcast_to(np.asarray(p_up_max, dtype=float), A.shape)
        d_cap = 1.0 / lb - (1.0 + cap * C) / B
        us = [np.where(u <= cap, u, nan) for u in us] + [cap, cap]
        ds = ds + [zeros, np.where(d_cap > 0, d_cap, nan)]
        cases = cases + [CASE_UP_ONLY, CASE_BOTH]
    U = np.stack(us)
    D = np.stack(ds)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = objective(A, B, C, lm, lb, U, D)
    vals[np.isnan(vals)] = -np.inf
    pick = np.argmax(vals, axis=0)
    idx = (pick,) + tuple(np.indices(pick.shape, sparse=True))
    best_u, best_d, best_v = U[idx], D[idx], vals[idx]
    best_case = np.asarray(cases, dtype=np.int8)[pick]
    return best_u, best_d, best_v, best_case


# -- scalar API --------------------------------------------------------------

def dual_objective(coef: PairCoefficients, powers: PairPowers) -> float:
    """Per-triple Lagrangian (nats) at ``powers`` under ``coef``'s dual prices."""
    return float(
        objective(
            coef.a_mb, coef.a_bn, coef.a_mn, coef.lambda_m, coef.lambda_b,
            powers.p_up, powers.p_down,
        )
    )


def solve_case2(coef: PairCoefficients) -> PairPowers | None:
    """Uplink-only stationary point, or ``None`` when its power is not positive."""
    lam_m, _ = coef.floored()
    p_up = float(case2_power(coef.a_mb, lam_m))
    return PairPowers(p_up, 0.0) if p_up > 0 else None


def solve_case3(coef: PairCoefficients) -> PairPowers | None:
    """Downlink-only stationary point, or ``None`` when its power is not positive."""
    _, lam_b = coef.floored()
    p_down = float(case3_power(coef.a_bn, lam_b))
    return PairPowers(0.0, p_down) if p_down > 0 else None


def solve_case1(coef: PairCoefficients) -> list[PairPowers]:
    """Interior stationary points with both powers positive (possibly none)."""
    if coef.a_mn <= 0:
        raise ValueError("interior case needs a_mn > 0; use the separable cases instead")
    lam_m, lam_b = coef.floored()
    u, d = case1_roots(coef.a_mb, coef.a_bn, coef.a_mn, lam_m, lam_b)
    out = []
    for ui, di in zip(u, d):
        if np.isfinite(ui) and np.isfinite(di):
            cand = PairPowers(float(ui), float(di))
            if cand not in out:
                out.append(cand)
    return out


def solve_pair(coef: PairCoefficients) -> PairSolution:
    """Best of the four KKT cases for one triple."""
    lam_m, lam_b = coef.floored()
    u, d, v, case = solve_pair_batch(coef.a_mb, coef.a_bn, coef.a_mn, lam_m, lam_b)
    return PairSolution(PairPowers(float(u), float(d)), int(case), float(v))
