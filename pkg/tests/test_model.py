import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fdra.model import (
    Assignment3D,
    AssignmentError,
    PairPowers,
    Scenario,
    ScenarioError,
    build_result,
    check_budgets,
    downlink_rate,
    pair_rate,
    rate_tensor,
    total_rate,
    uplink_rate,
)

from conftest import make_scenario, unit_scenario

pos = st.floats(1e-6, 1e3)
nonneg = st.floats(0.0, 1e3)


# -- rates ---------------------------------------------------------------------

def test_uplink_rate_values():
    assert uplink_rate(0.0, 5.0, 0.1, 0.2) == 0.0
    assert uplink_rate(1.0, 0.3, 0.1, 0.2) == pytest.approx(1.0)
    assert uplink_rate(2.0, 3.0, 0.5, 0.5) == pytest.approx(2.807354922057604, rel=1e-14)


def test_downlink_rate_values():
    assert downlink_rate(0.0, 3.0, 2.0, 1.0, 0.5) == 0.0
    assert downlink_rate(0.5, 0.0, 2.0, 7.0, 1.0) == pytest.approx(1.0)
    assert downlink_rate(1.0, 1.0, 4.0, 1.0, 1.0) == pytest.approx(1.584962500721156, rel=1e-14)


@pytest.mark.parametrize("bad", [
    lambda: uplink_rate(-1.0, 1.0, 1.0, 1.0),
    lambda: uplink_rate(1.0, 1.0, 0.0, 1.0),
    lambda: uplink_rate(1.0, 1.0, 1.0, -1.0),
    lambda: downlink_rate(-1.0, 0.0, 1.0, 1.0, 1.0),
    lambda: downlink_rate(1.0, -1.0, 1.0, 1.0, 1.0),
    lambda: downlink_rate(1.0, 0.0, 1.0, 1.0, 0.0),
])
def test_rate_domain_errors(bad):
    with pytest.raises(ValueError):
        bad()


@given(p=pos, g=pos, s1=pos, s2=pos)
def test_uplink_slope_matches_derivative(p, g, s1, s2):
    h = 1e-7 * p
    fd = (uplink_rate(p + h, g, s1, s2) - uplink_rate(p - h, g, s1, s2)) / (2 * h)
    exact = g / ((s1 + s2 + p * g) * math.log(2))
    assert fd == pytest.approx(exact, rel=1e-5, abs=1e-12)


@given(p1=nonneg, p2=nonneg, g=pos, s1=pos, s2=pos)
def test_uplink_monotone(p1, p2, g, s1, s2):
    lo, hi = sorted((p1, p2))
    assert 0 <= uplink_rate(lo, g, s1, s2) <= uplink_rate(hi, g, s1, s2)


@given(d=nonneg, u=pos, gd=pos, gc=pos, s=pos)
def test_interference_never_helps(d, u, gd, gc, s):
    assert downlink_rate(d, 0.0, gd, gc, s) >= downlink_rate(d, u, gd, gc, s)


# -- scenario ------------------------------------------------------------------

def test_scenario_validation_names_field():
    with pytest.raises(ScenarioError, match="gain_up"):
        unit_scenario(gain_up=np.ones((2, 1)))
    with pytest.raises(ScenarioError, match="gain_cross"):
        unit_scenario(gain_cross=-np.ones((1, 1, 1)))
    with pytest.raises(ScenarioError, match="sigma_bs_sq"):
        unit_scenario(sigma_bs_sq=0.0)
    with pytest.raises(ScenarioError, match="p_uue_max"):
        unit_scenario(p_uue_max=[0.0])
    with pytest.raises(ScenarioError, match="gain_down"):
        unit_scenario(gain_down=[[np.nan]])
    with pytest.raises(ScenarioError, match="m_count"):
        unit_scenario(m_count=0)


def test_scenario_is_immutable_and_comparable():
    s = make_scenario(2, 3, 4, seed=1)
    with pytest.raises(ValueError):
        s.gain_up[0, 0] = 1.0
    assert s == make_scenario(2, 3, 4, seed=1)
    assert s != make_scenario(2, 3, 4, seed=2)
    assert s.n_slots == 2 and s.shape == (2, 3, 4)
    t = s.with_budgets(2.0, 0.5)
    assert t.p_bs_max == 2.0 and np.all(t.p_uue_max == 0.5)


# -- assignments ---------------------------------------------------------------

def test_assignment_exclusivity():
    with pytest.raises(AssignmentError):
        Assignment3D(((0, 0, 0), (0, 1, 1)))
    with pytest.raises(AssignmentError):
        Assignment3D(((0, 1, 0), (1, 1, 1)))
    with pytest.raises(AssignmentError):
        Assignment3D(((0, 0, 1), (1, 1, 1)))
    a = Assignment3D(((1, 1, 1), (0, 0, 0)))
    assert a.triples == ((0, 0, 0), (1, 1, 1))
    with pytest.raises(AssignmentError):
        a.validate((2, 2, 1))
    with pytest.raises(AssignmentError):
        a.validate((3, 3, 3))
    a.validate((2, 3, 4))


def test_pair_rate_is_sum_of_components():
    s = make_scenario(2, 2, 3, seed=4)
    p = PairPowers(0.01, 0.02)
    t = (1, 0, 2)
    expected = uplink_rate(0.01, s.gain_up[1, 2], s.sigma_si_sq, s.sigma_bs_sq) + downlink_rate(
        0.02, 0.01, s.gain_down[0, 2], s.gain_cross[1, 0, 2], s.sigma_due_sq
    )
    assert pair_rate(s, t, p) == pytest.approx(expected, rel=1e-15)
    assert pair_rate(s, t, PairPowers()) == 0.0
    with pytest.raises(IndexError):
        pair_rate(s, (2, 0, 0), p)


def test_separable_when_no_cross_gain():
    s = unit_scenario(gain_cross=np.zeros((1, 1, 1)))
    r = pair_rate(s, (0, 0, 0), PairPowers(1.0, 3.0))
    assert r == pytest.approx(1.0 + 2.0)


def test_total_rate():
    s = make_scenario(3, 3, 3, seed=5)
    a = Assignment3D(((0, 2, 1), (1, 0, 2), (2, 1, 0)))
    powers = {t: PairPowers(0.01 * (i + 1), 0.02) for i, t in enumerate(a)}
    assert total_rate(s, Assignment3D(), {}) == 0.0
    assert total_rate(s, a, powers) == pytest.approx(sum(pair_rate(s, t, powers[t]) for t in a))
    single = Assignment3D(((0, 2, 1),))
    assert total_rate(s, single, powers) == pair_rate(s, (0, 2, 1), powers[(0, 2, 1)])
    with pytest.raises(KeyError, match=r"\(2, 1, 0\)"):
        total_rate(s, a, {t: powers[t] for t in a.triples[:2]})


@given(seed=st.integers(0, 10_000), perm=st.permutations(range(3)))
def test_total_rate_permutation_invariant(seed, perm):
    s = make_scenario(3, 3, 3, seed=seed)
    rng = np.random.default_rng(seed)
    triples = list(zip(rng.permutation(3), rng.permutation(3), rng.permutation(3)))
    powers = {tuple(map(int, t)): PairPowers(*rng.random(2) * 0.01) for t in triples}
    a = Assignment3D(tuple(triples))
    b = Assignment3D(tuple(triples[i] for i in perm))
    assert total_rate(s, a, powers) == pytest.approx(total_rate(s, b, powers), rel=1e-12)


def test_rate_tensor_matches_pair_rate():
    s = make_scenario(2, 3, 4, seed=9)
    t = rate_tensor(s, 0.01, 0.05)
    for idx in np.ndindex(s.shape):
        assert t[idx] == pytest.approx(pair_rate(s, idx, PairPowers(0.01, 0.05)), rel=1e-12)


def test_result_sum_rate_consistent():
    s = make_scenario(2, 2, 2, seed=3)
    a = Assignment3D(((0, 1, 0), (1, 0, 1)))
    r = build_result(s, a, {t: PairPowers(0.01, 0.03) for t in a})
    assert r.sum_rate == pytest.approx(sum(r.per_pair_rate.values()), rel=1e-9)
    assert set(r.powers) == set(a)


# -- budgets -------------------------------------------------------------------

def test_check_budgets_boundaries():
    s = unit_scenario(2, 2, 2, p_bs_max=2.0, p_uue_max=[1.0, 0.5])
    a = Assignment3D(((0, 0, 0), (1, 1, 1)))
    zero = check_budgets(s, a, {t: PairPowers() for t in a})
    assert zero.feasible and zero.bs.consumed == 0.0
    one = Assignment3D(((0, 0, 0),))
    tight = check_budgets(s, one, {(0, 0, 0): PairPowers(1.0, 2.0)})
    assert tight.feasible and tight.bs.consumed == 2.0
    over = check_budgets(s, a, {(0, 0, 0): PairPowers(1.0, 1.0), (1, 1, 1): PairPowers(0.6, 1.0)})
    assert over.bs.satisfied and not over.uue[1].satisfied and not over.feasible


@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 3.0))
def test_check_budgets_matches_literal_constraints(seed, scale):
    s = make_scenario(3, 3, 4, seed=seed)
    rng = np.random.default_rng(seed)
    a = Assignment3D(tuple(zip(range(3), rng.permutation(3), rng.permutation(4)[:3])))
    powers = {
        t: PairPowers(scale * rng.random() * s.p_uue_max[t[0]], scale * rng.random() * s.p_bs_max / 3)
        for t in a
    }
    report = check_budgets(s, a, powers)
    bs = sum(p.p_down for p in powers.values())
    assert report.bs.satisfied == (bs <= s.p_bs_max * (1 + 1e-6))
    for t in a:
        assert report.uue[t[0]].satisfied == (powers[t].p_up <= s.p_uue_max[t[0]] * (1 + 1e-6))
