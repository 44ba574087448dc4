import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdra.hungarian import AssignmentInputError, assignment_value, solve_assignment


def brute_force(rewards: np.ndarray) -> float:
    r, c = rewards.shape
    if r > c:
        return brute_force(rewards.T)
    return max(
        sum(rewards[i, p[i]] for i in range(r)) for p in itertools.permutations(range(c), r)
    )


def check_matching(pairs, shape):
    rows = [p[0] for p in pairs]
    cols = [p[1] for p in pairs]
    assert len(pairs) == min(shape)
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert all(0 <= r < shape[0] and 0 <= c < shape[1] for r, c in pairs)


def test_one_by_one():
    assert solve_assignment([[3.5]]) == [(0, 0)]


def test_dominant_diagonal():
    a = 10 * np.eye(3)
    pairs = solve_assignment(a)
    assert pairs == [(0, 0), (1, 1), (2, 2)]
    assert assignment_value(a, pairs) == 30


def test_random_integer_5x5_matches_permutations():
    rng = np.random.default_rng(0)
    a = rng.integers(-20, 50, (5, 5))
    assert assignment_value(a, solve_assignment(a)) == brute_force(a)


def test_negative_and_rectangular():
    a = np.array([[-1.0, -5.0, -3.0], [-2.0, -1.0, -9.0]])
    pairs = solve_assignment(a)
    assert pairs == [(0, 0), (1, 1)]
    tall = solve_assignment(a.T)
    assert tall == [(0, 0), (1, 1)]


@pytest.mark.parametrize("bad", [np.zeros((0, 3)), [[1.0, np.nan]], [[np.inf]], [1.0, 2.0]])
def test_input_errors(bad):
    with pytest.raises(AssignmentInputError):
        solve_assignment(bad)


def test_deterministic():
    a = np.ones((4, 6))
    assert solve_assignment(a) == solve_assignment(a.copy())


matrices = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda shape: arrays(np.float64, shape, elements=st.floats(-100, 100))
)
int_matrices = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda shape: arrays(np.int64, shape, elements=st.integers(-50, 50))
)


@given(int_matrices)
def test_optimal_integer(a):
    pairs = solve_assignment(a)
    check_matching(pairs, a.shape)
    assert assignment_value(a, pairs) == brute_force(a)


@given(matrices)
def test_optimal_real(a):
    pairs = solve_assignment(a)
    check_matching(pairs, a.shape)
    assert assignment_value(a, pairs) == pytest.approx(brute_force(a), abs=1e-9)


@given(matrices, st.data())
def test_row_shift_invariance(a, data):
    if a.shape[0] > a.shape[1]:
        a = a.T
    row = data.draw(st.integers(0, a.shape[0] - 1))
    shift = data.draw(st.floats(-50, 50))
    b = a.copy()
    b[row] += shift
    # every row is matched when R <= C, so the optimum moves by exactly the shift
    assert assignment_value(b, solve_assignment(b)) - shift == pytest.approx(
        assignment_value(a, solve_assignment(a)), abs=1e-8
    )


@given(matrices)
def test_padding_with_zero_rows(a):
    if a.shape[0] > a.shape[1]:
        a = a.T
    r, c = a.shape
    # shift rewards to be nonnegative so idle columns cost nothing either way
    a = a - a.min()
    padded = np.vstack([a, np.zeros((c - r, c))])
    assert assignment_value(padded, solve_assignment(padded)) == pytest.approx(
        assignment_value(a, solve_assignment(a)), abs=1e-9
    )
