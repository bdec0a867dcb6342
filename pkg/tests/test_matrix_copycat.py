import itertools
import math

import numpy as np
import pytest

from symgame import init_matrix_learner, matrix_copycat_step, project_skew_box
from symgame.matrix_copycat import (
    approachability_distance,
    best_fixed_skew,
    in_skew_box,
    skew_box_diameter,
)
from symgame.ogd import DoublingSchedule, ogd_regret_bound, ogd_step_size


def random_skew_box_point(rng, n, b=1.0):
    W = rng.uniform(-b, b, (n, n))
    W = np.triu(W, 1)
    return W - W.T


def test_member_unchanged():
    M = np.array([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(project_skew_box(M, 1.0), M)


def test_clipped_pair():
    # frozen from the grid oracle below
    np.testing.assert_array_equal(project_skew_box(np.array([[0.0, 2.0], [0.0, 0.0]]), 1.0),
                                  [[0.0, 1.0], [-1.0, 0.0]])


def test_grid_oracle_for_two_actions():
    # the feasible set for n=2 is {[[0, x], [-x, 0]] : |x| <= 1}; search x on a fine grid
    xs = np.linspace(-1, 1, 200_001)
    rng = np.random.default_rng(5)
    for M in [np.array([[0.0, 2.0], [0.0, 0.0]])] + [rng.uniform(-3, 3, (2, 2)) for _ in range(20)]:
        dist = (M[0, 0]) ** 2 + (M[1, 1]) ** 2 + (M[0, 1] - xs) ** 2 + (M[1, 0] + xs) ** 2
        x = xs[np.argmin(dist)]
        assert abs(project_skew_box(M)[0, 1] - x) <= 1e-5


def test_symmetric_input_projects_to_zero():
    np.testing.assert_array_equal(project_skew_box(np.full((2, 2), 5.0)), 0.0)


def test_nonpositive_bound_rejected():
    with pytest.raises(ValueError):
        project_skew_box(np.zeros((2, 2)), 0.0)


def test_projection_idempotent_and_in_set(rng):
    for n in (2, 3, 6):
        for b in (0.5, 1.0, 3.0):
            M = rng.uniform(-5, 5, (n, n))
            P = project_skew_box(M, b)
            assert in_skew_box(P, b)
            np.testing.assert_array_equal(project_skew_box(P, b), P)


def test_variational_inequality(rng):
    for n in (2, 4):
        M = rng.uniform(-3, 3, (n, n))
        P = project_skew_box(M)
        for _ in range(1000):
            X = random_skew_box_point(rng, n)
            assert np.sum((M - P) * (X - P)) <= 1e-9


def test_diameter():
    assert skew_box_diameter(3) == pytest.approx(2 * math.sqrt(3))
    assert skew_box_diameter(2, b=2.0) == pytest.approx(4.0)


def test_first_call_plays_uniform():
    state = init_matrix_learner(3, horizon=100)
    state, x = matrix_copycat_step(state, None)
    np.testing.assert_allclose(x, 1 / 3)
    assert state.round == 0


def test_update_arithmetic():
    eta = 0.1
    state = init_matrix_learner(3, step_size=eta)
    state, _ = matrix_copycat_step(state, (1, 2))
    expected = np.zeros((3, 3))
    expected[0, 1] = -eta / 2
    expected[1, 0] = eta / 2
    np.testing.assert_allclose(state.iterate, expected, atol=1e-15)
    assert state.round == 1


def test_diagonal_pair_leaves_iterate_unchanged(rng):
    state = init_matrix_learner(3, step_size=0.3)
    state, _ = matrix_copycat_step(state, (1, 3))
    before = state.iterate.copy()
    for a in (1, 2, 3):
        state, _ = matrix_copycat_step(state, (a, a))
        np.testing.assert_array_equal(state.iterate, before)


def test_step_size_uses_tight_diameter():
    state = init_matrix_learner(4, horizon=400)
    assert state.step_size == pytest.approx(skew_box_diameter(4) / math.sqrt(400))


def test_doubling_schedule_when_horizon_unknown():
    state = init_matrix_learner(2)
    sched = DoublingSchedule(skew_box_diameter(2), 1.0)
    assert state.step_size == pytest.approx(sched(1))
    for t in range(1, 9):
        state, _ = matrix_copycat_step(state, (1, 2))
        assert state.step_size == pytest.approx(sched(t + 1))
    assert sched(4) == sched(7) == ogd_step_size(sched.diameter, 1.0, 4)


def test_iterate_stays_in_set_and_strategy_is_safe(rng):
    n = 4
    state = init_matrix_learner(n, step_size=0.7)
    last = None
    for _ in range(300):
        state, x = matrix_copycat_step(state, last)
        assert in_skew_box(state.iterate)
        assert (x @ state.iterate).min() >= -1e-9
        a = int(rng.choice(n, p=x)) + 1
        last = (a, int(rng.integers(1, n + 1)))


def test_regret_within_ogd_bound(rng):
    # loss of U against indicator l_t is U[a, b]; regret vs best fixed skew U in hindsight
    n, T = 3, 2000
    state = init_matrix_learner(n, horizon=T)
    learner_loss = 0.0
    L = np.zeros((n, n))
    for _ in range(T):
        a, b = rng.integers(0, n, 2)
        learner_loss += state.iterate[a, b]
        L[a, b] += 1.0
        state, _ = matrix_copycat_step(state, (a + 1, b + 1))
    best = np.sum(best_fixed_skew(L) * L)
    assert learner_loss - best <= ogd_regret_bound(skew_box_diameter(n), 1.0, T)


def test_best_fixed_skew_matches_vertex_enumeration(rng):
    # linear objective over a box of pair coordinates: optimum at a vertex
    n = 3
    L = rng.integers(0, 5, (n, n)).astype(float)
    pairs = list(itertools.combinations(range(n), 2))
    best = np.inf
    for signs in itertools.product([-1.0, 1.0], repeat=len(pairs)):
        U = np.zeros((n, n))
        for (i, j), s in zip(pairs, signs):
            U[i, j], U[j, i] = s, -s
        best = min(best, np.sum(U * L))
    assert np.sum(best_fixed_skew(L) * L) == pytest.approx(best)


def test_approachability_distance():
    assert approachability_distance(np.eye(3)) == 0.0
    E = np.zeros((2, 2))
    E[0, 1] = 1.0
    assert approachability_distance(E) == pytest.approx(math.sqrt(2) / 2)
    assert approachability_distance((E + E.T) / 2) == 0.0


def test_copycat_keeps_true_payoff_sublinear(rng):
    n, T = 3, 3000
    W = rng.uniform(-1, 1, (n, n))
    ustar = (W - W.T) / 2
    state = init_matrix_learner(n, horizon=T)
    last, total = None, 0.0
    for _ in range(T):
        state, x = matrix_copycat_step(state, last)
        a = int(rng.choice(n, p=x)) + 1
        b = int(np.argmin(x @ ustar)) + 1
        total += ustar[a - 1, b - 1]
        last = (a, b)
    assert abs(total) <= 3 * n * math.sqrt(T)
