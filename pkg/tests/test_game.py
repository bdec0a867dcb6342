import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reference import (
    chain_game,
    deterministic_policies,
    matrix_game,
    occupancy_by_enumeration,
    random_policy,
    value_by_enumeration,
)
from symgame import (
    GameValidationError,
    LayeredGame,
    ShapeError,
    best_response,
    constant_policy,
    evaluate_value,
    occupancy,
    safety_level_policy,
    sample_trajectory,
    uniform_policy,
    validate_game,
)
from symgame.game import occupancy_batch, trajectory_payoff
from symgame.generators import random_layered_game, skew_matrix


# validation

def test_single_state_game_validates():
    validate_game(matrix_game(2))


def test_row_summing_to_point_nine_is_named():
    P = np.full((4, 2), 0.5)
    P[2] = [0.5, 0.4]
    g = LayeredGame(2, 2, [["a"], ["b", "c"]], [P])
    with pytest.raises(GameValidationError, match=r"\(a, 2, 1\).*0\.9"):
        validate_game(g)


def test_two_states_in_first_layer_rejected():
    g = LayeredGame(1, 2, [["a", "b"]], [])
    with pytest.raises(GameValidationError, match="layer 1 must be singleton"):
        validate_game(g)


def test_negative_probability_rejected():
    P = np.full((4, 2), 0.5)
    P[0] = [1.5, -0.5]
    with pytest.raises(GameValidationError, match="negative"):
        validate_game(LayeredGame(2, 2, [["a"], ["b", "c"]], [P]))


def test_duplicate_state_and_wrong_kernel_shape():
    with pytest.raises(GameValidationError, match="twice"):
        validate_game(LayeredGame(2, 2, [["a"], ["a"]], [np.ones((4, 1))]))
    with pytest.raises(GameValidationError, match="shape"):
        validate_game(LayeredGame(2, 2, [["a"], ["b"]], [np.ones((3, 1))]))
    with pytest.raises(GameValidationError, match="kernels"):
        validate_game(LayeredGame(2, 2, [["a"], ["b"]], []))


def test_from_kernel_roundtrip():
    kernel = {("a", i, j): {"b": 1.0} for i in (1, 2) for j in (1, 2)}
    g = LayeredGame.from_kernel([["a"], ["b"]], 2, kernel)
    validate_game(g)
    np.testing.assert_array_equal(g.next_distribution(0, 2, 1), [1.0])


# sampling

def test_deterministic_chain_trajectory():
    g = chain_game(3)
    pi1 = constant_policy(g, 1)
    pi2 = constant_policy(g, 2)
    traj = sample_trajectory(g, pi1, pi2, np.random.default_rng(0))
    assert traj.triples() == [(0, 1, 2), (1, 1, 2), (2, 1, 2)]
    assert traj.describe(g) == ["s1", 1, 2, "s2", 1, 2, "s3", 1, 2]


def test_same_seed_same_trajectory(three_layer_game, rng):
    g = three_layer_game
    p, q = random_policy(g, rng), random_policy(g, rng)
    a = [sample_trajectory(g, p, q, np.random.default_rng(7)) for _ in range(2)]
    assert a[0] == a[1]


def test_trajectory_visits_one_state_per_layer(three_layer_game, rng):
    g = three_layer_game
    p, q = random_policy(g, rng), random_policy(g, rng)
    for _ in range(50):
        traj = sample_trajectory(g, p, q, rng)
        assert [g.layer_of[s] for s in traj.states] == [0, 1, 2]
        for h in range(2):
            s, a, b = traj.triples()[h]
            assert g.next_distribution(s, a, b)[traj.states[h + 1] - g.offsets[h + 1]] > 0


def test_uniform_pair_frequencies_within_four_sigma():
    g = matrix_game(2)
    pi = uniform_policy(g)
    rng = np.random.default_rng(1)
    N = 100_000
    counts = np.zeros((2, 2))
    for _ in range(N):
        t = sample_trajectory(g, pi, pi, rng)
        counts[t.actions1[0] - 1, t.actions2[0] - 1] += 1
    k = occupancy(g, pi, pi)[0]
    sigma = np.sqrt(k * (1 - k) / N)
    assert np.all(np.abs(counts / N - k) <= 4 * sigma)


def test_policy_shape_checked(small_game):
    with pytest.raises(ShapeError):
        sample_trajectory(small_game, np.ones((1, 2)), uniform_policy(small_game), np.random.default_rng(0))


# evaluation

def test_zero_payoff_zero_value(small_game, rng):
    g = small_game
    V = evaluate_value(g, np.zeros(g.shape), random_policy(g, rng), random_policy(g, rng))
    np.testing.assert_array_equal(V, 0.0)


def test_single_layer_value_is_bilinear(rng):
    g = matrix_game(3)
    u = rng.uniform(-1, 1, g.shape)
    p, q = random_policy(g, rng), random_policy(g, rng)
    assert evaluate_value(g, u, p, q)[0] == pytest.approx(p[0] @ u[0] @ q[0], abs=1e-15)


def test_terminal_layer_value_is_bilinear(three_layer_game, rng):
    g = three_layer_game
    u = rng.uniform(-1, 1, g.shape)
    p, q = random_policy(g, rng), random_policy(g, rng)
    V = evaluate_value(g, u, p, q)
    for s in range(g.layer_slice(2).start, g.num_states):
        assert V[s] == pytest.approx(p[s] @ u[s] @ q[s], abs=1e-15)


def test_value_matches_trajectory_enumeration(small_game, rng):
    g = small_game
    for _ in range(10):
        u = rng.uniform(-1, 1, g.shape)
        p, q = random_policy(g, rng), random_policy(g, rng)
        assert abs(evaluate_value(g, u, p, q)[0] - value_by_enumeration(g, u, p, q)) <= 1e-12


def test_value_bounded_by_remaining_layers(three_layer_game, rng):
    g = three_layer_game
    u = rng.uniform(-1, 1, g.shape)
    V = evaluate_value(g, u, random_policy(g, rng), random_policy(g, rng))
    assert np.all(np.abs(V) <= g.horizon - g.layer_of + 1e-12)


def test_payoff_shape_checked(small_game):
    pi = uniform_policy(small_game)
    with pytest.raises(ShapeError):
        evaluate_value(small_game, np.zeros((2, 2, 2)), pi, pi)


def test_trajectory_payoff_sums_visited_cells():
    g = chain_game(2)
    u = np.zeros(g.shape)
    u[0, 0, 1] = 0.25
    u[1, 0, 1] = 0.5
    traj = sample_trajectory(g, constant_policy(g, 1), constant_policy(g, 2), np.random.default_rng(0))
    assert trajectory_payoff(u, traj) == 0.75


# occupancy

def test_uniform_single_layer_occupancy():
    g = matrix_game(2)
    np.testing.assert_array_equal(occupancy(g, uniform_policy(g), uniform_policy(g)), 0.25)


def test_deterministic_chain_occupancy():
    g = chain_game(2)
    k = occupancy(g, constant_policy(g), constant_policy(g))
    expected = np.zeros(g.shape)
    expected[:, 0, 0] = 1.0
    np.testing.assert_array_equal(k, expected)


def test_occupancy_matches_enumeration(three_layer_game, rng):
    g = three_layer_game
    p, q = random_policy(g, rng), random_policy(g, rng)
    np.testing.assert_allclose(occupancy(g, p, q), occupancy_by_enumeration(g, p, q), atol=1e-14)


def test_occupancy_inner_product_is_start_value(small_game, rng):
    g = small_game
    p, q = random_policy(g, rng), random_policy(g, rng)
    k = occupancy(g, p, q)
    for _ in range(100):
        u = rng.uniform(-1, 1, g.shape)
        assert abs(np.sum(k * u) - evaluate_value(g, u, p, q)[0]) <= 1e-9


def test_occupancy_batch_matches_single(three_layer_game, rng):
    g = three_layer_game
    P = np.array([random_policy(g, rng) for _ in range(4)])
    Q = np.array([random_policy(g, rng) for _ in range(4)])
    K = occupancy_batch(g, P, Q)
    for i in range(4):
        np.testing.assert_allclose(K[i], occupancy(g, P[i], Q[i]), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(1, 3), st.integers(0, 2 ** 31))
def test_occupancy_layer_mass_and_identity(tail, n, seed):
    rng = np.random.default_rng(seed)
    g = random_layered_game([1] + tail, n, rng)
    p, q = random_policy(g, rng), random_policy(g, rng)
    k = occupancy(g, p, q)
    assert np.all(k >= 0)
    for h in range(g.horizon):
        assert abs(k[g.layer_slice(h)].sum() - 1.0) <= 1e-10
    u = rng.uniform(-1, 1, g.shape)
    assert abs(np.sum(k * u) - evaluate_value(g, u, p, q)[0]) <= 1e-9


# safety level and best response

def test_skew_payoff_has_zero_value(rng):
    g = random_layered_game([1, 3, 2], 3, rng)
    u = skew_matrix(rng, 3, g.num_states) / 2
    _, V = safety_level_policy(g, u)
    assert np.max(np.abs(V)) <= 1e-9


def test_zero_payoff_gives_uniform_tie_break(small_game):
    pi, V = safety_level_policy(small_game, np.zeros(small_game.shape))
    np.testing.assert_array_equal(V, 0.0)
    np.testing.assert_allclose(pi, 0.5, atol=1e-12)


def test_safety_guarantee_against_all_deterministic_opponents(small_game, rng):
    g = small_game
    for _ in range(5):
        u = rng.uniform(-1, 1, g.shape)
        pi, V = safety_level_policy(g, u)
        worst = min(evaluate_value(g, u, pi, d)[0] for d in deterministic_policies(g))
        assert worst >= V[0] - 1e-8


def test_safety_value_matches_enumerated_minimax_for_single_layer(rng):
    from reference import lp_value

    g = matrix_game(3)
    u = rng.uniform(-1, 1, g.shape)
    _, V = safety_level_policy(g, u)
    assert abs(V[0] - lp_value(u[0])) <= 1e-9


def test_best_response_zero_payoff_value_zero(small_game):
    g = small_game
    u = np.zeros(g.shape)
    pi2 = best_response(g, u, uniform_policy(g))
    assert evaluate_value(g, u, uniform_policy(g), pi2)[0] == 0.0


def test_best_response_single_layer_picks_minimizing_column(rng):
    g = matrix_game(4)
    u = rng.uniform(-1, 1, g.shape)
    p = random_policy(g, rng)
    pi2 = best_response(g, u, p)
    assert np.argmax(pi2[0]) == np.argmin(p[0] @ u[0])
    pi2 = best_response(g, u, p, objective="maximize")
    assert np.argmax(pi2[0]) == np.argmax(p[0] @ u[0])


def test_best_response_matches_enumeration(small_game, rng):
    g = small_game
    for _ in range(5):
        u = rng.uniform(-1, 1, g.shape)
        p = random_policy(g, rng)
        vals = [value_by_enumeration(g, u, p, d) for d in deterministic_policies(g)]
        br = evaluate_value(g, u, p, best_response(g, u, p))[0]
        assert abs(br - min(vals)) <= 1e-12
        br = evaluate_value(g, u, p, best_response(g, u, p, "maximize"))[0]
        assert abs(br - max(vals)) <= 1e-12


def test_best_response_rejects_unknown_objective(small_game):
    with pytest.raises(ValueError):
        best_response(small_game, np.zeros(small_game.shape), uniform_policy(small_game), "sideways")


def test_sparse_transitions_agree_with_dense(rng):
    import scipy.sparse as sp

    g = random_layered_game([1, 3, 2], 2, rng)
    gs = LayeredGame(g.horizon, g.num_actions, g.layers, [sp.csr_matrix(P) for P in g.transitions])
    validate_game(gs)
    u = rng.uniform(-1, 1, g.shape)
    p, q = random_policy(g, rng), random_policy(g, rng)
    np.testing.assert_allclose(evaluate_value(gs, u, p, q), evaluate_value(g, u, p, q), atol=1e-15)
    np.testing.assert_allclose(occupancy(gs, p, q), occupancy(g, p, q), atol=1e-15)
    a = sample_trajectory(g, p, q, np.random.default_rng(3))
    b = sample_trajectory(gs, p, q, np.random.default_rng(3))
    assert a == b
