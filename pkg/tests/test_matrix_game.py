import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from reference import lp_value
from symgame import MatrixGameError, solve_matrix_game
from symgame.matrix_game import solve_matrix_games


def test_rock_paper_scissors():
    v, x = solve_matrix_game([[0, -1, 1], [1, 0, -1], [-1, 1, 0]])
    assert abs(v) <= 1e-12
    np.testing.assert_allclose(x, 1 / 3, atol=1e-12)


def test_single_action():
    v, x = solve_matrix_game([[1.0]])
    assert v == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(x, [1.0])


def test_two_by_two_skew_picks_dominant_row():
    v, x = solve_matrix_game([[0, -1], [1, 0]])
    assert abs(v) <= 1e-12
    np.testing.assert_allclose(x, [0, 1], atol=1e-12)


def test_zero_matrix_gives_uniform():
    v, x = solve_matrix_game(np.zeros((4, 4)))
    assert v == 0.0
    np.testing.assert_allclose(x, 0.25)


def test_tie_break_averages_optimal_vertices():
    # rows 1 and 2 both guarantee 0; row 3 guarantees -1
    v, x = solve_matrix_game([[0, 0], [0, 0], [1, -1]])
    assert abs(v) <= 1e-12
    np.testing.assert_allclose(x, [0.5, 0.5, 0.0], atol=1e-12)
    _, first = solve_matrix_game([[0, 0], [0, 0], [1, -1]], tie_break="first")
    assert first[2] == pytest.approx(0.0, abs=1e-12)
    assert first.max() == pytest.approx(1.0, abs=1e-12)


def test_non_finite_input_rejected():
    with pytest.raises(MatrixGameError):
        solve_matrix_game([[0, np.nan], [1, 0]])
    with pytest.raises(MatrixGameError):
        solve_matrix_game([[np.inf]])


def test_rectangular_matches_highs(rng):
    for _ in range(50):
        M = rng.uniform(-1, 1, (3, 5))
        v, x = solve_matrix_game(M)
        assert abs(v - lp_value(M)) <= 1e-9
        assert (x @ M).min() >= v - 1e-9


def test_random_square_against_highs(rng):
    for n in (2, 3, 5, 8):
        for _ in range(50):
            M = rng.uniform(-1, 1, (n, n))
            v, x = solve_matrix_game(M)
            assert abs(v - lp_value(M)) <= 1e-9
            assert np.all(x >= -1e-12) and abs(x.sum() - 1) <= 1e-12
            assert (x @ M).min() >= v - 1e-9


def test_degenerate_integer_matrices_against_highs(rng):
    # small integer entries produce many ties and degenerate bases
    for _ in range(300):
        n = int(rng.integers(2, 6))
        M = rng.integers(-2, 3, (n, n)).astype(float)
        v, x = solve_matrix_game(M)
        assert abs(v - lp_value(M)) <= 1e-9
        assert (x @ M).min() >= v - 1e-9


def test_batch_agrees_with_single(rng):
    Qs = rng.uniform(-1, 1, (20, 4, 4))
    values, X = solve_matrix_games(Qs)
    for Q, v, x in zip(Qs, values, X):
        v1, x1 = solve_matrix_game(Q)
        assert v == v1
        np.testing.assert_array_equal(x, x1)


def test_solver_is_deterministic(rng):
    M = rng.integers(-1, 2, (5, 5)).astype(float)
    a = solve_matrix_game(M)
    b = solve_matrix_game(M.copy())
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-1, 1, allow_nan=False, width=32)))
def test_value_and_guarantee_property(M):
    v, x = solve_matrix_game(M)
    assert abs(v - lp_value(M)) <= 1e-9
    assert (x @ M).min() >= v - 1e-9
    assert np.all(x >= -1e-12) and abs(x.sum() - 1.0) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(1, 7).map(lambda n: (n, n)),
              elements=st.floats(-1, 1, allow_nan=False, width=32)))
def test_skew_matrices_have_value_zero(W):
    v, x = solve_matrix_game(W - W.T)
    assert abs(v) <= 1e-9


def test_tiny_entry_skew_game_stays_optimal():
    # near-degenerate face: averaged vertices must keep the optimal guarantee
    e = -1.1920929e-07
    W = np.full((7, 7), e)
    W[0, 2] = W[1, 0] = W[1, 4] = W[5, 3] = 0.0
    W[0, 3] = W[3, 1] = 1.0
    v, x = solve_matrix_game(W - W.T)
    assert abs(v) <= 1e-9 and (x @ (W - W.T)).min() >= -1e-9
