"""Copycat learner for symmetric zero-sum matrix games.

A virtual player runs projected OGD over bounded skew-symmetric matrices,
fed with the indicator of the observed action pair; the learner plays the
maximin strategy of the current virtual matrix.
"""

import math
from dataclasses import dataclass

import numpy as np

from .matrix_game import solve_matrix_game
from .ogd import DoublingSchedule, ogd_step_size

__all__ = [
    "project_skew_box",
    "in_skew_box",
    "skew_box_diameter",
    "MatrixLearnerState",
    "init_matrix_learner",
    "matrix_copycat_step",
    "approachability_distance",
    "best_fixed_skew",
]

MEMBER_TOL = 1e-12


def project_skew_box(M, b=1.0):
    """Euclidean projection onto {X : X = -X^T, |X_ij| <= b}.

    The set is a product over pairs i < j of segments {(x, -x)}, so each pair
    projects independently to clip((M_ij - M_ji) / 2, -b, b).
    """
    if b <= 0:
        raise ValueError(f"bound must be positive, got {b}")
    M = np.asarray(M, dtype=float)
    return np.clip((M - M.T) / 2.0, -b, b)


def in_skew_box(M, b=1.0, tol=MEMBER_TOL):
    M = np.asarray(M, dtype=float)
    return bool(np.max(np.abs(M + M.T), initial=0.0) <= tol and np.max(np.abs(M), initial=0.0) <= b + tol)


def skew_box_diameter(n, b=1.0):
    """Frobenius diameter of the bounded skew set: 2 b sqrt(n (n - 1) / 2)."""
    return 2.0 * b * math.sqrt(n * (n - 1) / 2.0)


@dataclass(frozen=True)
class MatrixLearnerState:
    iterate: np.ndarray
    step_size: float
    round: int = 0
    bound: float = 1.0
    schedule: DoublingSchedule | None = None

    @property
    def num_actions(self):
        return self.iterate.shape[0]


def init_matrix_learner(n, horizon=None, bound=1.0, step_size=None):
    """Zero iterate with eta = D/(G sqrt(T)), G = 1 (one unit entry per loss).

    With ``horizon=None`` the doubling schedule is used instead.
    """
    D = skew_box_diameter(n, bound) if n > 1 else 1.0
    schedule = None
    if step_size is None:
        if horizon is None:
            schedule = DoublingSchedule(D, 1.0)
            step_size = schedule(1)
        else:
            step_size = ogd_step_size(D, 1.0, horizon)
    return MatrixLearnerState(np.zeros((n, n)), float(step_size), 0, float(bound), schedule)


def matrix_copycat_step(state, last_pair=None):
    """One round: OGD update on the observed pair (1-based), then maximin of the new iterate.

    Returns ``(new_state, strategy)``.
    """
    u = state.iterate
    eta = state.step_size
    t = state.round
    if last_pair is not None:
        i, j = last_pair[0] - 1, last_pair[1] - 1
        u = u.copy()
        if i != j:
            # only the (i, j)/(j, i) pair moves; project just that pair
            x = np.clip((u[i, j] - eta - u[j, i]) / 2.0, -state.bound, state.bound)
            u[i, j] = x
            u[j, i] = -x
        t += 1
        if state.schedule is not None:
            eta = state.schedule(t + 1)
    _, x = solve_matrix_game(u)
    return MatrixLearnerState(u, eta, t, state.bound, state.schedule), x


def approachability_distance(avg_play):
    """Frobenius distance of the average play matrix to the symmetric matrices."""
    A = np.asarray(avg_play, dtype=float)
    return float(np.linalg.norm((A - A.T) / 2.0))


def best_fixed_skew(loss_sum, b=1.0):
    """argmin over the bounded skew set of <U, loss_sum> (a vertex, ties at 0)."""
    L = np.asarray(loss_sum, dtype=float)
    return -b * np.sign(L - L.T)
