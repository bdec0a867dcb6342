"""Copycat learner for per-state symmetric Markov games (every state's payoff matrix is skew)."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .game import ShapeError, safety_level_policy
from .matrix_copycat import MEMBER_TOL
from .ogd import DoublingSchedule, ogd_step_size

__all__ = [
    "loss_from_trajectory",
    "project_ssg",
    "in_ssg_set",
    "MarkovLearnerState",
    "init_markov_learner",
    "ogd_update",
    "ssg_episode_step",
]


def loss_from_trajectory(traj, shape):
    """Indicator tensor of the visited (state, a1, a2) triples."""
    loss = np.zeros(shape)
    S = shape[0]
    for s, a1, a2 in traj.triples():
        if not 0 <= s < S:
            raise ShapeError(f"trajectory visits state {s} outside a game with {S} states")
        loss[s, a1 - 1, a2 - 1] += 1.0
    return loss


def project_ssg(y, bound=1.0):
    """Per-state projection onto bounded skew matrices; O(|S| n^2)."""
    y = np.asarray(y, dtype=float)
    return np.clip((y - y.transpose(0, 2, 1)) / 2.0, -bound, bound)


def in_ssg_set(u, bound=1.0, tol=MEMBER_TOL):
    u = np.asarray(u, dtype=float)
    return bool(np.max(np.abs(u + u.transpose(0, 2, 1))) <= tol and np.max(np.abs(u)) <= bound + tol)


@dataclass(frozen=True)
class MarkovLearnerState:
    iterate: np.ndarray
    step_size: float
    round: int = 0
    schedule: DoublingSchedule | None = None


def init_markov_learner(g, horizon=None, step_size=None):
    """Zero iterate with eta = D/(G sqrt(T)).

    D = 2 sqrt(|S| n (n-1) / 2) is the Frobenius diameter of the per-state
    skew box, G = sqrt(H) bounds the trajectory-indicator loss norm.
    """
    S, n, _ = g.shape
    D = 2.0 * math.sqrt(S * max(n * (n - 1) / 2.0, 1.0))
    G = math.sqrt(g.horizon)
    schedule = None
    if step_size is None:
        if horizon is None:
            schedule = DoublingSchedule(D, G)
            step_size = schedule(1)
        else:
            step_size = ogd_step_size(D, G, horizon)
    return MarkovLearnerState(np.zeros(g.shape), float(step_size), 0, schedule)


def ogd_update(state, traj, project):
    """Gradient step on the trajectory loss followed by ``project``; advances the round."""
    y = state.iterate - state.step_size * loss_from_trajectory(traj, state.iterate.shape)
    t = state.round + 1
    eta = state.schedule(t + 1) if state.schedule is not None else state.step_size
    return replace(state, iterate=project(y), step_size=eta, round=t)


def _sparse_ssg_update(state, traj):
    # only the visited (s, a1, a2)/(s, a2, a1) pairs leave the set
    u = state.iterate.copy()
    eta = state.step_size
    for s, a1, a2 in traj.triples():
        i, j = a1 - 1, a2 - 1
        if i != j:
            x = min(max(u[s, i, j] - eta / 2.0, -1.0), 1.0)
            u[s, i, j] = x
            u[s, j, i] = -x
    t = state.round + 1
    eta = state.schedule(t + 1) if state.schedule is not None else state.step_size
    return replace(state, iterate=u, step_size=eta, round=t)


def ssg_episode_step(state, g, last_trajectory=None):
    """Update on the previous episode's trajectory, then play the safety policy of the new iterate.

    Returns ``(new_state, policy)``.  Trajectories are the only feedback.
    """
    if last_trajectory is not None:
        if len(set(last_trajectory.states)) == len(last_trajectory.states):
            state = _sparse_ssg_update(state, last_trajectory)
        else:
            state = ogd_update(state, last_trajectory, project_ssg)
    pi, _ = safety_level_policy(g, state.iterate)
    return state, pi
