"""Layered zero-sum Markov games: model, validation, sampling and dynamic programming.

Array conventions used throughout the package:

* states are indexed ``0..S-1`` in layer order; ``game.layer_slice(h)`` gives
  the index range of layer ``h`` (0-based layer index);
* a payoff or occupancy tensor has shape ``(S, n, n)`` indexed by
  ``(state, action of player 1, action of player 2)``;
* a Markov policy has shape ``(S, n)``; a value table has shape ``(S,)``;
* the transitions out of layer ``h`` form a 2-d matrix of shape
  ``(|S_h| * n * n, |S_{h+1}|)`` whose row ``(s, a1, a2)`` is the successor
  distribution.  It may be a dense ndarray or a scipy sparse matrix.

Action arguments of public functions (and trajectory records) are 1-based,
array axes are 0-based: action ``a`` lives at position ``a - 1``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .matrix_game import solve_matrix_games

__all__ = [
    "LayeredGame",
    "Trajectory",
    "GameValidationError",
    "ShapeError",
    "validate_game",
    "sample_trajectory",
    "evaluate_value",
    "occupancy",
    "occupancy_batch",
    "state_visitation",
    "safety_level_policy",
    "best_response",
    "uniform_policy",
    "constant_policy",
    "trajectory_payoff",
]

PROB_TOL = 1e-12


class GameValidationError(ValueError):
    pass


class ShapeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LayeredGame:
    """Finite-horizon game on a layered state space with known dynamics.

    ``layers[h]`` lists the state ids of layer ``h``; ``transitions[h]`` is the
    kernel out of layer ``h`` (see module docstring), so there are
    ``horizon - 1`` kernels.
    """

    horizon: int
    num_actions: int
    layers: tuple
    transitions: tuple

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(str(s) for s in layer) for layer in self.layers))
        object.__setattr__(self, "transitions", tuple(self.transitions))

    @cached_property
    def states(self):
        return tuple(s for layer in self.layers for s in layer)

    @cached_property
    def num_states(self):
        return len(self.states)

    @cached_property
    def index(self):
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def offsets(self):
        return np.concatenate([[0], np.cumsum([len(layer) for layer in self.layers])]).astype(int)

    @cached_property
    def layer_of(self):
        out = np.empty(self.num_states, dtype=int)
        for h in range(len(self.layers)):
            out[self.offsets[h]:self.offsets[h + 1]] = h
        return out

    @cached_property
    def _slices(self):
        return tuple(slice(int(self.offsets[h]), int(self.offsets[h + 1])) for h in range(len(self.layers)))

    def layer_slice(self, h):
        return self._slices[h]

    @property
    def shape(self):
        """Shape of payoff and occupancy tensors."""
        return (self.num_states, self.num_actions, self.num_actions)

    def next_distribution(self, s, a1, a2):
        """Successor distribution of global state ``s`` under 1-based actions, as a dense vector over layer h+1."""
        h = int(self.layer_of[s])
        if h >= self.horizon - 1:
            raise GameValidationError(f"state {self.states[s]!r} is terminal")
        n = self.num_actions
        row = (s - self.offsets[h]) * n * n + (a1 - 1) * n + (a2 - 1)
        P = self.transitions[h]
        if sp.issparse(P):
            return np.asarray(P[[row]].todense()).ravel()
        return np.asarray(P[row], dtype=float)

    def kernel(self, h):
        """Transitions out of layer ``h`` as a dense array ``(|S_h|, n, n, |S_{h+1}|)``."""
        P = self.transitions[h]
        if sp.issparse(P):
            P = P.toarray()
        n = self.num_actions
        return np.asarray(P, dtype=float).reshape(len(self.layers[h]), n, n, len(self.layers[h + 1]))

    def truncated(self, horizon):
        """The same game cut after ``horizon`` layers."""
        return LayeredGame(horizon, self.num_actions, self.layers[:horizon], self.transitions[:horizon - 1])

    @classmethod
    def from_kernel(cls, layers, num_actions, kernel):
        """Build from a mapping ``(state_id, a1, a2) -> {next_state_id: prob}`` with 1-based actions."""
        layers = [list(map(str, layer)) for layer in layers]
        n = num_actions
        mats = []
        for h in range(len(layers) - 1):
            nxt = {s: j for j, s in enumerate(layers[h + 1])}
            P = np.zeros((len(layers[h]) * n * n, len(layers[h + 1])))
            for i, s in enumerate(layers[h]):
                for a1 in range(1, n + 1):
                    for a2 in range(1, n + 1):
                        row = kernel.get((s, a1, a2))
                        if row is None:
                            raise GameValidationError(f"missing transition row for ({s}, {a1}, {a2})")
                        for s2, p in row.items():
                            if str(s2) not in nxt:
                                raise GameValidationError(
                                    f"transition ({s}, {a1}, {a2}) -> {s2!r} leaves layer {h + 2}")
                            P[i * n * n + (a1 - 1) * n + (a2 - 1), nxt[str(s2)]] += p
            mats.append(P)
        return cls(len(layers), n, layers, mats)


def validate_game(g, tol=PROB_TOL):
    """Raise :class:`GameValidationError` naming the first violated invariant."""
    if g.horizon < 1:
        raise GameValidationError(f"horizon must be >= 1, got {g.horizon}")
    if g.num_actions < 1:
        raise GameValidationError(f"num_actions must be >= 1, got {g.num_actions}")
    if len(g.layers) != g.horizon:
        raise GameValidationError(f"expected {g.horizon} layers, got {len(g.layers)}")
    if len(g.layers[0]) != 1:
        raise GameValidationError(f"layer 1 must be singleton, got {len(g.layers[0])} states")
    seen = set()
    for h, layer in enumerate(g.layers):
        if not layer:
            raise GameValidationError(f"layer {h + 1} is empty")
        for s in layer:
            if s in seen:
                raise GameValidationError(f"state {s!r} appears twice (layer {h + 1})")
            seen.add(s)
    if len(g.transitions) != g.horizon - 1:
        raise GameValidationError(
            f"expected {g.horizon - 1} transition kernels, got {len(g.transitions)}")
    n = g.num_actions
    for h, P in enumerate(g.transitions):
        want = (len(g.layers[h]) * n * n, len(g.layers[h + 1]))
        if P.shape != want:
            raise GameValidationError(f"kernel out of layer {h + 1} has shape {P.shape}, expected {want}")
        dense = P.toarray() if sp.issparse(P) else np.asarray(P, dtype=float)
        bad = ~np.isfinite(dense) | (dense < 0)
        sums = dense.sum(axis=1)
        off = np.abs(sums - 1.0) > tol
        rows = np.flatnonzero(bad.any(axis=1) | off)
        if rows.size:
            r = int(rows[0])
            s, rem = divmod(r, n * n)
            a1, a2 = divmod(rem, n)
            what = "negative or non-finite entries" if bad[r].any() else f"sums to {sums[r]!r}"
            raise GameValidationError(
                f"transition row ({g.layers[h][s]}, {a1 + 1}, {a2 + 1}) in layer {h + 1} {what}")


def _check_policy(g, pi, name="policy"):
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (g.num_states, g.num_actions):
        raise ShapeError(f"{name} has shape {pi.shape}, expected {(g.num_states, g.num_actions)}")
    return pi


def _check_payoff(g, u):
    u = np.asarray(u, dtype=float)
    if u.shape != g.shape:
        raise ShapeError(f"payoff has shape {u.shape}, expected {g.shape}")
    return u


def uniform_policy(g):
    return np.full((g.num_states, g.num_actions), 1.0 / g.num_actions)


def constant_policy(g, action=1):
    """Deterministic policy playing ``action`` (1-based) everywhere."""
    pi = np.zeros((g.num_states, g.num_actions))
    pi[:, action - 1] = 1.0
    return pi


@dataclass(frozen=True)
class Trajectory:
    """One episode: global state indices and 1-based actions, one triple per layer."""

    states: tuple
    actions1: tuple
    actions2: tuple

    def __len__(self):
        return len(self.states)

    def triples(self):
        return list(zip(self.states, self.actions1, self.actions2))

    def describe(self, g):
        out = []
        for s, a1, a2 in self.triples():
            out.extend([g.states[s], a1, a2])
        return out


def _draw(p, x):
    # inverse CDF; plain-float loop since n is small
    p = p.tolist()
    x *= sum(p)
    acc = 0.0
    for i, w in enumerate(p):
        acc += w
        if x < acc:
            return i
    return len(p) - 1


def sample_trajectory(g, pi1, pi2, rng):
    """Sample one episode under Markov policies ``pi1``, ``pi2``."""
    pi1 = _check_policy(g, pi1, "pi1")
    pi2 = _check_policy(g, pi2, "pi2")
    s = 0
    states, acts1, acts2 = [], [], []
    xs = rng.random(3 * g.horizon).tolist()
    if g.horizon == 1:
        return Trajectory((0,), (_draw(pi1[0], xs[0]) + 1,), (_draw(pi2[0], xs[1]) + 1,))
    for h in range(g.horizon):
        x = xs[3 * h:3 * h + 3]
        a1 = _draw(pi1[s], x[0])
        a2 = _draw(pi2[s], x[1])
        states.append(s)
        acts1.append(a1 + 1)
        acts2.append(a2 + 1)
        if h < g.horizon - 1:
            dist = g.next_distribution(s, a1 + 1, a2 + 1)
            s = int(g.offsets[h + 1]) + _draw(dist, x[2])
    return Trajectory(tuple(states), tuple(acts1), tuple(acts2))


def trajectory_payoff(u, traj):
    return float(sum(u[s, a1 - 1, a2 - 1] for s, a1, a2 in traj.triples()))


def _continuation(g, h, V):
    """sum_{s'} P(s'|s,a1,a2) V(s') for s in layer h, shaped (|S_h|, n, n)."""
    n = g.num_actions
    nh = len(g.layers[h])
    if h >= g.horizon - 1:
        return np.zeros((nh, n, n))
    nxt = V[g.layer_slice(h + 1)]
    return np.asarray(g.transitions[h] @ nxt).reshape(nh, n, n)


def evaluate_value(g, u, pi1, pi2):
    """Exact value table of the policy pair by backward induction."""
    u = _check_payoff(g, u)
    pi1 = _check_policy(g, pi1, "pi1")
    pi2 = _check_policy(g, pi2, "pi2")
    if g.horizon == 1:
        return np.array([pi1[0] @ u[0] @ pi2[0]])
    V = np.zeros(g.num_states)
    for h in reversed(range(g.horizon)):
        sl = g.layer_slice(h)
        Q = u[sl] + _continuation(g, h, V)
        V[sl] = np.einsum("si,sij,sj->s", pi1[sl], Q, pi2[sl])
    return V


def state_visitation(g, pi1, pi2):
    """P[s_h = s] for every state, by the forward recursion over layers."""
    return occupancy(g, pi1, pi2).sum(axis=(1, 2))


def occupancy(g, pi1, pi2):
    """Occupancy tensor k(s, a1, a2) = P[s_h = s, a1_h = a1, a2_h = a2]."""
    pi1 = _check_policy(g, pi1, "pi1")
    pi2 = _check_policy(g, pi2, "pi2")
    k = np.zeros(g.shape)
    mass = np.ones(1)
    for h in range(g.horizon):
        sl = g.layer_slice(h)
        k[sl] = mass[:, None, None] * pi1[sl][:, :, None] * pi2[sl][:, None, :]
        if h < g.horizon - 1:
            mass = np.asarray(g.transitions[h].T @ k[sl].ravel()).ravel()
    return k


def occupancy_batch(g, pi1, pi2):
    """Occupancy tensors for a batch of policy pairs, shapes (B, S, n) -> (B, S, n, n)."""
    pi1 = np.asarray(pi1, dtype=float)
    pi2 = np.asarray(pi2, dtype=float)
    B = pi1.shape[0]
    k = np.zeros((B,) + g.shape)
    mass = np.ones((B, 1))
    for h in range(g.horizon):
        sl = g.layer_slice(h)
        k[:, sl] = mass[:, :, None, None] * pi1[:, sl, :, None] * pi2[:, sl, None, :]
        if h < g.horizon - 1:
            mass = np.asarray((g.transitions[h].T @ k[:, sl].reshape(B, -1).T).T)
    return k


def safety_level_policy(g, u, tie_break="average"):
    """Maximin Markov policy of player 1 and the game's value table.

    Each state solves the matrix game Q(s) = u(s) + E[V(next state)] with the
    values of the following layer already known.
    """
    u = _check_payoff(g, u)
    n = g.num_actions
    V = np.zeros(g.num_states)
    pi = np.zeros((g.num_states, n))
    for h in reversed(range(g.horizon)):
        sl = g.layer_slice(h)
        Q = u[sl] + _continuation(g, h, V)
        V[sl], pi[sl] = solve_matrix_games(Q, tie_break=tie_break)
    return pi, V


def best_response(g, u, pi1, objective="minimize"):
    """Exact deterministic best response of player 2 to the fixed Markov policy ``pi1``.

    ``objective`` refers to player 1's payoff ``u``: the adversary of the
    learner minimizes it.  Ties go to the lowest action index.
    """
    u = _check_payoff(g, u)
    pi1 = _check_policy(g, pi1, "pi1")
    if objective not in ("minimize", "maximize"):
        raise ValueError(f"objective must be 'minimize' or 'maximize', got {objective!r}")
    pick = np.argmin if objective == "minimize" else np.argmax
    pi2 = np.zeros((g.num_states, g.num_actions))
    if g.horizon == 1:
        pi2[0, pick(pi1[0] @ u[0])] = 1.0
        return pi2
    V = np.zeros(g.num_states)
    for h in reversed(range(g.horizon)):
        sl = g.layer_slice(h)
        Q = u[sl] + _continuation(g, h, V)
        q2 = np.einsum("si,sij->sj", pi1[sl], Q)
        best = pick(q2, axis=1)
        idx = np.arange(sl.start, sl.stop)
        pi2[idx, best] = 1.0
        V[sl] = q2[np.arange(len(idx)), best]
    return pi2
