"""Occupancy-sum vectors spanning the complement of the Markov-symmetric payoffs.

A payoff ``u`` is Markov-symmetric when V^{p,q}(s1) = -V^{q,p}(s1) for all
Markov policies, i.e. when ``u`` is orthogonal to every k^{p,q} + k^{q,p}.
The constructor here produces at most three such vectors per
(state, a1, a2) cell from structured policy pairs: a base pair that is
uniform before the cell's layer, plays the cell's actions at the cell's state
and action 1 afterwards, plus (when visitation of the state can be made
asymmetric) two pairs that deviate from the base pair at one or two earlier
states.
"""

from dataclasses import dataclass

import numpy as np

from .game import evaluate_value, occupancy, state_visitation, uniform_policy

__all__ = [
    "OrthogonalFamily",
    "PolicyQuadruple",
    "SYM_TOL",
    "reachable_states",
    "base_policies",
    "reach_values",
    "q_value",
    "qbar_value",
    "nonsym_policies",
    "build_orthogonal_family",
    "contract_payoff",
]

SYM_TOL = 1e-9


@dataclass(frozen=True)
class OrthogonalFamily:
    """``vectors[i]`` has the payoff-tensor shape; ``provenance[i]`` is ``(slot, state_id, a1, a2)``."""

    vectors: np.ndarray
    provenance: tuple

    def __len__(self):
        return len(self.vectors)

    def matrix(self):
        """Vectors as rows of a 2-d array."""
        return self.vectors.reshape(len(self.vectors), -1)


@dataclass(frozen=True)
class PolicyQuadruple:
    dot1: np.ndarray
    dot2: np.ndarray
    hat1: np.ndarray
    hat2: np.ndarray


def _state_index(g, s):
    if isinstance(s, (int, np.integer)):
        if not 0 <= s < g.num_states:
            raise ValueError(f"state index {s} out of range")
        return int(s)
    if s not in g.index:
        raise ValueError(f"unknown state {s!r}")
    return g.index[s]


def _check_action(g, a):
    if not 1 <= a <= g.num_actions:
        raise ValueError(f"action {a} outside 1..{g.num_actions}")


def reachable_states(g):
    """Mask of states visited with positive probability under uniform play (hence reachable at all)."""
    pi = uniform_policy(g)
    return state_visitation(g, pi, pi) > 0.0


def base_policies(g, s, a1, a2):
    """Uniform up to the layer of ``s``, the given (1-based) actions at ``s``, action 1 afterwards."""
    s = _state_index(g, s)
    _check_action(g, a1)
    _check_action(g, a2)
    h = g.layer_of[s]
    n = g.num_actions
    pi1 = np.full((g.num_states, n), 1.0 / n)
    later = g.layer_of > h
    pi1[later] = 0.0
    pi1[later, 0] = 1.0
    pi2 = pi1.copy()
    pi1[s] = 0.0
    pi1[s, a1 - 1] = 1.0
    pi2[s] = 0.0
    pi2[s, a2 - 1] = 1.0
    return pi1, pi2


def reach_values(g, s, pi1, pi2):
    """Value table of the indicator payoff at ``s``: the probability of visiting ``s`` from each state."""
    s = _state_index(g, s)
    u = np.zeros(g.shape)
    u[s] = 1.0
    return evaluate_value(g, u, pi1, pi2)


def q_value(g, reach, s_prime, a1, a2):
    """sum over the next layer of P(s_hat | s', a1, a2) V(s_hat)."""
    sp_ = _state_index(g, s_prime)
    h = g.layer_of[sp_]
    dist = g.next_distribution(sp_, a1, a2)
    return float(dist @ reach[g.layer_slice(h + 1)])


def qbar_value(g, reach, s_prime, a1, a2, s_hat, b1, b2):
    """Like :func:`q_value` but the successor ``s_hat`` contributes Q(s_hat, b1, b2) instead of V(s_hat)."""
    sp_ = _state_index(g, s_prime)
    sh = _state_index(g, s_hat)
    h = g.layer_of[sp_]
    if g.layer_of[sh] != h + 1:
        raise ValueError(f"{g.states[sh]!r} is not in the layer after {g.states[sp_]!r}")
    dist = g.next_distribution(sp_, a1, a2)
    nxt = reach[g.layer_slice(h + 1)].copy()
    j = sh - g.offsets[h + 1]
    nxt[j] = q_value(g, reach, sh, b1, b2)
    return float(dist @ nxt)


def _fix(pi, s, a):
    pi[s] = 0.0
    pi[s, a - 1] = 1.0


def nonsym_policies(g, s, a1, a2, tol=SYM_TOL, reachable=None):
    """Policy pairs deviating from the base pair that make visitation of ``s`` asymmetric.

    Scans earlier layers from the closest one back: first single-state
    deviations (a state s' whose Q values are asymmetric in the actions),
    then, two or more layers back, deviations at s' and one successor.
    Returns a :class:`PolicyQuadruple` or ``None``.  States unreachable under
    uniform play are skipped.
    """
    s = _state_index(g, s)
    _check_action(g, a1)
    _check_action(g, a2)
    if reachable is None:
        reachable = reachable_states(g)
    h = int(g.layer_of[s])
    n = g.num_actions
    pi1, pi2 = base_policies(g, s, a1, a2)
    V = reach_values(g, s, pi1, pi2)

    def build(devs):
        d1, d2 = pi1.copy(), pi2.copy()
        for state, b1, b2 in devs:
            _fix(d1, state, b1)
            _fix(d2, state, b2)
        h1, h2 = d1.copy(), d2.copy()
        _fix(h1, s, a2)
        _fix(h2, s, a1)
        return PolicyQuadruple(d1, d2, h1, h2)

    for hp in range(h - 1, -1, -1):
        sl = g.layer_slice(hp)
        for sp_ in range(sl.start, sl.stop):
            if not reachable[sp_]:
                continue
            for b1 in range(1, n + 1):
                for b2 in range(1, n + 1):
                    if abs(q_value(g, V, sp_, b1, b2) - q_value(g, V, sp_, b2, b1)) > tol:
                        return build([(sp_, b1, b2)])
                    if hp < h - 1:
                        nsl = g.layer_slice(hp + 1)
                        for sh in range(nsl.start, nsl.stop):
                            if not reachable[sh]:
                                continue
                            for c1 in range(1, n + 1):
                                for c2 in range(1, n + 1):
                                    lhs = qbar_value(g, V, sp_, b1, b2, sh, c1, c2)
                                    rhs = qbar_value(g, V, sp_, b2, b1, sh, c2, c1)
                                    if abs(lhs - rhs) > tol:
                                        return build([(sp_, b1, b2), (sh, c1, c2)])
    return None


def _pair_vector(g, p, q):
    return occupancy(g, p, q) + occupancy(g, q, p)


def build_orthogonal_family(g, tol=SYM_TOL, dedup_tol=1e-12):
    """Vectors k^{p,q} + k^{q,p} for the structured pairs of every reachable cell."""
    reachable = reachable_states(g)
    n = g.num_actions
    vecs, prov = [], []

    def add(v, tag):
        flat = v.ravel()
        for w in vecs:
            if np.max(np.abs(w.ravel() - flat)) <= dedup_tol:
                return
        vecs.append(v)
        prov.append(tag)

    for s in range(g.num_states):
        if not reachable[s]:
            continue
        sid = g.states[s]
        for a1 in range(1, n + 1):
            for a2 in range(1, n + 1):
                p, q = base_policies(g, s, a1, a2)
                add(_pair_vector(g, p, q), (1, sid, a1, a2))
                quad = nonsym_policies(g, s, a1, a2, tol=tol, reachable=reachable)
                if quad is not None:
                    add(_pair_vector(g, quad.dot1, quad.dot2), (2, sid, a1, a2))
                    add(_pair_vector(g, quad.hat1, quad.hat2), (3, sid, a1, a2))
    vectors = np.array(vecs) if vecs else np.zeros((0,) + g.shape)
    return OrthogonalFamily(vectors, tuple(prov))


def contract_payoff(g, u):
    """Fold the terminal layer into the previous one using its action-(1,1) payoffs.

    Returns the payoff tensor of ``g.truncated(H - 1)``.
    """
    if g.horizon < 2:
        raise ValueError("payoff contraction needs horizon >= 2")
    H = g.horizon
    u = np.asarray(u, dtype=float)
    last = g.layer_slice(H - 1)
    prev = g.layer_slice(H - 2)
    n = g.num_actions
    out = u[:last.start].copy()
    fold = np.asarray(g.transitions[H - 2] @ u[last, 0, 0]).reshape(prev.stop - prev.start, n, n)
    out[prev] += fold
    return out
