"""History-symmetric games: history expansion, value collapse, the equivalent first-round
matrix game, a verifier, and the payoff-blind learner.

In a history-symmetric game the value of every length-2 history is the same
for all policy pairs, so only first-round play matters: the game is
equivalent to the matrix game

    u'(a1, a2) = u(s1, a1, a2) + sum_{s'} P(s' | s1, a1, a2) V*((s1, a1, a2, s')),

where V* is the value under both players always playing action 1.  The
learner runs the matrix copycat on first-round action pairs over the skew set
bounded by H and plays action 1 afterwards.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .game import LayeredGame, constant_policy, evaluate_value, validate_game
from .matrix_copycat import init_matrix_learner, matrix_copycat_step

__all__ = [
    "HistoryGame",
    "ExpansionCapExceeded",
    "HsgVerdict",
    "EXPANSION_CAP",
    "expand_histories",
    "continuation_value",
    "equivalent_matrix_game",
    "joint_value_range",
    "verify_hsg",
    "init_hsg_learner",
    "hsg_learner_step",
    "hsg_policy",
]

EXPANSION_CAP = 10 ** 5


class ExpansionCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class HistoryGame:
    """``game`` has one state per history; ``origin[z]`` is the last original state of
    history ``z`` and ``parent[z]`` is ``(parent history, a1, a2)`` (``None`` at the root)."""

    game: LayeredGame
    origin: np.ndarray
    parent: tuple

    def history(self, z):
        """Alternating tuple (s1, a1, a2, s2, ...) with 1-based actions."""
        parts = self.game.states[z].split("|")
        return tuple(p if i % 3 == 0 else int(p) for i, p in enumerate(parts))


def expand_histories(g, u=None, cap=EXPANSION_CAP):
    """Unroll ``g`` into its history tree; returns ``(HistoryGame, lifted payoff or None)``."""
    n = g.num_actions
    sizes = [1]
    for h in range(1, g.horizon):
        nxt = sizes[-1] * n * n * len(g.layers[h])
        sizes.append(nxt)
        if sum(sizes) > cap:
            raise ExpansionCapExceeded(f"history expansion needs more than {cap} states")
    origin = [0]
    parent = [None]
    names = [g.states[0]]
    layer_ids = [[names[0]]]
    mats = []
    cur = [0]  # global history indices of current layer
    for h in range(g.horizon - 1):
        Pdense = g.kernel(h)  # (|S_h|, n, n, |S_{h+1}|)
        k = len(g.layers[h + 1])
        rows, cols, vals = [], [], []
        new = []
        base_off = g.offsets[h]
        for zi, z in enumerate(cur):
            s_loc = origin[z] - base_off
            for a1 in range(n):
                for a2 in range(n):
                    r = zi * n * n + a1 * n + a2
                    for j in range(k):
                        idx = len(origin)
                        origin.append(int(g.offsets[h + 1] + j))
                        parent.append((z, a1 + 1, a2 + 1))
                        names.append(f"{names[z]}|{a1 + 1}|{a2 + 1}|{g.layers[h + 1][j]}")
                        new.append(idx)
                        p = Pdense[s_loc, a1, a2, j]
                        if p != 0.0:
                            rows.append(r)
                            cols.append(len(new) - 1)
                            vals.append(p)
        mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(len(cur) * n * n, len(new))))
        layer_ids.append([names[z] for z in new])
        cur = new
    hg_game = LayeredGame(g.horizon, n, layer_ids, mats)
    hg = HistoryGame(hg_game, np.array(origin), tuple(parent))
    lifted = None if u is None else np.asarray(u, dtype=float)[hg.origin]
    return hg, lifted


def _history_index(hg, z):
    if isinstance(z, (int, np.integer)):
        return int(z)
    if isinstance(z, (tuple, list)):
        z = "|".join(str(x) for x in z)
    try:
        return hg.game.index[z]
    except KeyError:
        raise ValueError(f"unknown history {z!r}") from None


def continuation_value(hg, u_lifted, z2):
    """Value of a history under both players always playing action 1."""
    z = _history_index(hg, z2)
    pi = constant_policy(hg.game, 1)
    return float(evaluate_value(hg.game, u_lifted, pi, pi)[z])


def equivalent_matrix_game(g, u, cap=EXPANSION_CAP):
    """First-round matrix u'(a1, a2) with the continuation values folded in."""
    u = np.asarray(u, dtype=float)
    n = g.num_actions
    if g.horizon == 1:
        return u[0].copy()
    hg, lifted = expand_histories(g, u, cap=cap)
    pi = constant_policy(hg.game, 1)
    V = evaluate_value(hg.game, lifted, pi, pi)
    cont = np.asarray(hg.game.transitions[0] @ V[hg.game.layer_slice(1)]).reshape(n, n)
    return u[0] + cont


def joint_value_range(g, u):
    """Min and max of V(s) over all policy pairs, with the maximizing/minimizing joint choices.

    With both action choices controlled jointly this is a single-agent MDP;
    on a history tree every history-dependent pair is a Markov pair, so the
    range covers all history-dependent policies.
    """
    n = g.num_actions
    Vmax = np.zeros(g.num_states)
    Vmin = np.zeros(g.num_states)
    amax = np.zeros(g.num_states, dtype=int)
    amin = np.zeros(g.num_states, dtype=int)
    for h in reversed(range(g.horizon)):
        sl = g.layer_slice(h)
        m = sl.stop - sl.start
        if h < g.horizon - 1:
            P = g.transitions[h]
            qmax = u[sl] + np.asarray(P @ Vmax[g.layer_slice(h + 1)]).reshape(m, n, n)
            qmin = u[sl] + np.asarray(P @ Vmin[g.layer_slice(h + 1)]).reshape(m, n, n)
        else:
            qmax = qmin = u[sl]
        flat_max = qmax.reshape(m, -1)
        flat_min = qmin.reshape(m, -1)
        amax[sl] = flat_max.argmax(axis=1)
        amin[sl] = flat_min.argmin(axis=1)
        Vmax[sl] = flat_max.max(axis=1)
        Vmin[sl] = flat_min.min(axis=1)
    return Vmin, Vmax, amin, amax


@dataclass(frozen=True)
class HsgVerdict:
    ok: bool
    value_spread: float
    skew_defect: float
    witness: dict | None = None

    def __bool__(self):
        return self.ok


def _joint_policy(hg, choice):
    n = hg.game.num_actions
    S = hg.game.num_states
    p1 = np.zeros((S, n))
    p2 = np.zeros((S, n))
    p1[np.arange(S), choice // n] = 1.0
    p2[np.arange(S), choice % n] = 1.0
    return p1, p2


def verify_hsg(g, u, tol=1e-9, cap=EXPANSION_CAP):
    """Check that every length-2 history has a policy-independent value and that the
    equivalent first-round matrix is skew.  Returns an :class:`HsgVerdict`."""
    validate_game(g)
    u = np.asarray(u, dtype=float)
    uprime = equivalent_matrix_game(g, u, cap=cap)
    skew_defect = float(np.max(np.abs(uprime + uprime.T)))
    spread = 0.0
    witness = None
    if g.horizon > 1:
        hg, lifted = expand_histories(g, u, cap=cap)
        Vmin, Vmax, amin, amax = joint_value_range(hg.game, lifted)
        sl = hg.game.layer_slice(1)
        gaps = Vmax[sl] - Vmin[sl]
        i = int(np.argmax(gaps))
        spread = float(gaps[i])
        if spread > tol:
            z = sl.start + i
            witness = {
                "history": hg.game.states[z],
                "max_value": float(Vmax[z]),
                "min_value": float(Vmin[z]),
                "max_pair": _joint_policy(hg, amax),
                "min_pair": _joint_policy(hg, amin),
            }
    if witness is None and skew_defect > tol:
        a, b = np.unravel_index(np.argmax(np.abs(uprime + uprime.T)), uprime.shape)
        witness = {"actions": (int(a) + 1, int(b) + 1), "u_ab": float(uprime[a, b]), "u_ba": float(uprime[b, a])}
    return HsgVerdict(spread <= tol and skew_defect <= tol, spread, skew_defect, witness)


def init_hsg_learner(g, horizon=None, step_size=None):
    """Matrix copycat state over n x n skew matrices bounded by H."""
    return init_matrix_learner(g.num_actions, horizon=horizon, bound=float(g.horizon), step_size=step_size)


def hsg_learner_step(state, last_first_round=None):
    """Matrix copycat step on the first-round action pair.

    Returns ``(state, first-round strategy, continuation action)``; the
    continuation is action 1 at every later state.
    """
    state, x = matrix_copycat_step(state, last_first_round)
    return state, x, 1


def hsg_policy(g, first_round):
    """Markov policy playing ``first_round`` at s1 and action 1 afterwards."""
    pi = constant_policy(g, 1)
    pi[0] = first_round
    return pi
