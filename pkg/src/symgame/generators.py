"""Random game instances for each symmetry class.

Every generator takes layer sizes (first must be 1), the action count and a
numpy Generator, and returns ``(game, payoff)``.  Payoffs are rescaled into
[-1, 1] by dividing by the largest absolute entry when it exceeds 1; each
class is closed under positive scaling, so membership is preserved.
"""

import numpy as np

from .game import LayeredGame, evaluate_value, uniform_policy, validate_game
from .msg import MsgSet, project_msg
from .msg_basis import build_orthogonal_family
from .oracles import orthonormal_basis, pair_difference_family, visitation_split

__all__ = [
    "random_layered_game",
    "skew_matrix",
    "gen_random",
    "gen_ssg",
    "gen_msg",
    "gen_hsg",
    "gen_lrsg",
    "gen_svg",
    "rescale",
    "GENERATORS",
]


def _layers(sizes):
    sizes = [int(k) for k in sizes]
    if not sizes or sizes[0] != 1:
        raise ValueError(f"layer sizes must start with 1, got {sizes}")
    return [[f"s{h + 1}" if k == 1 and h == 0 else f"s{h + 1}_{i + 1}" for i in range(k)]
            for h, k in enumerate(sizes)]


def _random_rows(rng, rows, cols, density):
    P = rng.random((rows, cols)) * (rng.random((rows, cols)) < density)
    P[np.arange(rows), rng.integers(0, cols, rows)] += rng.random(rows) + 1e-3
    return P / P.sum(axis=1, keepdims=True)


def random_layered_game(sizes, n, rng, density=0.6, symmetric=False, action_free_from=None):
    """Random transitions.

    ``symmetric`` makes P(.|s,a1,a2) = P(.|s,a2,a1).  Layers with 0-based index
    >= ``action_free_from`` get action-independent transitions.
    """
    layers = _layers(sizes)
    mats = []
    for h in range(len(sizes) - 1):
        m, k = sizes[h], sizes[h + 1]
        if action_free_from is not None and h >= action_free_from:
            base = _random_rows(rng, m, k, density)
            P = np.repeat(base[:, None, None, :], n, axis=1).repeat(n, axis=2)
        else:
            P = _random_rows(rng, m * n * n, k, density).reshape(m, n, n, k)
            if symmetric:
                iu = np.triu_indices(n, 1)
                P[:, iu[1], iu[0]] = P[:, iu[0], iu[1]]
        mats.append(P.reshape(m * n * n, k))
    g = LayeredGame(len(sizes), n, layers, mats)
    validate_game(g)
    return g


def skew_matrix(rng, n, count=None):
    shape = (n, n) if count is None else (count, n, n)
    W = rng.uniform(-1.0, 1.0, shape)
    return W - np.swapaxes(W, -1, -2)


def rescale(u):
    m = np.max(np.abs(u), initial=0.0)
    return u / m if m > 1.0 else u


def gen_random(sizes, n, rng):
    g = random_layered_game(sizes, n, rng)
    return g, rng.uniform(-1.0, 1.0, g.shape)


def gen_ssg(sizes, n, rng):
    """Random transitions, skew payoff matrix at every state."""
    g = random_layered_game(sizes, n, rng)
    return g, rescale(skew_matrix(rng, n, g.num_states))


def gen_msg(sizes, n, rng, mode="symmetric"):
    """Markov-symmetric instances.

    ``mode="symmetric"``: player-symmetric transitions with per-state skew
    payoffs (swapping the players maps trajectories to trajectories and
    negates each payoff).  ``mode="projected"``: random transitions and a
    random tensor projected onto the symmetric subspace within the box, then
    scaled so its largest entry has magnitude 1.
    """
    if mode == "symmetric":
        g = random_layered_game(sizes, n, rng, symmetric=True)
        return g, rescale(skew_matrix(rng, n, g.num_states))
    if mode != "projected":
        raise ValueError(f"unknown gen_msg mode {mode!r}")
    for _ in range(20):
        g = random_layered_game(sizes, n, rng)
        msg_set = MsgSet.from_family(build_orthogonal_family(g), g.shape)
        u = project_msg(rng.uniform(-2.0, 2.0, g.shape), msg_set)
        u[np.abs(u) < 1e-14] = 0.0
        m = np.max(np.abs(u))
        if m > 1e-6:
            return g, u / m
    raise RuntimeError("could not draw a non-trivial projected MSG payoff")


def gen_hsg(sizes, n, rng, return_target=False):
    """History-symmetric instances.

    From layer 2 on, transitions ignore the actions and payoffs are constant
    per state, so the value of every length-2 history is a constant G(s2)
    whatever the players do.  The root payoff is w - sum P(s2|s1,.) G(s2) for a
    random skew ``w``, which makes the equivalent first-round matrix equal to
    ``w`` (up to the final rescale).
    """
    g = random_layered_game(sizes, n, rng, action_free_from=1)
    u = np.zeros(g.shape)
    u[1:] = rng.uniform(-1.0, 1.0, g.num_states - 1)[:, None, None]
    pi = uniform_policy(g)
    G = evaluate_value(g, u, pi, pi)
    w = skew_matrix(rng, n) / 2.0
    if g.horizon > 1:
        cont = np.asarray(g.transitions[0] @ G[g.layer_slice(1)]).reshape(n, n)
        u[0] = w - cont
    else:
        u[0] = w
    scale = max(np.max(np.abs(u)), 1.0)
    u /= scale
    if return_target:
        return g, u, w / scale
    return g, u


def gen_lrsg(sizes, n, rng, tol=1e-9):
    """Last-round-symmetric instances: arbitrary payoffs before the last layer; at a
    terminal state, c + skew when no pair can split its visitation, else constant c."""
    g = random_layered_game(sizes, n, rng)
    u = rng.uniform(-1.0, 1.0, g.shape)
    last = g.layer_slice(g.horizon - 1)
    for s in range(last.start, last.stop):
        c = rng.uniform(-0.5, 0.5)
        split = visitation_split(g, s)[0] > tol if g.horizon > 1 else False
        u[s] = c if split else c + skew_matrix(rng, n) / 4.0
    return g, rescale(u)


def gen_svg(sizes, n, rng, mode="symmetric"):
    """Games whose start-state value is invariant under swapping the two policies.

    ``mode="symmetric"``: player-symmetric transitions and symmetric payoff
    matrices, so values at every layer are swap-invariant.  ``mode="projected"``:
    random transitions and a random tensor with its component along the
    deterministic-pair differences k^{d1,d2} - k^{d2,d1} removed (brute force,
    small games only), scaled so its largest entry has magnitude 1.
    """
    if mode == "symmetric":
        g = random_layered_game(sizes, n, rng, symmetric=True)
        W = rng.uniform(-1.0, 1.0, g.shape)
        return g, (W + W.transpose(0, 2, 1)) / 2.0
    if mode != "projected":
        raise ValueError(f"unknown gen_svg mode {mode!r}")
    g = random_layered_game(sizes, n, rng)
    Q = orthonormal_basis(pair_difference_family(g))
    y = rng.uniform(-1.0, 1.0, g.shape).ravel()
    u = (y - Q @ (Q.T @ y)).reshape(g.shape)
    return g, u / max(np.max(np.abs(u)), 1e-300)


GENERATORS = {
    "random": gen_random,
    "ssg": gen_ssg,
    "msg": gen_msg,
    "hsg": gen_hsg,
    "lrsg": gen_lrsg,
    "svg": gen_svg,
}
