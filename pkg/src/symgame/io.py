"""JSON game files and payoff tensors.

Game file layout::

    {"horizon": H, "num_actions": n,
     "layers": [["s1"], ["s2", "s3"], ...],
     "transitions": {"s1|1|2": [["s2", 0.5], ["s3", 0.5]], ...},
     "payoff": {"s1|1|2": -0.25, ...}}

Actions in keys are 1-based.  Missing payoff entries are 0.0.  A payoff-only
file (``{"payoff": {...}}``) can be read against an existing game.
"""

import json

import numpy as np
import scipy.sparse as sp

from .game import GameValidationError, LayeredGame, validate_game

__all__ = [
    "load_game",
    "save_game",
    "game_from_dict",
    "game_to_dict",
    "payoff_from_dict",
    "payoff_to_dict",
    "load_payoff",
    "save_payoff",
]

LOAD_TOL = 1e-9


def _key(s, a1, a2):
    return f"{s}|{a1}|{a2}"


def _split_key(key):
    try:
        s, a1, a2 = key.rsplit("|", 2)
        return s, int(a1), int(a2)
    except ValueError:
        raise GameValidationError(f"malformed key {key!r}, expected 'state|a1|a2'") from None


def payoff_from_dict(g, entries):
    u = np.zeros(g.shape)
    n = g.num_actions
    for key, val in entries.items():
        s, a1, a2 = _split_key(key)
        if s not in g.index:
            raise GameValidationError(f"payoff entry for unknown state {s!r}")
        if not (1 <= a1 <= n and 1 <= a2 <= n):
            raise GameValidationError(f"payoff entry {key!r} has an action outside 1..{n}")
        u[g.index[s], a1 - 1, a2 - 1] = float(val)
    return u


def payoff_to_dict(g, u, skip_zeros=False):
    out = {}
    n = g.num_actions
    for i, s in enumerate(g.states):
        for a1 in range(n):
            for a2 in range(n):
                v = float(u[i, a1, a2])
                if skip_zeros and v == 0.0:
                    continue
                out[_key(s, a1 + 1, a2 + 1)] = v
    return out


def game_from_dict(d):
    """Parse a game dict; returns ``(game, payoff)``.

    Transition rows must sum to 1 within 1e-9; they are renormalized so the
    stricter in-memory validation holds.
    """
    try:
        H = int(d["horizon"])
        n = int(d["num_actions"])
        layers = [[str(s) for s in layer] for layer in d["layers"]]
    except (KeyError, TypeError) as exc:
        raise GameValidationError(f"game file is missing field {exc}") from None
    if len(layers) != H:
        raise GameValidationError(f"expected {H} layers, got {len(layers)}")
    kernel = {}
    for key, row in d.get("transitions", {}).items():
        s, a1, a2 = _split_key(key)
        dist = {}
        for s2, p in row:
            dist[str(s2)] = dist.get(str(s2), 0.0) + float(p)
        total = sum(dist.values())
        if abs(total - 1.0) > LOAD_TOL:
            raise GameValidationError(f"transition row {key!r} sums to {total!r}")
        kernel[(s, a1, a2)] = {k: v / total for k, v in dist.items()}
    g = LayeredGame.from_kernel(layers, n, kernel)
    validate_game(g)
    u = payoff_from_dict(g, d.get("payoff", {}))
    return g, u


def game_to_dict(g, u=None):
    n = g.num_actions
    transitions = {}
    for h in range(g.horizon - 1):
        P = g.transitions[h]
        P = P.tocsr() if sp.issparse(P) else np.asarray(P)
        nxt = g.layers[h + 1]
        for i, s in enumerate(g.layers[h]):
            for a1 in range(n):
                for a2 in range(n):
                    r = i * n * n + a1 * n + a2
                    row = P[[r]].toarray().ravel() if sp.issparse(P) else P[r]
                    transitions[_key(s, a1 + 1, a2 + 1)] = [
                        [nxt[j], float(row[j])] for j in np.flatnonzero(row)]
    d = {
        "horizon": g.horizon,
        "num_actions": n,
        "layers": [list(layer) for layer in g.layers],
        "transitions": transitions,
    }
    if u is not None:
        d["payoff"] = payoff_to_dict(g, u)
    return d


def load_game(path):
    with open(path, encoding="utf-8") as fh:
        return game_from_dict(json.load(fh))


def save_game(path, g, u=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(game_to_dict(g, u), fh, indent=1)


def load_payoff(path, g):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    return payoff_from_dict(g, d.get("payoff", d))


def save_payoff(path, g, u, **extra):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"payoff": payoff_to_dict(g, u), **extra}, fh, indent=1)
