"""Copycat play in a symmetric matrix game.

The learner never sees the payoff matrix.  Against a best-responding opponent
its cumulative sampled payoff stays within a few multiples of n*sqrt(T).
"""

import math

import numpy as np

from symgame import LayeredGame, run_experiment, solve_matrix_game
from symgame.generators import rescale, skew_matrix

n, T = 5, 5000
rng = np.random.default_rng(0)
W = rescale(skew_matrix(rng, n))
g = LayeredGame(1, n, [["s1"]], [])

v, x = solve_matrix_game(W)
print(f"game value {v:+.2e}, maximin strategy {np.round(x, 3)}")

for adv in ("best-response", "ogd-informed", "mirror"):
    r = run_experiment(g, W[None], "matrix", adv, T, seed=1)
    s = r.summary
    print(f"{adv:>14}: |sum sampled| = {s['abs_cum_sampled']:7.1f}   "
          f"|sum expected| = {s['abs_cum_expected']:7.1f}   n*sqrt(T) = {n * math.sqrt(T):.0f}")
