"""Symmetric and Markov-symmetric layered games side by side.

Shows that every projected symmetric payoff has safety value zero, and that the
Markov-symmetric learner keeps the per-episode payoff shrinking as T grows.
"""

import numpy as np

from symgame import MsgSet, build_orthogonal_family, project_ssg, run_experiment, safety_level_policy
from symgame.generators import gen_msg, gen_ssg

rng = np.random.default_rng(3)
g, u = gen_ssg([1, 3, 3], 3, rng)
_, V = safety_level_policy(g, project_ssg(rng.uniform(-2, 2, g.shape)))
print(f"safety values of a projected symmetric payoff: max |V| = {np.max(np.abs(V)):.1e}")

gm, um = gen_msg([1, 3, 3], 3, rng, mode="projected")
ms = MsgSet.from_family(build_orthogonal_family(gm), gm.shape)
print(f"Markov-symmetric subspace on {gm.num_states} states, n={gm.num_actions}: "
      f"dimension {ms.null.shape[1]} of {um.size}")

for setting, game, payoff in (("ssg", g, u), ("msg", gm, um)):
    for T in (200, 2000, 20000):
        r = run_experiment(game, payoff, setting, "best-response", T, seed=0)
        print(f"{setting} T={T:>6}: |sum E payoff| / T = {r.summary['abs_cum_expected'] / T:.2e}")
