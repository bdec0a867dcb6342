"""Episode loop, adversaries and result records.

Per episode the learner emits a Markov policy without ever seeing the payoff,
the adversary emits its policy (it knows the payoff), a trajectory is sampled
and handed to the learner, and the harness records the exact expected payoff
V^{p_t, q_t}(s1) by dynamic programming next to the sampled one.

Randomness: episode ``t`` of a run with seed ``seed`` samples from its own
stream ``numpy.random.default_rng([seed, t])``, so serial and parallel
execution agree and any episode can be replayed on its own.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .game import (
    best_response,
    evaluate_value,
    sample_trajectory,
    state_visitation,
    trajectory_payoff,
    uniform_policy,
    validate_game,
)
from .hsg import hsg_policy, init_hsg_learner, hsg_learner_step, verify_hsg
from .io import load_game
from .matrix_copycat import in_skew_box, init_matrix_learner, matrix_copycat_step
from .msg import MEMBER_TOL, MsgSet, msg_episode_step, msg_membership
from .msg_basis import build_orthogonal_family
from .ssg import in_ssg_set, init_markov_learner, ssg_episode_step

__all__ = [
    "SETTINGS",
    "ADVERSARY_KINDS",
    "CSV_COLUMNS",
    "ClassVerificationError",
    "AdversaryConfig",
    "RunResult",
    "make_adversary",
    "make_learner",
    "verify_setting",
    "bound_denominator",
    "run_experiment",
    "run_many",
    "emit_results",
    "load_results",
    "project_simplex",
]

SETTINGS = ("matrix", "ssg", "msg", "hsg")
ADVERSARY_KINDS = ("fixed-markov", "best-response", "clairvoyant-best-response", "ogd-informed", "mirror")
CSV_COLUMNS = ("episode", "sampled_payoff", "expected_payoff", "cum_expected", "abs_cum_over_bound")


class ClassVerificationError(ValueError):
    pass


@njit(cache=True)
def _project_rows(v):
    out = np.empty_like(v)
    n = v.shape[1]
    for r in range(v.shape[0]):
        u = -np.sort(-v[r])
        css = 0.0
        theta = 0.0
        for i in range(n):
            css += u[i]
            t = (css - 1.0) / (i + 1)
            if u[i] - t > 0:
                theta = t
        out[r] = np.maximum(v[r] - theta, 0.0)
    return out


def project_simplex(v):
    """Euclidean projection of each row of ``v`` onto the probability simplex (sort-based)."""
    return _project_rows(np.atleast_2d(np.asarray(v, dtype=float)))


# ---------------------------------------------------------------------------
# adversaries


@dataclass(frozen=True)
class AdversaryConfig:
    """``kind`` is one of ADVERSARY_KINDS.

    ``policy`` (fixed-markov): array (S, n).  ``step`` (ogd-informed): step
    size, default 1/sqrt(T).
    """

    kind: str
    policy: np.ndarray | None = None
    step: float | None = None

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}; choose from {ADVERSARY_KINDS}")
        if self.kind == "fixed-markov" and self.policy is None:
            raise ValueError("fixed-markov adversary needs a policy")
        if self.step is not None and not self.step > 0:
            raise ValueError(f"adversary step must be positive, got {self.step}")


class _Adversary:
    clairvoyant = False

    def __init__(self, g, u):
        self.g = g
        self.u = u
        self.last_learner = None

    def policy(self, t, learner_policy=None):
        raise NotImplementedError

    def observe(self, learner_policy, traj):
        self.last_learner = learner_policy


class FixedMarkov(_Adversary):
    def __init__(self, g, u, pi):
        super().__init__(g, u)
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (g.num_states, g.num_actions) or np.any(pi < 0) or \
                np.max(np.abs(pi.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("fixed-markov policy must be a valid (S, n) Markov policy")
        self.pi = pi

    def policy(self, t, learner_policy=None):
        return self.pi


class BestResponse(_Adversary):
    """Best response to the learner's policy of the previous episode (uniform before the first)."""

    def policy(self, t, learner_policy=None):
        target = self.last_learner if self.last_learner is not None else uniform_policy(self.g)
        return best_response(self.g, self.u, target, "minimize")


class ClairvoyantBestResponse(_Adversary):
    """Sees the learner's current policy before choosing; stronger than the simultaneous protocol."""

    clairvoyant = True

    def policy(self, t, learner_policy=None):
        return best_response(self.g, self.u, learner_policy, "minimize")


class OgdInformed(_Adversary):
    """Per-state projected gradient descent on its own policy against the true payoff."""

    def __init__(self, g, u, step):
        super().__init__(g, u)
        self.step = step
        self.pi = uniform_policy(g)

    def policy(self, t, learner_policy=None):
        return self.pi

    def observe(self, learner_policy, traj):
        super().observe(learner_policy, traj)
        g = self.g
        if g.horizon == 1:
            self.pi = project_simplex(self.pi - self.step * (learner_policy[0] @ self.u[0])[None, :])
            return
        V = evaluate_value(g, self.u, learner_policy, self.pi)
        d = state_visitation(g, learner_policy, self.pi)
        grad = np.zeros_like(self.pi)
        n = g.num_actions
        for h in range(g.horizon):
            sl = g.layer_slice(h)
            Q = self.u[sl].copy()
            if h < g.horizon - 1:
                Q += np.asarray(g.transitions[h] @ V[g.layer_slice(h + 1)]).reshape(sl.stop - sl.start, n, n)
            grad[sl] = d[sl, None] * np.einsum("si,sij->sj", learner_policy[sl], Q)
        self.pi = project_simplex(self.pi - self.step * grad)


class Mirror(_Adversary):
    """Plays the learner's previous policy (uniform before the first episode)."""

    def policy(self, t, learner_policy=None):
        return self.last_learner if self.last_learner is not None else uniform_policy(self.g)


def make_adversary(cfg, g, u, rng=None, episodes=None):
    """Adversary object with ``policy(t, learner_policy)`` and ``observe(learner_policy, traj)``."""
    if cfg.kind == "fixed-markov":
        return FixedMarkov(g, u, cfg.policy)
    if cfg.kind == "best-response":
        return BestResponse(g, u)
    if cfg.kind == "clairvoyant-best-response":
        return ClairvoyantBestResponse(g, u)
    if cfg.kind == "ogd-informed":
        step = cfg.step if cfg.step is not None else 1.0 / math.sqrt(max(episodes or 1, 1))
        return OgdInformed(g, u, step)
    return Mirror(g, u)


# ---------------------------------------------------------------------------
# learners: only the dynamics and trajectories go in


class _Learner:
    def __init__(self, g, episodes, eta):
        self.g = g

    def act(self, last_traj):
        raise NotImplementedError


class MatrixLearner(_Learner):
    def __init__(self, g, episodes, eta):
        super().__init__(g, episodes, eta)
        self.state = init_matrix_learner(g.num_actions, horizon=episodes or None, step_size=eta)

    def act(self, last_traj):
        pair = None if last_traj is None else (last_traj.actions1[0], last_traj.actions2[0])
        self.state, x = matrix_copycat_step(self.state, pair)
        return x[None, :]


class SsgLearner(_Learner):
    def __init__(self, g, episodes, eta):
        super().__init__(g, episodes, eta)
        self.state = init_markov_learner(g, horizon=episodes or None, step_size=eta)

    def act(self, last_traj):
        self.state, pi = ssg_episode_step(self.state, self.g, last_traj)
        return pi


class MsgLearner(_Learner):
    def __init__(self, g, episodes, eta, msg_set=None):
        super().__init__(g, episodes, eta)
        self.msg_set = msg_set if msg_set is not None else MsgSet.from_family(build_orthogonal_family(g), g.shape)
        self.state = init_markov_learner(g, horizon=episodes or None, step_size=eta)

    def act(self, last_traj):
        self.state, pi = msg_episode_step(self.state, self.g, self.msg_set, last_traj)
        return pi


class HsgLearner(_Learner):
    def __init__(self, g, episodes, eta):
        super().__init__(g, episodes, eta)
        self.state = init_hsg_learner(g, horizon=episodes or None, step_size=eta)

    def act(self, last_traj):
        pair = None if last_traj is None else (last_traj.actions1[0], last_traj.actions2[0])
        self.state, x, _ = hsg_learner_step(self.state, pair)
        return hsg_policy(self.g, x)


_LEARNERS = {"matrix": MatrixLearner, "ssg": SsgLearner, "msg": MsgLearner, "hsg": HsgLearner}


def make_learner(setting, g, episodes=None, eta=None, **kw):
    """Learner for ``setting``; it is constructed from the dynamics alone."""
    if setting not in _LEARNERS:
        raise ValueError(f"unknown setting {setting!r}; choose from {SETTINGS}")
    return _LEARNERS[setting](g, episodes, eta, **kw)


def verify_setting(g, u, setting, tol=None, family=None):
    """Raise :class:`ClassVerificationError` unless ``u`` belongs to the setting's symmetry class."""
    if np.max(np.abs(u)) > 1.0 + 1e-12:
        raise ClassVerificationError("payoffs must lie in [-1, 1]")
    if setting == "matrix":
        if g.horizon != 1:
            raise ClassVerificationError(f"matrix setting needs horizon 1, got {g.horizon}")
        if not in_skew_box(u[0], 1.0, tol or 1e-9):
            raise ClassVerificationError("payoff matrix is not skew-symmetric")
    elif setting == "ssg":
        if not in_ssg_set(u, 1.0, tol or 1e-9):
            raise ClassVerificationError("some state's payoff matrix is not skew-symmetric")
    elif setting == "msg":
        family = family if family is not None else build_orthogonal_family(g)
        if not msg_membership(u, family, tol or MEMBER_TOL):
            raise ClassVerificationError("payoff is not symmetric with respect to Markov policies")
    elif setting == "hsg":
        verdict = verify_hsg(g, u, tol or 1e-9)
        if not verdict:
            raise ClassVerificationError(f"payoff is not history-symmetric: {verdict.witness}")
    else:
        raise ValueError(f"unknown setting {setting!r}")


def bound_denominator(setting, g, t):
    n = g.num_actions
    if setting == "matrix":
        return n * math.sqrt(t)
    if setting == "hsg":
        return g.horizon * n * math.sqrt(t)
    return n * math.sqrt(t * g.num_states * g.horizon)


# ---------------------------------------------------------------------------
# runs


@dataclass(eq=False)
class RunResult:
    episode: np.ndarray
    sampled_payoff: np.ndarray
    expected_payoff: np.ndarray
    cum_expected: np.ndarray
    abs_cum_over_bound: np.ndarray
    summary: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.episode)

    def records(self):
        return [
            {c: (int(v) if c == "episode" else float(v)) for c, v in zip(CSV_COLUMNS, row)}
            for row in zip(self.episode, self.sampled_payoff, self.expected_payoff,
                           self.cum_expected, self.abs_cum_over_bound)
        ]

    def __eq__(self, other):
        # wall time is the only non-deterministic field
        if not isinstance(other, RunResult):
            return NotImplemented
        strip = lambda d: {k: v for k, v in d.items() if k != "wall_time"}
        return (all(np.array_equal(getattr(self, c), getattr(other, c)) for c in CSV_COLUMNS)
                and strip(self.summary) == strip(other.summary))


def run_experiment(game, payoff=None, setting="ssg", adversary=None, episodes=1000, seed=0,
                   eta=None, force=False, learner_kw=None):
    """Play ``episodes`` episodes of ``setting``'s copycat learner against ``adversary``.

    ``game`` is a :class:`LayeredGame` (with ``payoff``) or a path to a game file.
    """
    t0 = time.perf_counter()
    if isinstance(game, (str, bytes)) or hasattr(game, "__fspath__"):
        g, u_file = load_game(game)
        u = u_file if payoff is None else np.asarray(payoff, dtype=float)
    else:
        g, u = game, np.asarray(payoff, dtype=float)
    validate_game(g)
    if adversary is None:
        adversary = AdversaryConfig("best-response")
    elif isinstance(adversary, str):
        adversary = AdversaryConfig(adversary)
    if not force:
        verify_setting(g, u, setting)

    T = int(episodes)
    learner = make_learner(setting, g, T, eta, **(learner_kw or {}))
    adv = make_adversary(adversary, g, u, episodes=T)
    sampled = np.zeros(T)
    expected = np.zeros(T)
    last = None
    for t in range(T):
        rng = np.random.default_rng([seed, t])
        p = learner.act(last)
        q = adv.policy(t, p if adv.clairvoyant else None)
        traj = sample_trajectory(g, p, q, rng)
        sampled[t] = trajectory_payoff(u, traj)
        expected[t] = evaluate_value(g, u, p, q)[0]
        adv.observe(p, traj)
        last = traj

    cum = np.cumsum(expected)
    ep = np.arange(1, T + 1)
    denom = np.array([bound_denominator(setting, g, t) for t in ep]) if T else np.zeros(0)
    ratio = np.abs(cum) / denom if T else np.zeros(0)
    final = float(abs(cum[-1])) if T else 0.0
    summary = {
        "setting": setting,
        "adversary": adversary.kind,
        "episodes": T,
        "seed": int(seed),
        "eta": float(learner.state.step_size),
        "abs_cum_expected": final,
        "abs_cum_sampled": float(abs(sampled.sum())) if T else 0.0,
        "bound_denominator": bound_denominator(setting, g, T) if T else 0.0,
        "bound_ratio": final / bound_denominator(setting, g, T) if T else 0.0,
        "num_states": g.num_states,
        "num_actions": g.num_actions,
        "horizon": g.horizon,
        "wall_time": time.perf_counter() - t0,
    }
    return RunResult(ep, sampled, expected, cum, ratio, summary)


def _run_one(job):
    args, kwargs = job
    return run_experiment(*args, **kwargs)


def run_many(game, payoff, setting, adversary, episodes, seeds, eta=None, force=False, workers=1):
    """One independent run per seed, returned in seed order.

    ``workers > 1`` runs them in a process pool; every run is single-threaded
    and seeded, so the results do not depend on ``workers``.
    """
    jobs = [((game, payoff, setting, adversary, episodes, seed), {"eta": eta, "force": force})
            for seed in seeds]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def emit_results(r, fmt, path):
    """Write ``r`` as CSV (fixed columns) or JSON (records + summary)."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for rec in r.records():
                w.writerow([rec["episode"]] + [format(rec[c], ".17g") for c in CSV_COLUMNS[1:]])
    elif fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"records": r.records(), "summary": r.summary}, fh, indent=1)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_results(path):
    """Inverse of the JSON branch of :func:`emit_results`."""
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    recs = d["records"]
    cols = {c: np.array([rec[c] for rec in recs], dtype=int if c == "episode" else float) for c in CSV_COLUMNS}
    return RunResult(**cols, summary=d["summary"])
