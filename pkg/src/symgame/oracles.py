"""Brute-force ground truth over deterministic Markov policies.

Every state is visited at most once per episode in a layered game, so values,
occupancies and the defects C and C* are jointly multilinear in the per-state
action distributions of the two players.  A multilinear function on a product
of simplices is a convex combination of its values at the vertices, so
properties that must hold for all Markov policy pairs can be checked on the
n^|S| x n^|S| deterministic pairs.  The enumeration caps keep this honest.
"""

from dataclasses import dataclass

import numpy as np

from .game import evaluate_value, occupancy, occupancy_batch

__all__ = [
    "EnumerationCapExceeded",
    "DeterministicPolicyIndex",
    "symmetric_defect_C",
    "signed_defect_Cstar",
    "pair_family",
    "msg_membership_bruteforce",
    "visitation_split",
    "span_equal",
    "orthonormal_basis",
    "check_lrsg",
    "check_svg",
    "msg_violation",
    "pair_difference_family",
    "occupancy_inner",
    "OracleVerdict",
    "PAIR_CAP",
]

PAIR_CAP = 10 ** 6


class EnumerationCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DeterministicPolicyIndex:
    """Mixed-radix enumeration of the deterministic Markov policies on a subset of states.

    States outside ``states`` play action 1.  Index ``i`` assigns to
    ``states[k]`` the (0-based) digit ``k`` of ``i`` in base ``n``, least
    significant first.
    """

    num_states: int
    num_actions: int
    states: tuple

    @classmethod
    def for_game(cls, g, states=None):
        if states is None:
            states = range(g.num_states)
        return cls(g.num_states, g.num_actions, tuple(int(s) for s in states))

    def __len__(self):
        return self.num_actions ** len(self.states)

    def actions(self, i):
        """0-based action per state for policy ``i``."""
        out = np.zeros(self.num_states, dtype=int)
        for s in self.states:
            i, out[s] = divmod(i, self.num_actions)
        return out

    def policy(self, i):
        pi = np.zeros((self.num_states, self.num_actions))
        pi[np.arange(self.num_states), self.actions(i)] = 1.0
        return pi

    def all_policies(self):
        """Array (N, S, n) of every policy, in index order."""
        N = len(self)
        idx = np.arange(N)
        acts = np.zeros((N, self.num_states), dtype=int)
        for s in self.states:
            idx, acts[:, s] = np.divmod(idx, self.num_actions)
        out = np.zeros((N, self.num_states, self.num_actions))
        np.put_along_axis(out, acts[:, :, None], 1.0, axis=2)
        return out


@dataclass(frozen=True)
class OracleVerdict:
    """Truthy verdict with an optional witness describing the first violation found."""

    ok: bool
    witness: dict | None = None

    def __bool__(self):
        return self.ok


def symmetric_defect_C(g, u, pi1, pi2):
    """C = V^{p,q}(s1) + V^{q,p}(s1); zero for every pair iff u is Markov-symmetric."""
    return float(evaluate_value(g, u, pi1, pi2)[0] + evaluate_value(g, u, pi2, pi1)[0])


def signed_defect_Cstar(g, u, pi1, pi2):
    """C* = V^{p,q}(s1) - V^{q,p}(s1)."""
    return float(evaluate_value(g, u, pi1, pi2)[0] - evaluate_value(g, u, pi2, pi1)[0])


def _check_cap(count, cap):
    if count > cap:
        raise EnumerationCapExceeded(f"{count} deterministic pairs exceed the cap of {cap}")


def pair_family(g, cap=PAIR_CAP, chunk=4096):
    """Rows k^{d1,d2} + k^{d2,d1} (flattened) over all deterministic pairs with d1 <= d2.

    The sum is symmetric in the pair, so unordered pairs suffice.
    """
    index = DeterministicPolicyIndex.for_game(g)
    N = len(index)
    _check_cap(N * N, cap)
    pols = index.all_policies()
    I, J = np.triu_indices(N)
    rows = []
    for start in range(0, len(I), chunk):
        a, b = I[start:start + chunk], J[start:start + chunk]
        k = occupancy_batch(g, pols[a], pols[b]) + occupancy_batch(g, pols[b], pols[a])
        rows.append(k.reshape(len(a), -1))
    return np.concatenate(rows)


def pair_difference_family(g, cap=PAIR_CAP, chunk=4096):
    """Rows k^{d1,d2} - k^{d2,d1} over deterministic pairs with d1 < d2; orthogonal to u iff
    V^{p,q}(s1) = V^{q,p}(s1) for every Markov pair."""
    index = DeterministicPolicyIndex.for_game(g)
    N = len(index)
    _check_cap(N * N, cap)
    pols = index.all_policies()
    I, J = np.triu_indices(N, 1)
    rows = [np.zeros((0, int(np.prod(g.shape))))]
    for start in range(0, len(I), chunk):
        a, b = I[start:start + chunk], J[start:start + chunk]
        k = occupancy_batch(g, pols[a], pols[b]) - occupancy_batch(g, pols[b], pols[a])
        rows.append(k.reshape(len(a), -1))
    return np.concatenate(rows)


def msg_membership_bruteforce(g, u, tol=1e-8, cap=PAIR_CAP, family=None):
    """True iff |C(u, d1, d2)| <= tol for all deterministic pairs."""
    if family is None:
        family = pair_family(g, cap=cap)
    return bool(np.max(np.abs(family @ np.ravel(u)), initial=0.0) <= tol)


def msg_violation(g, u, cap=PAIR_CAP):
    """Largest |C(u, d1, d2)| over deterministic pairs and the pair attaining it."""
    index = DeterministicPolicyIndex.for_game(g)
    family = pair_family(g, cap=cap)
    c = family @ np.ravel(u)
    k = int(np.argmax(np.abs(c)))
    I, J = np.triu_indices(len(index))
    return float(abs(c[k])), (index.policy(int(I[k])), index.policy(int(J[k])))


def visitation_split(g, s, cap=PAIR_CAP):
    """max over deterministic pairs of |P^{d1,d2}[s] - P^{d2,d1}[s]|, with a witness pair.

    Only states in layers before ``s`` influence its visitation, so only those are enumerated.
    """
    h = g.layer_of[s]
    earlier = np.flatnonzero(g.layer_of < h)
    index = DeterministicPolicyIndex.for_game(g, earlier)
    N = len(index)
    _check_cap(N * N, cap)
    pols = index.all_policies()
    a, b = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    a, b = a.ravel(), b.ravel()
    p_ab = occupancy_batch(g, pols[a], pols[b])[:, s].sum(axis=(1, 2))
    gap = np.abs(p_ab - p_ab.reshape(N, N).T.ravel())
    best = int(np.argmax(gap))
    return float(gap[best]), (pols[a[best]], pols[b[best]])


def orthonormal_basis(rows, tol=1e-10):
    """Orthonormal basis (columns) of the span of ``rows`` via SVD with a relative rank cutoff."""
    A = np.asarray(rows, dtype=float)
    if A.size == 0:
        return np.zeros((A.shape[-1] if A.ndim == 2 else 0, 0))
    U, sv, _ = np.linalg.svd(A.T, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        return np.zeros((A.shape[1], 0))
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    return U[:, :rank]


def span_equal(fam, brute, tol=1e-8):
    """True iff both sets have the same rank and each reconstructs from the other's basis."""
    A = fam.matrix() if hasattr(fam, "matrix") else np.asarray(fam, dtype=float).reshape(len(fam), -1)
    B = np.asarray(brute, dtype=float).reshape(len(brute), -1)
    QA = orthonormal_basis(A)
    QB = orthonormal_basis(B)
    if QA.shape[1] != QB.shape[1]:
        return False

    def residual(X, Q):
        if len(X) == 0:
            return 0.0
        R = X - (X @ Q) @ Q.T
        return float(np.max(np.linalg.norm(R, axis=1) / np.maximum(1.0, np.linalg.norm(X, axis=1))))

    return residual(A, QB) <= tol and residual(B, QA) <= tol


def check_lrsg(g, u, tol=1e-9, cap=PAIR_CAP):
    """Last-round symmetry: u(s,a,b) + u(s,b,a) = 2 u(s,1,1) at every terminal state,
    and u(s,a,b) = u(s,b,a) at terminal states whose visitation some pair can split."""
    u = np.asarray(u, dtype=float)
    last = g.layer_slice(g.horizon - 1)
    for s in range(last.start, last.stop):
        U = u[s]
        defect = float(np.max(np.abs(U + U.T - 2.0 * U[0, 0])))
        if defect > tol:
            return OracleVerdict(False, {"state": g.states[s], "pairwise_sum_defect": defect})
        if g.horizon > 1 and np.max(np.abs(U - U.T)) > tol:
            gap, (p, q) = visitation_split(g, s, cap=cap)
            if gap > tol:
                return OracleVerdict(False, {"state": g.states[s], "asymmetry": float(np.max(np.abs(U - U.T))),
                                             "visitation_split": gap, "pair": (p, q)})
    return OracleVerdict(True)


def check_svg(g, u, h, tol=1e-9, cap=PAIR_CAP):
    """V^{d1,d2}(s) = V^{d2,d1}(s) for every state of layer ``h`` (1-based) and every deterministic pair.

    Values at layer ``h`` depend only on the policies from layer ``h`` on, so
    only those states are enumerated.
    """
    later = np.flatnonzero(g.layer_of >= h - 1)
    index = DeterministicPolicyIndex.for_game(g, later)
    N = len(index)
    _check_cap(N * N, cap)
    sl = g.layer_slice(h - 1)
    pols = index.all_policies()
    for i in range(N):
        for j in range(i + 1, N):
            v12 = evaluate_value(g, u, pols[i], pols[j])[sl]
            v21 = evaluate_value(g, u, pols[j], pols[i])[sl]
            gap = np.abs(v12 - v21)
            if np.max(gap) > tol:
                k = int(np.argmax(gap))
                return OracleVerdict(False, {"state": g.states[sl.start + k], "value_gap": float(gap[k]),
                                             "pair": (pols[i], pols[j])})
    return OracleVerdict(True)


def occupancy_inner(g, u, pi1, pi2):
    """<u, k^{p,q} + k^{q,p}>, the occupancy form of C."""
    return float(np.sum(u * (occupancy(g, pi1, pi2) + occupancy(g, pi2, pi1))))
