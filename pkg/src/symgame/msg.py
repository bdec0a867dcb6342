"""Copycat learner for Markov-symmetric games: box-and-subspace projection plus the episode step.

The virtual payoff set is {u : |u| <= 1 entrywise, B^T u = 0}, where B is an
orthonormal basis of the span of the orthogonal family.  The default
projection is Dykstra's alternating projections between the box (clip) and
the subspace (x - B B^T x).  ``method="qp"`` solves the same problem exactly
as a least-distance program in coordinates of the symmetric subspace,
reduced to non-negative least squares (Lawson-Hanson).
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .game import safety_level_policy
from .ssg import ogd_update

__all__ = [
    "MsgSet",
    "ProjectionError",
    "ProjectionInfo",
    "msg_membership",
    "project_msg",
    "msg_episode_step",
]

log = logging.getLogger(__name__)

RANK_TOL = 1e-10
MEMBER_TOL = 1e-8


class ProjectionError(RuntimeError):
    def __init__(self, msg, info=None):
        super().__init__(msg)
        self.info = info


@dataclass(frozen=True)
class ProjectionInfo:
    iterations: int
    box_residual: float
    subspace_residual: float
    method: str


@dataclass(frozen=True, eq=False)
class MsgSet:
    """Orthonormal complement basis ``basis`` (columns, flattened tensor coordinates) and box bound."""

    basis: np.ndarray
    shape: tuple
    bound: float = 1.0
    member_tol: float = MEMBER_TOL
    null: np.ndarray | None = None

    @classmethod
    def from_family(cls, family, shape=None, bound=1.0, member_tol=MEMBER_TOL, rank_tol=RANK_TOL):
        """Column-pivoted QR of the family vectors; columns of Q up to the numerical rank."""
        A = family.matrix()
        if shape is None:
            shape = family.vectors.shape[1:]
        d = int(np.prod(shape))
        if len(A) == 0:
            return cls(np.zeros((d, 0)), tuple(shape), bound, member_tol, np.eye(d))
        Q, R, _ = scipy.linalg.qr(A.T, pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > rank_tol * max(diag[0], 1e-300)))
        return cls(Q[:, :rank], tuple(shape), bound, member_tol, Q[:, rank:])

    @property
    def rank(self):
        return self.basis.shape[1]

    def subspace_residual(self, u):
        return float(np.max(np.abs(self.basis.T @ np.ravel(u)), initial=0.0))

    def contains(self, u):
        u = np.asarray(u, dtype=float)
        return bool(np.max(np.abs(u)) <= self.bound + 1e-12 and self.subspace_residual(u) <= self.member_tol)


def msg_membership(u, family, tol=MEMBER_TOL):
    """True iff every family vector is orthogonal to ``u`` within ``tol``."""
    if len(family) == 0:
        return True
    return bool(np.max(np.abs(family.matrix() @ np.ravel(u))) <= tol)


def _project_qp(y, N, b):
    # min |z - c|^2 s.t. -b <= N z <= b, with c = N^T y, as a least-distance program
    c = N.T @ y
    G = np.vstack([-N, N])
    h = -b - G @ c
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(E.shape[0])
    f[-1] = 1.0
    w, _ = scipy.optimize.nnls(E, f, maxiter=50 * E.shape[1])
    r = E @ w - f
    if abs(r[-1]) < 1e-14:
        raise ProjectionError("least-distance program reported an empty feasible set")
    return N @ (c - r[:-1] / r[-1])


def _project_dykstra(y, B, b, tol, max_iter):
    x = y.copy()
    p = np.zeros_like(y)
    q = np.zeros_like(y)
    for it in range(1, max_iter + 1):
        z = x + p
        w = z - B @ (B.T @ z)
        p = z - w
        z = w + q
        x_new = np.clip(z, -b, b)
        q = z - x_new
        move = np.max(np.abs(x_new - x))
        x = x_new
        if it % 100 == 0:
            log.debug("dykstra iteration %d: move %.3e, subspace residual %.3e",
                      it, move, np.max(np.abs(B.T @ x), initial=0.0))
        if move < tol:
            return x, it
    raise ProjectionError(
        f"dykstra projection did not converge in {max_iter} iterations",
        ProjectionInfo(max_iter, 0.0, float(np.max(np.abs(B.T @ x), initial=0.0)), "dykstra"))


def project_msg(y, msg_set, method="dykstra", tol=None, max_iter=None, return_info=False):
    """Euclidean projection onto the bounded Markov-symmetric payoff set.

    ``method`` is ``"dykstra"`` (default; stops when an iteration moves less
    than ``tol``, default 1e-10, capped at ``max_iter``, default 10^4) or
    ``"qp"`` (exact active-set solve).  Raises :class:`ProjectionError` when
    the iteration cap is hit.
    """
    y = np.asarray(y, dtype=float)
    shape = y.shape
    flat = y.ravel()
    B = msg_set.basis
    b = msg_set.bound
    if B.shape[1] == 0:
        x, iters = np.clip(flat, -b, b), 0
    elif method == "dykstra":
        x, iters = _project_dykstra(flat, B, b, tol or 1e-10, max_iter or 10_000)
    elif method == "qp":
        N = msg_set.null
        if N is None:
            N = scipy.linalg.null_space(B.T)
        x, iters = np.clip(_project_qp(flat, N, b), -b, b), 1
    else:
        raise ValueError(f"unknown projection method {method!r}")
    x = x.reshape(shape)
    if not return_info:
        return x
    info = ProjectionInfo(
        iters,
        float(max(np.max(np.abs(x)) - b, 0.0)),
        float(np.max(np.abs(B.T @ x.ravel()), initial=0.0)),
        method,
    )
    return x, info


def msg_episode_step(state, g, msg_set, last_trajectory=None, method="dykstra"):
    """Same as the per-state learner, with the projection onto the Markov-symmetric set."""
    if last_trajectory is not None:
        state = ogd_update(state, last_trajectory, lambda y: project_msg(y, msg_set, method=method))
    pi, _ = safety_level_policy(g, state.iterate)
    return state, pi
