"""Zero-sum matrix games: value and maximin strategy of the row player.

The solver is a dense two-phase tableau simplex (Bland's entering rule, largest
pivot among ratio-test ties), compiled
with numba because the learners call it once per state per episode.

Ties among optimal row strategies are broken deterministically: when the
optimum is not unique, every vertex of the optimal face that maximizes a
single coordinate is computed and the distinct vertices are averaged.  For
the zero game this yields the uniform strategy.
"""

import numpy as np
from numba import njit

__all__ = ["solve_matrix_game", "solve_matrix_games", "MatrixGameError"]

_PIVOT_TOL = 1e-9
_MAX_PIVOTS = 10_000


class MatrixGameError(ValueError):
    pass


@njit(cache=True)
def _pivot(T, row, col):
    T[row, :] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row:
            f = T[i, col]
            if f != 0.0:
                T[i, :] -= f * T[row, :]


@njit(cache=True)
def _run_simplex(T, basis, allowed, tol, max_pivots, dantzig=False):
    # T[-1, :-1] holds reduced costs, T[-1, -1] minus the objective.
    m = T.shape[0] - 1
    ncols = T.shape[1] - 1
    for _ in range(max_pivots):
        col = -1
        most = -tol
        for j in range(ncols):
            if allowed[j] and T[m, j] < most:
                col = j
                if not dantzig:
                    break
                most = T[m, j]
        if col == -1:
            return 0
        # min ratio, then the largest pivot among near-ties for stability
        best = np.inf
        for i in range(m):
            if T[i, col] > tol:
                ratio = T[i, ncols] / T[i, col]
                if ratio < best:
                    best = ratio
        row = -1
        for i in range(m):
            if T[i, col] > tol and T[i, ncols] / T[i, col] <= best + 1e-12:
                if row == -1 or T[i, col] > T[row, col] * (1.0 + 1e-12) or \
                        (T[i, col] >= T[row, col] * (1.0 - 1e-12) and basis[i] < basis[row]):
                    row = i
        if row == -1:
            return 2  # unbounded
        _pivot(T, row, col)
        basis[row] = col
    return 3


@njit(cache=True)
def _phase1(A, b, tol, max_pivots):
    """Feasible basis for A x = b, x >= 0 (b >= 0) via artificials.

    Returns (T, basis, allowed, status) with status 0 = feasible, 1 =
    infeasible, 2/3 as in _run_simplex; artificial columns are disallowed
    afterwards.
    """
    m, n = A.shape
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    for i in range(m):
        T[i, n + i] = 1.0
        T[i, n + m] = b[i]
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        basis[i] = n + i
    for j in range(n):
        s = 0.0
        for i in range(m):
            s += T[i, j]
        T[m, j] = -s
    s = 0.0
    for i in range(m):
        s += b[i]
    T[m, n + m] = -s
    allowed = np.ones(n + m, dtype=np.bool_)
    status = _run_simplex(T, basis, allowed, tol, max_pivots)
    if status != 0:
        return T, basis, allowed, status
    if -T[m, n + m] > 1e-9 * max(1.0, s):
        return T, basis, allowed, 1
    # drive artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if abs(T[i, j]) > tol:
                    _pivot(T, i, j)
                    basis[i] = j
                    break
    for j in range(n, n + m):
        allowed[j] = False
    return T, basis, allowed, 0


@njit(cache=True)
def _phase2(T, basis, allowed, c, tol, max_pivots):
    """min c.x from the feasible basis in T (modified in place)."""
    m = T.shape[0] - 1
    n = c.shape[0]
    T[m, :] = 0.0
    for j in range(n):
        T[m, j] = c[j]
    for i in range(m):
        bj = basis[i]
        if bj < n and c[bj] != 0.0:
            T[m, :] -= c[bj] * T[i, :]
    x = np.zeros(n)
    status = _run_simplex(T, basis, allowed, tol, max_pivots)
    if status != 0:
        return x, status, False
    ncols = T.shape[1] - 1
    is_basic = np.zeros(ncols, dtype=np.bool_)
    for i in range(m):
        is_basic[basis[i]] = True
        if basis[i] < n:
            x[basis[i]] = T[i, ncols]
    degenerate = False
    for j in range(n):
        if not is_basic[j] and abs(T[m, j]) <= 1e-10:
            degenerate = True
    return x, 0, degenerate


@njit(cache=True)
def _simplex_eq(A, b, c, tol, max_pivots):
    """min c.x  s.t.  A x = b, x >= 0 with b >= 0.

    Returns (x, status, degenerate) where status 0 = optimal, 1 = infeasible,
    2 = unbounded, 3 = pivot cap.  ``degenerate`` flags a zero reduced cost on
    some nonbasic column, i.e. possible alternative optima.
    """
    T, basis, allowed, status = _phase1(A, b, tol, max_pivots)
    if status != 0:
        return np.zeros(A.shape[1]), status, False
    return _phase2(T, basis, allowed, c, tol, max_pivots)


@njit(cache=True)
def _value_lp(Ms, tol, max_pivots):
    # Ms > 0 entrywise.  min 1.y  s.t.  Ms^T y - t = 1,  y, t >= 0.
    n, k = Ms.shape
    A = np.zeros((k, n + k))
    A[:, :n] = Ms.T
    for j in range(k):
        A[j, n + j] = -1.0
    b = np.ones(k)
    c = np.zeros(n + k)
    c[:n] = 1.0
    z, status, degenerate = _simplex_eq(A, b, c, tol, max_pivots)
    return z[:n], status, degenerate


@njit(cache=True)
def _dual_value_lp(Ms, tol, max_pivots):
    # Ms > 0 entrywise.  max 1.z  s.t.  Ms z <= 1, z >= 0; the slack basis is feasible.
    # The row player's y (min 1.y s.t. Ms^T y >= 1) is read off the slack reduced costs.
    n, k = Ms.shape
    T = np.zeros((n + 1, k + n + 1))
    T[:n, :k] = Ms
    for i in range(n):
        T[i, k + i] = 1.0
        T[i, k + n] = 1.0
    T[n, :k] = -1.0
    basis = np.empty(n, dtype=np.int64)
    for i in range(n):
        basis[i] = k + i
    allowed = np.ones(k + n, dtype=np.bool_)
    status = _run_simplex(T, basis, allowed, tol, max_pivots, True)
    y = np.zeros(n)
    if status != 0:
        return y, status, False
    for i in range(n):
        y[i] = max(T[n, k + i], 0.0)
    # a zero basic variable means the dual (row) optimum may not be unique
    degenerate = False
    for i in range(n):
        if T[i, k + n] <= 1e-10:
            degenerate = True
    return y, 0, degenerate


@njit(cache=True)
def _face_vertices(Ms, level, tol, max_pivots):
    # For each i: max x_i  s.t.  Ms^T x - t = level,  sum x = 1,  x, t >= 0.
    # One phase 1, then the phase-2 solves chain from the previous optimal basis.
    n, k = Ms.shape
    A = np.zeros((k + 1, n + k))
    A[:k, :n] = Ms.T
    for j in range(k):
        A[j, n + j] = -1.0
    A[k, :n] = 1.0
    b = np.empty(k + 1)
    b[:k] = level
    b[k] = 1.0
    out = np.zeros((n, n))
    ok = np.zeros(n, dtype=np.bool_)
    T, basis, allowed, status = _phase1(A, b, tol, max_pivots)
    if status != 0:
        return out, ok
    c = np.zeros(n + k)
    for i in range(n):
        c[:] = 0.0
        c[i] = -1.0
        z, st, _ = _phase2(T, basis, allowed, c, tol, max_pivots)
        if st == 0:
            out[i] = z[:n]
            ok[i] = True
    return out, ok


@njit(cache=True)
def _maximin(Ms, average, tol, max_pivots):
    n = Ms.shape[0]
    y, status, degenerate = _dual_value_lp(Ms, tol, max_pivots)
    if status != 0 or y.sum() <= 0.0:
        y, status, degenerate = _value_lp(Ms, tol, max_pivots)
    if status != 0:
        return y, status
    total = y.sum()
    x = y / total
    if degenerate and average:
        level = 1.0 / total - 1e-12 * Ms.max()
        cand, ok = _face_vertices(Ms, level, tol, max_pivots)
        vertices = np.zeros((n, n))
        count = 0
        for i in range(n):
            if not ok[i]:
                continue
            v = np.maximum(cand[i], 0.0)
            v /= v.sum()
            # ill-conditioned faces can yield slightly suboptimal vertices; drop them
            if (v @ Ms).min() < 1.0 / total - 1e-12 * Ms.max():
                continue
            fresh = True
            for r in range(count):
                if np.max(np.abs(v - vertices[r])) <= 1e-9:
                    fresh = False
                    break
            if fresh:
                vertices[count] = v
                count += 1
        if count > 0:
            x = vertices[:count].sum(axis=0) / count
    x = np.maximum(x, 0.0)
    return x / x.sum(), 0


@njit(cache=True)
def _solve(M, average, tol, max_pivots):
    # status 0 ok, 4 non-finite input, otherwise the simplex status
    n = M.shape[0]
    lo = M.min()
    hi = M.max()
    if not (np.isfinite(lo) and np.isfinite(hi)):
        return 0.0, np.zeros(n), 4
    if n == 1 or hi - lo <= 1e-14 * max(1.0, abs(lo), abs(hi)):
        # constant game: every strategy is optimal, the tie-break gives uniform
        x = np.full(n, 1.0 / n)
        return (x @ M).min(), x, 0
    x, status = _maximin(M + (1.0 - lo), average, tol, max_pivots)
    if status != 0:
        return 0.0, x, status
    return (x @ M).min(), x, 0


@njit(cache=True)
def _solve_batch(Qs, average, tol, max_pivots):
    k, n, _ = Qs.shape
    values = np.zeros(k)
    X = np.zeros((k, n))
    for s in range(k):
        v, x, status = _solve(Qs[s], average, tol, max_pivots)
        if status != 0:
            return values, X, s, status
        values[s] = v
        X[s] = x
    return values, X, -1, 0


def _fail(status, where=""):
    if status == 4:
        raise MatrixGameError(f"payoff matrix{where} has non-finite entries")
    raise MatrixGameError(f"simplex failed{where} with status {status}")


def solve_matrix_games(Qs, tie_break="average"):
    """Batched :func:`solve_matrix_game` over a stack of games, shape (k, n, m)."""
    Qs = np.ascontiguousarray(Qs, dtype=float)
    if Qs.ndim != 3 or Qs.shape[1] == 0 or Qs.shape[2] == 0:
        raise MatrixGameError(f"expected a stack of non-empty matrices, got shape {Qs.shape}")
    if tie_break not in ("average", "first"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    values, X, failed, status = _solve_batch(Qs, tie_break == "average", _PIVOT_TOL, _MAX_PIVOTS)
    if failed >= 0:
        _fail(status, f" on game {failed} of the batch")
    return values, X


def solve_matrix_game(M, tie_break="average"):
    """Value and maximin mixed strategy of the row (maximizing) player.

    Parameters
    ----------
    M : array_like, shape (n, m)
        Payoff to the row player.
    tie_break : {"average", "first"}
        ``"average"`` averages the optimal-face vertices when the optimum is
        not unique; ``"first"`` returns the first optimal vertex found.

    Returns
    -------
    value : float
        ``min_j x^T M e_j`` for the returned strategy ``x``.
    x : ndarray, shape (n,)
    """
    M = np.ascontiguousarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise MatrixGameError(f"expected a non-empty 2-d payoff matrix, got shape {M.shape}")
    if tie_break not in ("average", "first"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    value, x, status = _solve(M, tie_break == "average", _PIVOT_TOL, _MAX_PIVOTS)
    if status != 0:
        _fail(status)
    return float(value), x
