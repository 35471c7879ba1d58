"""Dense two-phase simplex, and the per-instance code subproblem built on it.

The code subproblem for one instance is

    min_q  sum_l v_l * max(0, 1 - y_l (b_l + u_l.q)) + beta * sum_j d_j q_j
    s.t.   q >= 0, sum_j q_j = 1

where ``b_l`` is the part of label ``l``'s margin that does not depend on
the code and ``u_l`` are the code coordinates of its weight vector.  Each
hinge becomes a slack ``xi_l >= 0, xi_l >= 1 - y_l (b_l + u_l.q)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LPError(RuntimeError):
    pass


class LPInfeasible(LPError):
    def __init__(self, msg="infeasible"):
        super().__init__(msg)


class LPUnbounded(LPError):
    def __init__(self, msg="unbounded"):
        super().__init__(msg)


class LPIterationLimit(LPError):
    pass


@dataclass
class StandardLP:
    """``min c.x  s.t.  G x <= h,  E x = e,  x >= lower``."""

    c: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    E: np.ndarray | None = None
    e: np.ndarray | None = None
    lower: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.G = np.zeros((0, n)) if self.G is None else np.atleast_2d(np.asarray(self.G, float))
        self.h = np.zeros(0) if self.h is None else np.asarray(self.h, float)
        self.E = np.zeros((0, n)) if self.E is None else np.atleast_2d(np.asarray(self.E, float))
        self.e = np.zeros(0) if self.e is None else np.asarray(self.e, float)
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, float)
        if (self.G.shape != (self.h.shape[0], n) or self.E.shape != (self.e.shape[0], n)
                or self.lower.shape != (n,)):
            raise ValueError("inconsistent LP dimensions")
        if not np.all(np.isfinite(self.lower)):
            raise ValueError("lower bounds must be finite")


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    pivots: int


_EPS = 1e-9


def _pivot(T, r, col):
    T[r] /= T[r, col]
    factor = T[:, col].copy()
    factor[r] = 0.0
    T -= np.outer(factor, T[r])


def _run_simplex(T, basis, n_cols, max_pivots, pivots):
    """Bland's rule on tableau ``T`` whose last row holds reduced costs.

    Only the first ``n_cols`` columns may enter.  Returns the pivot count.
    """
    m = T.shape[0] - 1
    while True:
        cost = T[-1, :n_cols]
        entering = np.flatnonzero(cost < -_EPS)
        if entering.size == 0:
            return pivots
        col = int(entering[0])
        column = T[:m, col]
        pos = column > _EPS
        if not pos.any():
            raise LPUnbounded()
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + _EPS * max(1.0, abs(best)))
        r = int(ties[np.argmin(np.asarray(basis)[ties])])
        if pivots >= max_pivots:
            raise LPIterationLimit(f"simplex exceeded {max_pivots} pivots")
        _pivot(T, r, col)
        basis[r] = col
        pivots += 1


def solve_lp(lp: StandardLP, max_pivots: int = 10_000) -> LPSolution:
    """Solve a small dense LP by the two-phase simplex method (Bland's rule)."""
    n = lp.c.shape[0]
    # shift to x' = x - lower >= 0
    h = lp.h - lp.G @ lp.lower
    e = lp.e - lp.E @ lp.lower
    k, r = lp.G.shape[0], lp.E.shape[0]

    # columns: x' (n) | slacks (k) | artificials (as needed)
    A = np.zeros((k + r, n + k))
    b = np.concatenate([h, e])
    A[:k, :n] = lp.G
    A[:k, n:n + k] = np.eye(k)
    A[k:, :n] = lp.E
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)

    rows = k + r
    basis = [-1] * rows
    need_art = []
    for i in range(rows):
        if i < k and not neg[i]:
            basis[i] = n + i
        else:
            need_art.append(i)
    n_main = n + k
    n_art = len(need_art)
    T = np.zeros((rows + 1, n_main + n_art + 1))
    T[:rows, :n_main] = A
    T[:rows, -1] = b
    for a, i in enumerate(need_art):
        T[i, n_main + a] = 1.0
        basis[i] = n_main + a

    pivots = 0
    if n_art:
        # phase 1: minimize the sum of artificials
        T[-1, n_main:n_main + n_art] = 1.0
        for i in need_art:
            T[-1] -= T[i]
        pivots = _run_simplex(T, basis, n_main + n_art, max_pivots, pivots)
        if -T[-1, -1] > 1e-8 * max(1.0, np.abs(b).max()):
            raise LPInfeasible()
        # drive remaining (zero-level) artificials out of the basis
        keep = []
        for i in range(rows):
            if basis[i] < n_main:
                keep.append(i)
                continue
            nz = np.flatnonzero(np.abs(T[i, :n_main]) > _EPS)
            if nz.size:
                _pivot(T, i, int(nz[0]))
                basis[i] = int(nz[0])
                pivots += 1
                keep.append(i)
            # otherwise the row is redundant and is dropped
        T = np.vstack([T[keep], T[-1:]])
        T = np.hstack([T[:, :n_main], T[:, -1:]])
        basis = [basis[i] for i in keep]

    # phase 2
    cost = np.zeros(n_main)
    cost[:n] = lp.c
    T[-1, :] = 0.0
    T[-1, :n_main] = cost
    for i, j in enumerate(basis):
        if cost[j] != 0.0:
            T[-1] -= cost[j] * T[i]
    pivots = _run_simplex(T, basis, n_main, max_pivots, pivots)

    xs = np.zeros(n_main)
    for i, j in enumerate(basis):
        xs[j] = T[i, -1]
    x = xs[:n] + lp.lower
    return LPSolution(x=x, objective=float(lp.c @ x), pivots=pivots)


# ---------------------------------------------------------------------------
# per-instance code subproblem
# ---------------------------------------------------------------------------

@dataclass
class QSubproblem:
    feature_scores: np.ndarray  # (L,) margin part independent of q, bias included
    code_weights: np.ndarray    # (L, m)
    targets: np.ndarray         # (L,)
    sp_weights: np.ndarray      # (L,)
    center_dists: np.ndarray    # (m,)
    beta: float

    def __post_init__(self):
        self.feature_scores = np.asarray(self.feature_scores, float)
        self.code_weights = np.atleast_2d(np.asarray(self.code_weights, float))
        self.targets = np.asarray(self.targets, float)
        self.sp_weights = np.asarray(self.sp_weights, float)
        self.center_dists = np.asarray(self.center_dists, float)
        L, m = self.code_weights.shape
        if not (self.feature_scores.shape == self.targets.shape == self.sp_weights.shape == (L,)
                and self.center_dists.shape == (m,)):
            raise ValueError("inconsistent subproblem dimensions")
        if np.any(self.center_dists < 0):
            raise ValueError("center distances must be non-negative")

    @property
    def m(self) -> int:
        return self.code_weights.shape[1]


def objective_q(sub: QSubproblem, q) -> float:
    q = np.asarray(q, float)
    if abs(q.sum() - 1.0) > 1e-8 or np.any(q < -1e-8):
        raise ValueError("q is not on the simplex")
    margins = sub.targets * (sub.feature_scores + sub.code_weights @ q)
    hinge = np.maximum(0.0, 1.0 - margins)
    return float(sub.sp_weights @ hinge + sub.beta * (sub.center_dists @ q))


def q_lp(sub: QSubproblem) -> tuple[StandardLP, np.ndarray]:
    """Epigraph LP over ``[q, xi_active]``; returns it with the active label indices."""
    m = sub.m
    act = np.flatnonzero(sub.sp_weights > 0)
    La = act.size
    c = np.concatenate([sub.beta * sub.center_dists, sub.sp_weights[act]])
    y = sub.targets[act]
    # -y_l u_l.q - xi_l <= y_l b_l - 1
    G = np.zeros((La, m + La))
    G[:, :m] = -y[:, None] * sub.code_weights[act]
    G[:, m:] = -np.eye(La)
    h = y * sub.feature_scores[act] - 1.0
    E = np.zeros((1, m + La))
    E[0, :m] = 1.0
    return StandardLP(c=c, G=G, h=h, E=E, e=np.ones(1)), act


def solve_q(sub: QSubproblem, max_pivots: int = 10_000) -> np.ndarray:
    """Optimal code vector for one instance (a vertex; ties are not canonical)."""
    m = sub.m
    if m == 1:
        return np.ones(1)
    if not np.any(sub.sp_weights > 0):
        q = np.zeros(m)
        q[int(np.argmin(sub.center_dists))] = 1.0
        return q
    lp, _ = q_lp(sub)
    sol = solve_lp(lp, max_pivots=max_pivots)
    q = np.maximum(sol.x[:m], 0.0)
    return q / q.sum()
