"""K-means over label vectors, used to initialise the code matrix and centers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Clustering:
    """Hard clustering of n label vectors.

    ``assignments`` are 0-based cluster indices; ``centers`` is ``L x m``
    with one center per column.
    """

    assignments: np.ndarray
    centers: np.ndarray
    history: tuple = ()

    @property
    def m(self) -> int:
        return self.centers.shape[1]


def _sq_dists(Y, C):
    # Y: n x L, C: m x L  ->  n x m
    return ((Y[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _plusplus_seed(Y, m, rng):
    n = Y.shape[0]
    idx = [int(rng.integers(n))]
    d2 = ((Y - Y[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, m):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # fewer distinct vectors than clusters; pick any unused row
            free = np.setdiff1d(np.arange(n), idx)
            nxt = int(rng.choice(free))
        idx.append(nxt)
        d2 = np.minimum(d2, ((Y - Y[nxt]) ** 2).sum(axis=1))
    return Y[idx].copy()


def _repair_empty(Y, assign, C, m):
    """Move the worst-fit point of a multi-member cluster into each empty one."""
    for j in range(m):
        counts = np.bincount(assign, minlength=m)
        if counts[j] > 0:
            continue
        dist = ((Y - C[assign]) ** 2).sum(axis=1)
        movable = counts[assign] > 1
        dist = np.where(movable, dist, -np.inf)
        i = int(np.argmax(dist))
        assign[i] = j
        C[j] = Y[i]
    return assign


def _centers(Y, assign, C_prev, m):
    C = C_prev.copy()
    for j in range(m):
        members = assign == j
        if members.any():
            C[j] = Y[members].mean(axis=0)
    return C


def kmeans(label_vectors, m: int, seed: int = 0, max_iter: int = 100) -> Clustering:
    """Lloyd's algorithm with k-means++ seeding.

    Ties in the assignment step go to the lowest cluster index.  The
    within-cluster sum of squares after every sweep is kept in
    ``history`` and is checked to be non-increasing.
    """
    Y = np.asarray(label_vectors, dtype=float)
    n = Y.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    C = _plusplus_seed(Y, m, rng)

    assign = np.argmin(_sq_dists(Y, C), axis=1)
    assign = _repair_empty(Y, assign, C, m)
    C = _centers(Y, assign, C, m)
    history = [float(((Y - C[assign]) ** 2).sum())]

    for _ in range(max_iter):
        D = _sq_dists(Y, C)
        new = np.argmin(D, axis=1)
        # keep the current assignment on exact ties so sweeps cannot cycle
        rows = np.arange(n)
        keep = D[rows, assign] <= D[rows, new]
        new = np.where(keep, assign, new)
        new = _repair_empty(Y, new, C, m)
        changed = not np.array_equal(new, assign)
        assign = new
        C = _centers(Y, assign, C, m)
        obj = float(((Y - C[assign]) ** 2).sum())
        if obj > history[-1] * (1 + 1e-12) + 1e-12:
            raise RuntimeError("k-means objective increased; this is a bug")
        history.append(obj)
        if not changed:
            break
    return Clustering(assign.astype(int), C.T.copy(), tuple(history))


def init_Q(c: Clustering) -> np.ndarray:
    """One-hot ``m x n`` code matrix from hard assignments."""
    Q = np.zeros((c.m, len(c.assignments)))
    Q[c.assignments, np.arange(len(c.assignments))] = 1.0
    return Q


def init_A(c: Clustering) -> np.ndarray:
    return c.centers.copy()
