"""Synthetic multi-label data with optional planted label noise."""

from __future__ import annotations

import numpy as np

from .dataio import Dataset


def make_multilabel(n: int, d: int, n_labels: int, seed: int = 0, *, score_noise: float = 0.3):
    """Gaussian features; label ``l`` is the sign of a random linear score plus noise.

    Returns ``(X, Y)`` with ``Y`` in ``{-1, +1}``.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    W = rng.normal(size=(d, n_labels))
    Y = np.where(X @ W + score_noise * rng.normal(size=(n, n_labels)) > 0, 1.0, -1.0)
    return X, Y


def plant_label_noise(Y, fraction: float, seed: int = 0):
    """Flip every label of a random ``fraction`` of the instances.

    Returns the noisy copy and the sorted indices of the corrupted rows.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    Y = np.array(Y, dtype=float)
    k = int(round(fraction * Y.shape[0]))
    rows = np.sort(np.random.default_rng(seed).choice(Y.shape[0], size=k, replace=False))
    Y[rows] *= -1.0
    return Y, rows


def noisy_dataset(n=300, d=10, n_labels=4, noise=0.2, seed=0) -> Dataset:
    X, Y = make_multilabel(n, d, n_labels, seed)
    Yn, _ = plant_label_noise(Y, noise, seed + 1)
    return Dataset(X, Yn)
