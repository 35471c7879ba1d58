"""Test-time inference: regress the code, project it onto the simplex, score labels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class CodePredictor:
    """One ridge regressor per code coordinate, with unpenalized intercepts."""

    coef: np.ndarray       # d x m
    intercept: np.ndarray  # m
    ridge: float

    @property
    def m(self) -> int:
        return self.intercept.shape[0]


def fit_code_predictor(X, Q, gamma: float = 1e-3) -> CodePredictor:
    """Closed-form ridge fit of each row of ``Q`` (``m x n``) on features ``X``."""
    X = np.asarray(X, float)
    Q = np.asarray(Q, float)
    if gamma < 0:
        raise ValueError("ridge parameter must be >= 0")
    if Q.shape[1] != X.shape[0]:
        raise ValueError("Q must have one column per training instance")
    x_mean = X.mean(axis=0)
    q_mean = Q.mean(axis=1)
    Xc = X - x_mean
    Qc = Q.T - q_mean
    gram = Xc.T @ Xc + gamma * np.eye(X.shape[1])
    if gamma == 0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise ValueError("singular normal equations with gamma=0; use a ridge gamma > 0")
    coef = np.linalg.solve(gram, Xc.T @ Qc)
    return CodePredictor(coef=coef, intercept=q_mean - x_mean @ coef, ridge=gamma)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    v = np.asarray(v, float)
    single = v.ndim == 1
    V = np.atleast_2d(v)
    k = V.shape[1]
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = U - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(V.shape[0]), rho] / (rho + 1)
    P = np.maximum(V - theta[:, None], 0.0)
    return P[0] if single else P


def predict_codes(cp: CodePredictor, X) -> np.ndarray:
    X = np.asarray(X, float)
    if X.shape[-1] != cp.coef.shape[0]:
        raise ValueError(f"expected {cp.coef.shape[0]} features, got {X.shape[-1]}")
    return project_simplex(X @ cp.coef + cp.intercept)


def score(W, b, X, Q_hat=None) -> np.ndarray:
    """Label scores ``w_l.[x; q] + b_l``; ``Q_hat`` is ``n x m`` (or ``None`` for no codes)."""
    X = np.atleast_2d(np.asarray(X, float))
    Z = X if Q_hat is None else np.hstack([X, np.atleast_2d(Q_hat)])
    if Z.shape[1] != W.shape[0]:
        raise ValueError(f"expected {W.shape[0]} augmented inputs, got {Z.shape[1]}")
    return Z @ W + b


def decide(scores) -> np.ndarray:
    """Boolean label sets: positive scores, or the top label when none is positive."""
    S = np.asarray(scores, float)
    single = S.ndim == 1
    S = np.atleast_2d(S)
    out = S > 0
    empty = ~out.any(axis=1)
    out[np.flatnonzero(empty), np.argmax(S[empty], axis=1)] = True
    return out[0] if single else out
