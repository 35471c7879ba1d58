"""Alternating minimization of the self-paced multi-label objective.

The objective over (W, Q, A, V) at pace ``lam`` is

    sum_{i,l} V_il * hinge_il + alpha * sum_l ||w_l||^2
        + beta * sum_{i,j} Q_ji ||y_i - a_j||^2 + sum_{i,l} f(V_il, lam)

where ``hinge_il = max(0, 1 - y_il (w_l.[x_i; q_i] + b_l))``.  One sweep
updates V, W, Q and A in that order, each block exactly or (for W) to the
SVM tolerance, then grows the pace ``lam <- lam * mu``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import clustering, lpsolve, selfpace, wsvm
from .selfpace import SchemeKind

log = logging.getLogger(__name__)

SATURATION = 1e-6


class BaselineMode(str, enum.Enum):
    FULL = "full"
    MLLOC = "mllocc_equivalent"
    BINARY = "independent_binary"


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 1.0
    beta: float = 1.0
    m: int = 4
    scheme: SchemeKind = SchemeKind.SIGMOID
    lambda0: float = 1e-3
    mu: float = 1.2
    max_outer: int = 50
    tol: float = 1e-4
    seed: int = 0
    svm_tol: float = 1e-4
    lp_tol: float = 1e-9
    standardize: bool = True
    baseline_mode: BaselineMode = BaselineMode.FULL
    literal_center_update: bool = False
    code_ridge: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind.parse(self.scheme))
        object.__setattr__(self, "baseline_mode", BaselineMode(self.baseline_mode))
        for name in ("alpha", "beta", "lambda0", "tol", "svm_tol"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be > 0, got {val}")
        if self.mu <= 1:
            raise ValueError(f"mu must be > 1, got {self.mu}")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.baseline_mode is not BaselineMode.BINARY and self.m < 1:
            raise ValueError("m must be >= 1 unless baseline_mode is independent_binary")
        if self.code_ridge < 0:
            raise ValueError("code_ridge must be >= 0")

    @property
    def n_codes(self) -> int:
        return 0 if self.baseline_mode is BaselineMode.BINARY else self.m

    def to_dict(self) -> dict:
        out = asdict(self)
        out["scheme"] = self.scheme.value
        out["baseline_mode"] = self.baseline_mode.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ModelState:
    W: np.ndarray          # (d + m) x L
    b: np.ndarray          # L
    Q: np.ndarray          # m x n, columns on the simplex
    A: np.ndarray          # L x m
    V: np.ndarray          # n x L, entries in [0, 1]
    lam: float
    iteration: int = 0
    saturated: bool = False
    history: list = field(default_factory=list)

    def copy(self) -> "ModelState":
        return ModelState(self.W.copy(), self.b.copy(), self.Q.copy(), self.A.copy(),
                          self.V.copy(), self.lam, self.iteration, self.saturated,
                          list(self.history))


def augment(X, Q) -> np.ndarray:
    """Rows ``[x_i; q_i]``; ``Q`` is ``m x n`` (``m`` may be 0)."""
    return np.hstack([np.asarray(X, float), np.asarray(Q, float).T])


def hinge_losses(state: ModelState, X, Y) -> np.ndarray:
    scores = augment(X, state.Q) @ state.W + state.b
    return np.maximum(0.0, 1.0 - Y * scores)


def center_dists(Y, A) -> np.ndarray:
    """``n x m`` matrix of ``||y_i - a_j||^2``."""
    return ((Y[:, :, None] - A[None, :, :]) ** 2).sum(axis=1)


def objective_terms(state: ModelState, X, Y, cfg: TrainConfig) -> dict:
    H = hinge_losses(state, X, Y)
    loss = float((state.V * H).sum())
    reg = float(cfg.alpha * (state.W ** 2).sum())
    code = 0.0
    if state.Q.shape[0]:
        code = float(cfg.beta * (state.Q.T * center_dists(Y, state.A)).sum())
    pace = 0.0
    if cfg.baseline_mode is BaselineMode.FULL:
        pace = float(selfpace.clamped_regularizer(cfg.scheme, state.V, state.lam).sum())
    return {"loss": loss, "weights": reg, "codes": code, "pace": pace,
            "total": loss + reg + code + pace}


def objective(state: ModelState, X, Y, cfg: TrainConfig) -> float:
    return objective_terms(state, X, Y, cfg)["total"]


# ---------------------------------------------------------------------------
# block updates (each returns a new state)
# ---------------------------------------------------------------------------

def update_V(state: ModelState, X, Y, cfg: TrainConfig) -> ModelState:
    new = state.copy()
    if cfg.baseline_mode is not BaselineMode.FULL:
        new.V = np.ones_like(state.V)
        return new
    V = np.asarray(selfpace.weight(cfg.scheme, hinge_losses(state, X, Y), state.lam))
    if np.all(V > 1.0 - SATURATION):
        new.saturated = True
        # arctan's regularizer diverges at v = 1, so its weights stay unsnapped
        if cfg.scheme is not SchemeKind.ARCTAN:
            V = np.ones_like(V)
    new.V = V
    return new


def _label_objective(Z, y, v, w, b, alpha):
    h = np.maximum(0.0, 1.0 - y * (Z @ w + b))
    return float(v @ h + alpha * (w @ w))


def update_W(state: ModelState, X, Y, cfg: TrainConfig, *, safeguard=True) -> ModelState:
    """Retrain every label's weighted SVM on ``[x; q]`` with weights ``V[:, l]``.

    With ``safeguard`` a label keeps its previous weights when the new
    solution is not better, so the objective cannot rise by the solver's
    tolerance.
    """
    new = state.copy()
    Z = augment(X, state.Q)
    for l in range(Y.shape[1]):
        prob = wsvm.WeightedProblem(Z, Y[:, l], state.V[:, l], cfg.alpha)
        model = wsvm.train_weighted_svm(prob, tol=cfg.svm_tol, seed=cfg.seed + l)
        if safeguard:
            old = _label_objective(Z, Y[:, l], state.V[:, l], state.W[:, l], state.b[l], cfg.alpha)
            if not model.primal < old:
                continue
        new.W[:, l] = model.weights
        new.b[l] = model.bias
    return new


def update_Q(state: ModelState, X, Y, cfg: TrainConfig) -> ModelState:
    new = state.copy()
    m = state.Q.shape[0]
    if m == 0:
        return new
    d = X.shape[1]
    base = X @ state.W[:d] + state.b          # n x L
    code_w = state.W[d:].T                     # L x m
    dists = center_dists(Y, state.A)           # n x m
    for i in range(X.shape[0]):
        sub = lpsolve.QSubproblem(base[i], code_w, Y[i], state.V[i], dists[i], cfg.beta)
        q = lpsolve.solve_q(sub)
        if lpsolve.objective_q(sub, q) <= lpsolve.objective_q(sub, state.Q[:, i]) + cfg.lp_tol:
            new.Q[:, i] = q
    return new


def update_A(state: ModelState, Y, cfg: TrainConfig | None = None) -> ModelState:
    new = state.copy()
    if state.Q.shape[0] == 0:
        return new
    weighted = Y.T @ state.Q.T                 # L x m
    if cfg is not None and cfg.literal_center_update:
        new.A = weighted
        return new
    mass = state.Q.sum(axis=1)
    live = mass >= 1e-12
    new.A[:, live] = weighted[:, live] / mass[live]
    return new


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def initialize(X, Y, cfg: TrainConfig) -> ModelState:
    """K-means codes and centers, unweighted per-label SVMs, then V at ``lambda0``."""
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    n, d = X.shape
    L = Y.shape[1]
    m = cfg.n_codes
    if m > n:
        raise ValueError(f"m={m} exceeds the number of training instances {n}")
    if m:
        cl = clustering.kmeans(Y, m, seed=cfg.seed)
        Q, A = clustering.init_Q(cl), clustering.init_A(cl)
    else:
        Q, A = np.zeros((0, n)), np.zeros((L, 0))
    state = ModelState(W=np.zeros((d + m, L)), b=np.zeros(L), Q=Q, A=A,
                       V=np.ones((n, L)), lam=cfg.lambda0)
    state = update_W(state, X, Y, cfg, safeguard=False)
    return update_V(state, X, Y, cfg)


def sweep(state: ModelState, X, Y, cfg: TrainConfig, trace=None) -> ModelState:
    """One V, W, Q, A pass at the current pace (no pace growth)."""
    steps = (
        ("V", lambda s: update_V(s, X, Y, cfg)),
        ("W", lambda s: update_W(s, X, Y, cfg)),
        ("Q", lambda s: update_Q(s, X, Y, cfg)),
        ("A", lambda s: update_A(s, Y, cfg)),
    )
    for name, step in steps:
        state = step(state)
        if trace is not None:
            trace.append((state.iteration, name, objective(state, X, Y, cfg)))
    return state


def fit(X, Y, cfg: TrainConfig, *, trace=None) -> ModelState:
    """Run the alternating scheme until the fixed-pace relative change stays
    below ``cfg.tol`` for two consecutive sweeps, or ``cfg.max_outer``.

    ``trace``, if a list, receives ``(sweep, block, objective)`` after the
    start of each sweep and after each block update.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    state = initialize(X, Y, cfg)
    quiet = 0
    for it in range(1, cfg.max_outer + 1):
        state.iteration = it
        start = objective(state, X, Y, cfg)
        if trace is not None:
            trace.append((it, "start", start))
        state = sweep(state, X, Y, cfg, trace)
        end = objective(state, X, Y, cfg)
        if not np.isfinite(end):
            raise FloatingPointError(f"objective became non-finite at sweep {it}")
        rel = abs(start - end) / max(1.0, abs(start))
        state.history.append({"sweep": it, "lambda": state.lam, "objective": end,
                              "relative_change": rel})
        log.debug("sweep %d lambda=%.4g objective=%.6g rel=%.2e", it, state.lam, end, rel)
        quiet = quiet + 1 if rel < cfg.tol else 0
        if quiet >= 2:
            break
        if cfg.baseline_mode is BaselineMode.FULL and not state.saturated:
            state.lam = selfpace.advance_pace(selfpace.PaceParams(state.lam, cfg.mu)).lam
    return state
