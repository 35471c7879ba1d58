"""Instance-weighted linear hinge-loss classifier.

Solves

    min_{w, b}  sum_i v_i * max(0, 1 - y_i (w.z_i + b)) + alpha * ||w||^2

with the bias ``b`` unregularized.  Dividing by ``2 alpha`` gives the usual
``0.5 ||w||^2 + sum_i C_i hinge_i`` form with per-instance box
``C_i = v_i / (2 alpha)``; the dual is solved by coordinate descent (pairs
of coordinates when the bias is fitted, because of the equality constraint
``sum_i y_i a_i = 0``).  Termination is certified by the relative duality
gap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WeightedProblem:
    inputs: np.ndarray
    targets: np.ndarray
    instance_weights: np.ndarray
    alpha_reg: float
    fit_intercept: bool = True

    def __post_init__(self):
        Z = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        v = np.asarray(self.instance_weights, dtype=float)
        if Z.ndim != 2 or y.shape != (Z.shape[0],) or v.shape != (Z.shape[0],):
            raise ValueError("inconsistent problem dimensions")
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(v))):
            raise ValueError("inputs and weights must be finite")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("targets must be -1 or +1")
        if np.any((v < 0) | (v > 1)):
            raise ValueError("instance weights must lie in [0, 1]")
        if not (np.isfinite(self.alpha_reg) and self.alpha_reg > 0):
            raise ValueError("alpha_reg must be > 0")
        object.__setattr__(self, "inputs", Z)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "instance_weights", v)

    @property
    def box(self) -> np.ndarray:
        return self.instance_weights / (2.0 * self.alpha_reg)


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float = 0.0
    dual: np.ndarray | None = field(default=None, repr=False)
    primal: float = float("nan")
    gap: float = float("nan")
    iterations: int = 0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")


def decision_value(model: LinearModel, z) -> np.ndarray | float:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != model.weights.shape[0]:
        raise ValueError(f"expected {model.weights.shape[0]} inputs, got {z.shape[-1]}")
    out = z @ model.weights + model.bias
    return float(out) if np.ndim(out) == 0 else out


def hinge(margins) -> np.ndarray:
    return np.maximum(0.0, 1.0 - margins)


def primal_objective(prob: WeightedProblem, model: LinearModel) -> float:
    margins = prob.targets * (prob.inputs @ model.weights + model.bias)
    w = model.weights
    return float(prob.instance_weights @ hinge(margins) + prob.alpha_reg * (w @ w))


def dual_objective(prob: WeightedProblem, dual_vars) -> float:
    """Dual value in the original objective's scale.

    Only a lower bound on the primal optimum when ``dual_vars`` is
    feasible (box, and ``sum y_i a_i = 0`` if the bias is fitted).
    """
    a = np.asarray(dual_vars, dtype=float)
    w = prob.inputs.T @ (a * prob.targets)
    return float(2.0 * prob.alpha_reg * (a.sum() - 0.5 * (w @ w)))


def best_bias(scores, y, C) -> float:
    """Exact minimizer over b of ``sum_i C_i max(0, 1 - y_i (s_i + b))``.

    The function is convex piecewise linear with kinks at ``y_i - s_i``;
    returns the smallest kink where the right derivative is >= 0.
    """
    scores = np.asarray(scores, dtype=float)
    live = C > 0
    if not live.any():
        return 0.0
    t = (y - scores)[live]
    c = C[live]
    pos = y[live] > 0
    kinks = np.unique(t)
    pos_c = np.sort(t[pos]), c[pos][np.argsort(t[pos], kind="stable")]
    neg_c = np.sort(t[~pos]), c[~pos][np.argsort(t[~pos], kind="stable")]
    cum_pos = np.concatenate([[0.0], np.cumsum(pos_c[1])])
    cum_neg = np.concatenate([[0.0], np.cumsum(neg_c[1])])
    k_pos = np.searchsorted(pos_c[0], kinks, side="right")
    k_neg = np.searchsorted(neg_c[0], kinks, side="right")
    slope = -(cum_pos[-1] - cum_pos[k_pos]) + cum_neg[k_neg]
    return float(kinks[int(np.argmax(slope >= 0))])


def _certify(prob, Za, ya, Ca, a, active):
    """Primal model at w(a) with its optimal bias, and the relative gap."""
    w = Za.T @ (a * ya)
    b = best_bias(Za @ w, ya, Ca) if prob.fit_intercept else 0.0
    full = np.zeros(prob.inputs.shape[0])
    full[active] = a
    model = LinearModel(w, b, dual=full)
    P = primal_objective(prob, model)
    D = 2.0 * prob.alpha_reg * (a.sum() - 0.5 * (w @ w))
    model.primal = P
    model.gap = (P - D) / max(1.0, abs(P))
    return model, D


def train_weighted_svm(prob: WeightedProblem, tol: float = 1e-4, max_epochs: int = 2000,
                       seed: int = 0, debug: bool = False) -> LinearModel:
    """Train to relative duality gap ``<= tol``.

    Instances with zero weight are dropped (they contribute nothing).  The
    returned model is the best primal iterate seen at a certification
    point, so reported objectives never go up between checks.
    """
    n, p = prob.inputs.shape
    active = np.flatnonzero(prob.instance_weights > 0)
    if active.size == 0:
        return LinearModel(np.zeros(p), 0.0, dual=np.zeros(n), primal=0.0, gap=0.0)

    Za = prob.inputs[active]
    ya = prob.targets[active]
    Ca = prob.box[active]
    if prob.fit_intercept:
        return _smo(prob, Za, ya, Ca, active, tol, max_epochs, debug)
    return _dcd(prob, Za, ya, Ca, active, tol, max_epochs, seed, debug)


def _keep_best(best, model, D):
    """Lowest primal iterate so far, certified by the current dual point.

    Both solvers only ever raise the dual, so the latest dual value is the
    best lower bound seen and gives the tightest gap for ``best``.
    """
    if best is None or model.primal < best.primal:
        best = model
    else:
        best.dual = model.dual
    best.gap = (best.primal - D) / max(1.0, abs(best.primal))
    return best


def _dcd(prob, Z, y, C, active, tol, max_epochs, seed, debug):
    rng = np.random.default_rng(seed)
    k = Z.shape[0]
    qdiag = np.einsum("ij,ij->i", Z, Z)
    a = np.zeros(k)
    w = np.zeros(Z.shape[1])
    best, last_dual = None, -np.inf
    for epoch in range(1, max_epochs + 1):
        for i in rng.permutation(k):
            if qdiag[i] <= 0:
                a[i] = C[i]
                continue
            g = y[i] * (w @ Z[i]) - 1.0
            new = min(max(a[i] - g / qdiag[i], 0.0), C[i])
            if new != a[i]:
                w += (new - a[i]) * y[i] * Z[i]
                a[i] = new
        model, D = _certify(prob, Z, y, C, a, active)
        if debug and D < last_dual - 1e-9 * max(1.0, abs(D)):
            raise AssertionError("dual objective decreased")
        last_dual = D
        best = _keep_best(best, model, D)
        best.iterations = epoch
        if best.gap <= tol:
            return best
    warnings.warn(f"SVM stopped at {max_epochs} epochs with gap {best.gap:.2e}", ConvergenceWarning)
    return best


def _smo(prob, Z, y, C, active, tol, max_epochs, debug):
    k = Z.shape[0]
    K = Z @ Z.T
    kdiag = np.diag(K).copy()
    a = np.zeros(k)
    G = -np.ones(k)  # gradient of 0.5 a'Qa - sum(a), Q = yy' * K
    best, last_dual = None, -np.inf
    check_every = max(10, min(k, 200))
    max_iter = max_epochs * k
    eps = 1e-12

    for it in range(1, max_iter + 1):
        minus_yg = -y * G
        up = ((y > 0) & (a < C)) | ((y < 0) & (a > 0))
        low = ((y > 0) & (a > 0)) | ((y < 0) & (a < C))
        cand = None
        if up.any() and low.any():
            i = int(np.argmax(np.where(up, minus_yg, -np.inf)))
            gmax = minus_yg[i]
            cand = low & (minus_yg < gmax)
            if gmax - np.min(np.where(low, minus_yg, np.inf)) <= eps:
                cand = None
        if cand is None or not cand.any():
            model, D = _certify(prob, Z, y, C, a, active)
            best = _keep_best(best, model, D)
            best.iterations = it
            if best.gap > tol:
                warnings.warn(f"SVM reached a KKT point with gap {best.gap:.2e}",
                              ConvergenceWarning)
            return best

        # second-order choice of the partner coordinate
        quad = kdiag[i] + kdiag - 2.0 * K[i]
        quad = np.where(quad > 0, quad, 1e-12)
        diff = gmax - minus_yg
        j = int(np.argmax(np.where(cand, diff * diff / quad, -np.inf)))

        ai, aj = a[i], a[j]
        Ci, Cj = C[i], C[j]
        qij = max(kdiag[i] + kdiag[j] - 2.0 * K[i, j], 1e-12)
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / qij
            d = ai - aj
            ni, nj = ai + delta, aj + delta
            if d > 0:
                if nj < 0:
                    nj, ni = 0.0, d
            elif ni < 0:
                ni, nj = 0.0, -d
            if d > Ci - Cj:
                if ni > Ci:
                    ni, nj = Ci, Ci - d
            elif nj > Cj:
                nj, ni = Cj, Cj + d
        else:
            delta = (G[i] - G[j]) / qij
            s = ai + aj
            ni, nj = ai - delta, aj + delta
            if s > Ci:
                if ni > Ci:
                    ni, nj = Ci, s - Ci
            elif nj < 0:
                nj, ni = 0.0, s
            if s > Cj:
                if nj > Cj:
                    nj, ni = Cj, s - Cj
            elif ni < 0:
                ni, nj = 0.0, s
        dai, daj = ni - ai, nj - aj
        a[i], a[j] = ni, nj
        G += y * (y[i] * dai * K[i] + y[j] * daj * K[j])

        if it % check_every == 0:
            model, D = _certify(prob, Z, y, C, a, active)
            if debug and D < last_dual - 1e-9 * max(1.0, abs(D)):
                raise AssertionError("dual objective decreased")
            last_dual = D
            best = _keep_best(best, model, D)
            best.iterations = it
            if best.gap <= tol:
                return best

    model, D = _certify(prob, Z, y, C, a, active)
    best = _keep_best(best, model, D)
    best.iterations = max_iter
    if best.gap > tol:
        warnings.warn(f"SVM stopped at {max_iter} iterations with gap {best.gap:.2e}",
                      ConvergenceWarning)
    return best
