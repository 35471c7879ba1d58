"""Self-paced weighting schemes.

Each scheme is a triple of closed-form functions of a loss ``l`` (or weight
``v``) and the pace parameter ``lam``:

* ``weight(l, lam)``      minimizer of ``v*l + f(v, lam)`` over ``v in [0, 1]``
* ``regularizer(v, lam)`` the self-paced regularizer ``f``
* ``inverse_loss(v, lam)`` the loss ``s`` at which the optimal weight is ``v``

and ``df/dv = -s``.  All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, xlogy


class SchemeKind(str, enum.Enum):
    ARCTAN = "arctan"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    EXPONENTIAL = "exponential"

    @classmethod
    def parse(cls, name: "str | SchemeKind") -> "SchemeKind":
        if isinstance(name, SchemeKind):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown scheme {name!r}; valid options: {valid}") from None


# v is clamped into this interval wherever f diverges at the endpoints
V_CLAMP = 1e-12


def _check_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError("pace parameter lambda must be finite and > 0")
    return lam


def _check_v(v, *, open_interval):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("weight v must be finite")
    if open_interval:
        if np.any((v <= 0) | (v >= 1)):
            raise ValueError("inverse loss diverges at v in {0, 1}; need 0 < v < 1")
    elif np.any((v < 0) | (v > 1)):
        raise ValueError("weight v must lie in [0, 1]")
    return v


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def weight(kind, loss, lam):
    """Optimal self-paced weight for a loss at pace ``lam``.

    Negative losses are accepted; the result is still the constrained
    minimizer over ``[0, 1]`` (capped at 1 for the sigmoid and
    exponential schemes).
    """
    kind = SchemeKind.parse(kind)
    loss = np.asarray(loss, dtype=float)
    if not np.all(np.isfinite(loss)):
        raise ValueError("loss must be finite")
    lam = _check_lambda(lam)

    if kind is SchemeKind.ARCTAN:
        x = loss - lam
        # arccot(x)/pi, written to avoid cancellation for large positive x
        with np.errstate(divide="ignore"):
            pos = np.arctan(1.0 / np.where(x > 0, x, 1.0))
        v = np.where(x > 0, pos, np.pi / 2 - np.arctan(x)) / np.pi
    elif kind is SchemeKind.SIGMOID:
        v = 2.0 * expit(-loss / lam)
    elif kind is SchemeKind.TANH:
        v = expit(-2.0 * (loss - lam))
    else:
        v = np.exp(-loss / lam)
    return _scalar_or_array(np.minimum(v, 1.0))


def regularizer(kind, v, lam):
    """Self-paced regularizer ``f(v, lam)``.

    Endpoint values are the finite limits, except for the arctan scheme
    where ``f`` diverges at 0 and 1 and ``+inf`` is returned.
    """
    kind = SchemeKind.parse(kind)
    v = _check_v(v, open_interval=False)
    lam = _check_lambda(lam)

    if kind is SchemeKind.ARCTAN:
        with np.errstate(divide="ignore"):
            f = -lam * v - np.log(np.abs(np.sin(np.pi * v))) / np.pi
        f = np.where((v == 0) | (v == 1), np.inf, f)
    elif kind is SchemeKind.SIGMOID:
        f = lam * (xlogy(2.0 - v, 2.0 - v) + xlogy(v, v))
    elif kind is SchemeKind.TANH:
        f = 0.5 * (xlogy(1.0 - v, 1.0 - v) + xlogy(v, v)) - lam * v
    else:
        f = lam * (xlogy(v, v) - v)
    return _scalar_or_array(f)


def inverse_loss(kind, v, lam):
    """Loss ``s(v, lam)`` whose optimal weight is exactly ``v``."""
    kind = SchemeKind.parse(kind)
    v = _check_v(v, open_interval=True)
    lam = _check_lambda(lam)

    if kind is SchemeKind.ARCTAN:
        s = lam + 1.0 / np.tan(np.pi * v)
    elif kind is SchemeKind.SIGMOID:
        s = lam * np.log(2.0 / v - 1.0)
    elif kind is SchemeKind.TANH:
        s = 0.5 * np.log(1.0 / v - 1.0) + lam
    else:
        s = -lam * np.log(v)
    return _scalar_or_array(s)


def clamped_regularizer(kind, v, lam):
    """``regularizer`` with ``v`` clamped away from the endpoints.

    Used for objective reporting so the arctan term stays finite.
    """
    v = np.clip(np.asarray(v, dtype=float), V_CLAMP, 1.0 - V_CLAMP)
    return regularizer(kind, v, lam)


@dataclass(frozen=True)
class PaceParams:
    lam: float
    mu: float

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if not np.isfinite(self.mu) or self.mu <= 1:
            raise ValueError(f"mu must be > 1, got {self.mu}")


def advance_pace(p: PaceParams) -> PaceParams:
    return PaceParams(lam=p.lam * p.mu, mu=p.mu)


# ---------------------------------------------------------------------------
# numerical verification of the self-paced function conditions
# ---------------------------------------------------------------------------

DERIV_TOL = 1e-5
ARGMIN_TOL = 1e-3
CONVEXITY_SLACK = -1e-8

CHECK_NAMES = (
    "convexity",
    "loss_monotonicity",
    "pace_monotonicity",
    "derivative_identity",
    "argmin_agreement",
)


@dataclass(frozen=True)
class VerificationGrid:
    v_eps: float = 0.01
    n_v: int = 197
    l_max: float = 20.0
    n_l: int = 101
    lam_min: float = 1e-5
    lam_max: float = 100.0
    n_lam: int = 101
    argmin_step: float = 1e-4
    n_argmin: int = 50
    seed: int = 0


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    detail: str = ""


@dataclass
class VerificationReport:
    kind: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "scheme": self.kind,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "worst": c.worst, "detail": c.detail}
                for c in self.checks
            ],
        }


def _default_funcs(kind):
    return (
        lambda l, lam: weight(kind, l, lam),
        lambda v, lam: regularizer(kind, v, lam),
        lambda v, lam: inverse_loss(kind, v, lam),
    )


def corrupted_funcs(kind):
    """The scheme's triple with ``f`` negated (concave); for exercising failures."""
    w_fn, f_fn, s_fn = _default_funcs(SchemeKind.parse(kind))
    return w_fn, (lambda v, lam: -np.asarray(f_fn(v, lam))), s_fn


def verify_scheme(kind, grid: VerificationGrid | None = None, *, funcs=None) -> VerificationReport:
    """Check the self-paced function conditions numerically on a grid.

    ``funcs`` optionally overrides the ``(weight, regularizer, inverse_loss)``
    triple, which is how a deliberately broken scheme is exercised.
    Failures are recorded in the report, never raised.
    """
    kind = SchemeKind.parse(kind)
    grid = grid or VerificationGrid()
    w_fn, f_fn, s_fn = funcs or _default_funcs(kind)

    vs = np.linspace(grid.v_eps, 1.0 - grid.v_eps, grid.n_v)
    ls = np.linspace(0.0, grid.l_max, grid.n_l)
    lams = np.geomspace(grid.lam_min, grid.lam_max, grid.n_lam)
    report = VerificationReport(kind=kind.value)

    # (a) second differences of f in v
    V, LAM = np.meshgrid(vs, lams, indexing="ij")
    F = np.asarray(f_fn(V, LAM), dtype=float)
    h = vs[1] - vs[0]
    worst = float(np.min((F[2:] - 2.0 * F[1:-1] + F[:-2]) / h**2))
    report.checks.append(CheckResult(
        "convexity", bool(worst >= CONVEXITY_SLACK), worst,
        "min second difference of f over v"))

    # (b) monotone non-increasing in l, with both limits
    L, LAM = np.meshgrid(ls, lams, indexing="ij")
    W = np.asarray(w_fn(L, LAM), dtype=float)
    rise = float(np.max(np.diff(W, axis=0)))
    w_small = float(np.max(w_fn(np.zeros_like(lams), lams)))
    far = np.asarray(w_fn(1e12 * (1.0 + lams), lams), dtype=float)
    w_far = float(np.max(far))
    ok = rise <= 0.0 and w_small <= 1.0 and w_far <= 1e-6 and np.all(W >= 0)
    report.checks.append(CheckResult(
        "loss_monotonicity", bool(ok), rise,
        f"max increase {rise:.3g}; weight at l=0 {w_small:.6g}; weight at l->inf {w_far:.3g}"))

    # (c) monotone non-decreasing in lambda
    drop = float(np.max(-np.diff(W, axis=1)))
    report.checks.append(CheckResult(
        "pace_monotonicity", bool(drop <= 0.0), drop, "max decrease of weight as lambda grows"))

    # (d) central difference of f equals -s
    fd_v = np.linspace(0.01, 0.99, grid.n_v)
    V, LAM = np.meshgrid(fd_v, lams, indexing="ij")
    step = 1e-6 * np.minimum(V, 1.0 - V)
    fd = (np.asarray(f_fn(V + step, LAM)) - np.asarray(f_fn(V - step, LAM))) / (2.0 * step)
    S = np.asarray(s_fn(V, LAM), dtype=float)
    err = np.abs(fd + S) / (1.0 + np.abs(S))
    worst = float(np.max(err))
    report.checks.append(CheckResult(
        "derivative_identity", bool(worst <= DERIV_TOL), worst,
        "max |df/dv + s| / (1 + |s|)"))

    # (e) brute-force argmin of v*l + f over a fine v grid
    rng = np.random.default_rng(grid.seed)
    fine = np.linspace(0.0, 1.0, int(round(1.0 / grid.argmin_step)) + 1)
    worst = 0.0
    for _ in range(grid.n_argmin):
        l = rng.uniform(0.0, grid.l_max)
        lam = float(np.exp(rng.uniform(np.log(grid.lam_min), np.log(grid.lam_max))))
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = fine * l + np.asarray(f_fn(fine, lam), dtype=float)
        vals = np.where(np.isnan(vals), np.inf, vals)
        v_grid = fine[int(np.argmin(vals))]
        worst = max(worst, float(abs(v_grid - w_fn(l, lam))))
    report.checks.append(CheckResult(
        "argmin_agreement", bool(worst <= ARGMIN_TOL), worst,
        "max |grid argmin - closed-form weight|"))
    return report
