"""Multi-label evaluation criteria and their aggregation over repeats.

Ranking conventions: rank 1 is the highest score, tied labels share the
worst rank of their group, and the relevant set of instance ``i`` is
``{l : y_il = +1}``.  Instances for which a ranking criterion is undefined
(no relevant label, or for ranking loss also no irrelevant one) are
skipped and the number of evaluated instances is reported.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

CRITERIA = ("hamming_loss", "ranking_loss", "one_error", "coverage", "average_precision")
LOWER_IS_BETTER = {c: c != "average_precision" for c in CRITERIA}


def _num(x):
    """JSON-safe float: undefined criteria (nan) become ``None``."""
    x = float(x)
    return None if math.isnan(x) else x


def _relevant(Y) -> np.ndarray:
    Y = np.asarray(Y)
    return Y > 0 if Y.dtype != bool else Y


def ranks(scores) -> np.ndarray:
    """Rank of every label per row, ties sharing the worst rank."""
    S = np.atleast_2d(np.asarray(scores, float))
    return (S[:, None, :] >= S[:, :, None]).sum(axis=2)


def hamming_loss(predicted, true) -> float:
    P = _relevant(predicted)
    T = _relevant(true)
    return float(np.mean(P != T))


def _one_error(S, T):
    keep = T.any(axis=1)
    top = np.argmax(S, axis=1)
    miss = ~T[np.arange(len(S)), top]
    return (float(miss[keep].mean()) if keep.any() else math.nan), int(keep.sum())


def _coverage(S, T):
    keep = T.any(axis=1)
    R = ranks(S)
    worst = np.where(T, R, 0).max(axis=1) - 1
    return (float(worst[keep].mean()) if keep.any() else math.nan), int(keep.sum())


def _ranking_loss(S, T):
    n_rel = T.sum(axis=1)
    n_irr = T.shape[1] - n_rel
    keep = (n_rel > 0) & (n_irr > 0)
    # pairs (a relevant, b irrelevant) with score(a) <= score(b)
    bad = (S[:, :, None] <= S[:, None, :]) & T[:, :, None] & ~T[:, None, :]
    frac = bad.sum(axis=(1, 2))[keep] / (n_rel[keep] * n_irr[keep])
    return (float(frac.mean()) if keep.any() else math.nan), int(keep.sum())


def _average_precision(S, T):
    keep = T.any(axis=1)
    R = ranks(S)
    vals = []
    for r, t in zip(R[keep], T[keep]):
        rel_r = r[t]
        prec = (rel_r[None, :] <= rel_r[:, None]).sum(axis=1) / rel_r
        vals.append(prec.mean())
    return (float(np.mean(vals)) if vals else math.nan), int(keep.sum())


def _prep(scores, true):
    S = np.atleast_2d(np.asarray(scores, float))
    T = np.atleast_2d(_relevant(true))
    if S.shape != T.shape:
        raise ValueError(f"scores {S.shape} and labels {T.shape} differ in shape")
    return S, T


def one_error(scores, true) -> float:
    return _one_error(*_prep(scores, true))[0]


def coverage(scores, true) -> float:
    return _coverage(*_prep(scores, true))[0]


def ranking_loss(scores, true) -> float:
    return _ranking_loss(*_prep(scores, true))[0]


def average_precision(scores, true) -> float:
    return _average_precision(*_prep(scores, true))[0]


@dataclass
class MetricsReport:
    hamming_loss: float
    ranking_loss: float
    one_error: float
    coverage: float
    average_precision: float
    n_eval: dict = field(default_factory=dict)

    def values(self) -> dict:
        return {c: getattr(self, c) for c in CRITERIA}

    def to_dict(self) -> dict:
        return {"metrics": {c: _num(v) for c, v in self.values().items()},
                "n_eval": dict(self.n_eval)}


def evaluate_all(scores, predicted, true) -> MetricsReport:
    S, T = _prep(scores, true)
    P = np.atleast_2d(_relevant(predicted))
    rl, n_rl = _ranking_loss(S, T)
    oe, n_oe = _one_error(S, T)
    cv, n_cv = _coverage(S, T)
    ap, n_ap = _average_precision(S, T)
    return MetricsReport(
        hamming_loss=hamming_loss(P, T), ranking_loss=rl, one_error=oe,
        coverage=cv, average_precision=ap,
        n_eval={"hamming_loss": S.shape[0], "ranking_loss": n_rl, "one_error": n_oe,
                "coverage": n_cv, "average_precision": n_ap},
    )


@dataclass
class AggregateReport:
    mean: dict
    std: dict
    repeats: int
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "repeats": self.repeats,
            "criteria": {c: {"mean": _num(self.mean[c]), "std": _num(self.std[c]),
                             "values": [_num(v) for v in self.values.get(c, [])]}
                         for c in CRITERIA},
        }


def aggregate(reports) -> AggregateReport:
    """Per-criterion mean and sample standard deviation (n - 1 denominator)."""
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to aggregate")
    vals = {c: [getattr(r, c) for r in reports] for c in CRITERIA}
    mean = {c: float(np.mean(v)) for c, v in vals.items()}
    std = {c: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0 for c, v in vals.items()}
    return AggregateReport(mean=mean, std=std, repeats=len(reports), values=vals)


def format_cell(mean: float, std: float) -> str:
    return f"{mean:.4f} ± {std:.4f}"


def format_table(columns: dict) -> str:
    """Aligned text table, rows = criteria, one column per named aggregate."""
    names = list(columns)
    header = ["criterion"] + names
    rows = [header]
    for c in CRITERIA:
        arrow = "↓" if LOWER_IS_BETTER[c] else "↑"
        rows.append([f"{c.replace('_', ' ')} {arrow}"]
                    + [format_cell(columns[nm].mean[c], columns[nm].std[c]) for nm in names])
    widths = [max(len(r[k]) for r in rows) for k in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
