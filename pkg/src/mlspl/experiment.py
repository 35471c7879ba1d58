"""Repeated random-split protocol, optional pace grid search, and worker fan-out."""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dataio import Dataset, SplitSpec, split, split_indices
from .metrics import AggregateReport, MetricsReport, aggregate, evaluate_all
from .model import train_model
from .trainer import BaselineMode, TrainConfig

LAMBDA_GRID = (1e-5, 1e-4, 1e-3, 1e-2)
MU_GRID = (1.1, 1.2, 1.3, 1.4, 1.5)
HOLDOUT_FRACTION = 0.2

METHOD_MODES = {
    "mlspl": BaselineMode.FULL,
    "mllocc_equivalent": BaselineMode.MLLOC,
    "independent_binary": BaselineMode.BINARY,
}


def derive_seeds(base_seed: int, repeats: int) -> list:
    """Independent per-repeat seeds, a pure function of ``(base_seed, repeats)``."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    ss = np.random.SeedSequence(int(base_seed))
    return [int(s) for s in ss.generate_state(repeats, dtype=np.uint32)]


def worker_count() -> int:
    """Worker cap from ``MLSPL_THREADS`` (default: CPU count)."""
    raw = os.environ.get("MLSPL_THREADS", "").strip()
    if raw:
        try:
            val = int(raw)
        except ValueError:
            raise ValueError(f"MLSPL_THREADS must be an integer, got {raw!r}") from None
        if val < 1:
            raise ValueError("MLSPL_THREADS must be >= 1")
        return val
    return os.cpu_count() or 1


def train_and_evaluate(train: Dataset, test: Dataset, cfg: TrainConfig) -> MetricsReport:
    model = train_model(train, cfg)
    scores = model.scores(test.features)
    return evaluate_all(scores, model.predict(test.features), test.labels)


def select_pace(train: Dataset, cfg: TrainConfig, seed: int,
                lambdas=LAMBDA_GRID, mus=MU_GRID):
    """Pick ``(lambda0, mu)`` by average precision on a holdout of ``train``.

    Ties keep the earliest grid point (smallest lambda0, then smallest mu).
    Returns ``(lambda0, mu, table)`` where ``table`` lists every grid score.
    """
    inner, holdout = split(train, SplitSpec(1.0 - HOLDOUT_FRACTION, seed))
    best = None
    table = []
    for lam in lambdas:
        for mu in mus:
            rep = train_and_evaluate(inner, holdout, replace(cfg, lambda0=lam, mu=mu))
            ap = rep.average_precision
            table.append({"lambda0": lam, "mu": mu, "average_precision": ap})
            if best is None or ap > best[0]:
                best = (ap, lam, mu)
    return best[1], best[2], table


@dataclass
class RepeatResult:
    method: str
    repeat: int
    seed: int
    report: MetricsReport
    seconds: float
    selected: dict = field(default_factory=dict)


def _run_job(job) -> RepeatResult:
    ds, method, r, seed, cfg, train_fraction, grid = job
    t0 = time.perf_counter()
    train, test = split(ds, SplitSpec(train_fraction, seed))
    cfg = replace(cfg, seed=seed, baseline_mode=METHOD_MODES[method])
    selected = {}
    if grid and method == "mlspl":
        lam, mu, _ = select_pace(train, cfg, seed)
        cfg = replace(cfg, lambda0=lam, mu=mu)
        selected = {"lambda0": lam, "mu": mu}
    rep = train_and_evaluate(train, test, cfg)
    return RepeatResult(method, r, seed, rep, time.perf_counter() - t0, selected)


def run_benchmark(ds: Dataset, cfg: TrainConfig, *, methods=("mlspl",), repeats=10,
                  base_seed=0, train_fraction=0.3, grid=False, workers=None):
    """Train and evaluate every method on ``repeats`` shared random splits.

    Returns ``(aggregates, results)``: one AggregateReport per method and the
    per-repeat results in (method, repeat) order.  The outcome does not
    depend on ``workers``.
    """
    for m in methods:
        if m not in METHOD_MODES:
            raise ValueError(f"unknown method {m!r}; valid options: {', '.join(METHOD_MODES)}")
    seeds = derive_seeds(base_seed, repeats)
    for s in seeds:  # fail early on degenerate splits
        split_indices(ds.n, SplitSpec(train_fraction, s))
    jobs = [(ds, m, r, s, cfg, train_fraction, grid)
            for m in methods for r, s in enumerate(seeds)]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        results = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_job, jobs))
    aggregates = {m: aggregate(r.report for r in results if r.method == m) for m in methods}
    return aggregates, results


def benchmark_dict(aggregates: dict, results: list) -> dict:
    """JSON-ready benchmark report (timings excluded so reruns are identical)."""
    return {
        "methods": {m: agg.to_dict() for m, agg in aggregates.items()},
        "repeats": [
            {"method": r.method, "repeat": r.repeat, "seed": r.seed,
             "metrics": r.report.to_dict()["metrics"], "n_eval": r.report.n_eval,
             "selected": r.selected}
            for r in results
        ],
    }
