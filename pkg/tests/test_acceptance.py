"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the summary lines are
repeated at the end of the pytest report) or as ``python3 tests/test_acceptance.py``.
Set ``MLSPL_EMOTIONS=/path/to/emotions.arff`` to run criterion 8 on the real data.
"""

import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles
from acceptance_log import record
from mlspl import cli, selfpace
from mlspl.dataio import Dataset, Scaler, load_arff, write_arff
from mlspl.experiment import run_benchmark
from mlspl.lpsolve import QSubproblem, objective_q, solve_q
from mlspl.metrics import (CRITERIA, average_precision, coverage, evaluate_all, hamming_loss,
                           one_error, ranking_loss)
from mlspl.synthetic import make_multilabel, noisy_dataset
from mlspl.trainer import TrainConfig, fit, initialize, sweep, update_V
from mlspl.wsvm import WeightedProblem, dual_objective, primal_objective, train_weighted_svm

EMOTIONS_SHAPE = (593, 72, 6)


def _toy():
    X, Y = make_multilabel(40, 5, 3, seed=11)
    return Scaler.fit(X).transform(X), Y


def test_c1_scheme_correctness():
    t0 = time.perf_counter()
    reports = [selfpace.verify_scheme(k) for k in selfpace.SchemeKind]
    secs = time.perf_counter() - t0
    failed = [f"{r.kind}:{c.name}" for r in reports for c in r.checks if not c.passed]
    ok = not failed and secs < 10
    record(1, ok, f"4 schemes x {len(selfpace.CHECK_NAMES)} checks, failures={failed or 'none'}, "
                  f"{secs:.1f}s (< 10s)")
    assert ok


def test_c2_lp_oracle():
    rng = np.random.default_rng(2024)
    grid = oracles.simplex_grid_3(1e-3)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        b, U, y, v, dists, beta = oracles.grid_aligned_instance(rng, L=4, m=3)
        sub = QSubproblem(b, U, y, v, dists, beta)
        val = objective_q(sub, solve_q(sub))
        best = oracles.q_objective_grid(b, U, y, v, dists, beta, grid).min()
        worst = max(worst, abs(val - best))
    secs = time.perf_counter() - t0
    ok = worst <= 1e-6 and secs < 60
    record(2, ok, f"200 instances (m=3, L=4), max |LP - grid| = {worst:.2e} (<= 1e-6), "
                  f"{secs:.1f}s (< 60s)")
    assert ok


def test_c3_svm_certificate():
    rng = np.random.default_rng(77)
    oracles.subgradient_svm(np.ones((2, 1)), np.array([1.0, -1.0]), np.ones(2), 1.0, 10)  # jit
    t0 = time.perf_counter()
    worst_gap = worst_rel = 0.0
    for _ in range(100):
        Z, y, v, alpha = oracles.random_svm_problem(rng)
        prob = WeightedProblem(Z, y, v, alpha)
        m = train_weighted_svm(prob, tol=1e-4)
        P = primal_objective(prob, m)
        D = dual_objective(prob, m.dual)
        worst_gap = max(worst_gap, (P - D) / max(1.0, abs(P)))
        ref = oracles.subgradient_svm(Z, y, v, alpha, 20000)
        worst_rel = max(worst_rel, abs(P - ref) / max(1.0, abs(ref)))
    secs = time.perf_counter() - t0
    ok = worst_gap <= 1e-4 and worst_rel <= 1e-3 and secs < 60
    record(3, ok, f"100 problems, max gap {worst_gap:.2e} (<= 1e-4), max rel. diff vs "
                  f"subgradient {worst_rel:.2e} (<= 1e-3), {secs:.1f}s (< 60s)")
    assert ok


def test_c4_monotone_alternation():
    X, Y = _toy()
    t0 = time.perf_counter()
    worst = -math.inf
    n_updates = 0
    for kind in selfpace.SchemeKind:
        for lam0 in (1e-3, 0.05):
            trace = []
            fit(X, Y, TrainConfig(m=2, scheme=kind, lambda0=lam0), trace=trace)
            prev = None
            for _, block, val in trace:
                if block != "start":
                    worst = max(worst, (val - prev) / max(1.0, abs(prev)))
                    n_updates += 1
                prev = val
    secs = time.perf_counter() - t0
    ok = worst <= 1e-6 and secs < 30
    record(4, ok, f"{n_updates} block updates, largest relative increase {worst:.2e} "
                  f"(<= 1e-6), {secs:.1f}s (< 30s)")
    assert ok


def _reduction_gap(X, Y, kind):
    full = TrainConfig(m=2, scheme=kind)
    base = dataclasses.replace(full, baseline_mode="mllocc_equivalent")
    st = initialize(X, Y, full)
    st.lam = 1e9
    min_v = float(update_V(st, X, Y, full).V.min())
    a = sweep(st.copy(), X, Y, full)
    b = sweep(st.copy(), X, Y, base)
    diff = max(float(np.max(np.abs(getattr(a, k) - getattr(b, k)))) for k in ("W", "b", "Q", "A"))
    return min_v, diff


def test_c5_reduction_identity():
    # arctan's regularizer is infinite at v = 1, so its weights stay a hair below one and
    # the solver path differs by the SVM tolerance; it is reported but not gated here
    X, Y = _toy()
    snapped = ("sigmoid", "tanh", "exponential")
    gaps = {k: _reduction_gap(X, Y, k) for k in snapped + ("arctan",)}
    min_v = min(v for v, _ in gaps.values())
    worst = max(gaps[k][1] for k in snapped)
    ok = min_v > 1 - 1e-6 and worst <= 1e-8
    record(5, ok, f"lambda=1e9, min v = {min_v:.9f}, max |full - mllocc| over W,b,Q,A = "
                  f"{worst:.1e} (<= 1e-8) for {'/'.join(snapped)}; "
                  f"arctan (unsnapped, informational) {gaps['arctan'][1]:.1e}")
    assert ok


def test_c6_metrics_oracle():
    S = np.array([[0.9, 0.8, -0.2]])
    Y = np.array([[1, -1, 1]])
    P = np.array([[1, 1, -1]])
    # 2/3 and 5/6 have no exact binary form; "exact" means equal up to rounding
    got = (hamming_loss(P, Y), one_error(S, Y), coverage(S, Y), ranking_loss(S, Y),
           average_precision(S, Y))
    exact = all(abs(g - w) <= 1e-12 for g, w in zip(got, (2 / 3, 0.0, 2.0, 0.5, 5 / 6)))
    rng = np.random.default_rng(6)
    bad = 0
    for _ in range(100):
        n, L = int(rng.integers(1, 8)), int(rng.integers(2, 8))
        S = rng.integers(-4, 5, size=(n, L)).astype(float)
        Y = np.where(rng.random((n, L)) < 0.4, 1, -1)
        a = evaluate_all(S, S > 0, Y).values()
        b = evaluate_all(np.tanh(S / 3) * 5 + 2, S > 0, Y).values()
        same = all((math.isnan(a[c]) and math.isnan(b[c])) or a[c] == b[c] for c in CRITERIA)
        brute = oracles.brute_average_precision(S, Y)
        same &= (math.isnan(brute) and math.isnan(a["average_precision"])) or \
            abs(brute - a["average_precision"]) < 1e-12
        bad += not same
    ok = exact and bad == 0
    record(6, ok, f"worked example exact={exact}, invariance failures {bad}/100")
    assert ok


def test_c7_self_paced_benefit():
    ds = noisy_dataset(n=300, d=10, n_labels=4, noise=0.2, seed=0)
    cfg = TrainConfig(scheme="sigmoid", lambda0=1e-3, mu=1.2)
    t0 = time.perf_counter()
    _, results = run_benchmark(ds, cfg, methods=("mlspl", "mllocc_equivalent"), repeats=10,
                               base_seed=0, train_fraction=0.3)
    secs = time.perf_counter() - t0
    ap = {}
    for r in results:
        ap.setdefault(r.method, []).append(r.report.average_precision)
    wins = sum(a >= b for a, b in zip(ap["mlspl"], ap["mllocc_equivalent"]))
    ok = wins >= 7 and secs < 300
    record(7, ok, f"MLSPL AP >= mllocc_equivalent AP on {wins}/10 repeats (need >= 7), "
                  f"mean AP {np.mean(ap['mlspl']):.4f} vs {np.mean(ap['mllocc_equivalent']):.4f}, "
                  f"{secs:.0f}s (< 300s)")
    assert ok


def _emotions(tmp: Path):
    """Real emotions data when available, otherwise a clearly labelled surrogate."""
    env = os.environ.get("MLSPL_EMOTIONS")
    candidates = [Path(env)] if env else []
    candidates += [Path("emotions.arff"), Path(__file__).parent.parent / "data" / "emotions.arff"]
    for path in candidates:
        if path.is_file():
            return path, "emotions"
    n, d, L = EMOTIONS_SHAPE
    X, Y = make_multilabel(n, d, L, seed=593)
    path = tmp / "emotions_surrogate.arff"
    write_arff(Dataset(X, Y, label_names=[f"mood{j}" for j in range(L)]), path)
    return path, "SURROGATE (synthetic 593x72, 6 labels; emotions.arff not found)"


def test_c8_protocol_fidelity(tmp_path):
    path, label = _emotions(tmp_path)
    args = ["benchmark", "--dataset", str(path), "--labels", "6", "--repeats", "10",
            "--train-fraction", "0.3", "--seed", "0"]
    t0 = time.perf_counter()
    rc_a = cli.main(args + ["--out", str(tmp_path / "a")])
    secs = time.perf_counter() - t0
    rc_b = cli.main(args + ["--out", str(tmp_path / "b")])
    report = json.loads((tmp_path / "a/report.json").read_text())
    crit = report["methods"]["mlspl"]["criteria"]
    L = 6
    upper = {"coverage": L - 1}
    in_range = all(0 <= crit[c]["mean"] <= upper.get(c, 1) and crit[c]["std"] >= 0
                   and len(crit[c]["values"]) == 10 for c in CRITERIA)
    same = (tmp_path / "a/report.json").read_bytes() == (tmp_path / "b/report.json").read_bytes()
    table = (tmp_path / "a/report.txt").read_text()
    ok = rc_a == rc_b == 0 and in_range and same and "±" in table and secs < 600
    record(8, ok, f"{label}: 10 repeats at 30/70, criteria in range={in_range}, "
                  f"deterministic={same}, {secs:.0f}s per run (< 600s)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
