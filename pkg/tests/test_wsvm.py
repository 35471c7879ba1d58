import numpy as np
import pytest

from mlspl.wsvm import (LinearModel, WeightedProblem, best_bias, decision_value,
                        dual_objective, primal_objective, train_weighted_svm)
from oracles import random_svm_problem, subgradient_svm


def _separable_1d():
    return WeightedProblem(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]), np.ones(2), 1.0,
                           fit_intercept=False)


class TestProblem:
    @pytest.mark.parametrize("kwargs", [
        dict(instance_weights=np.array([0.5, 1.5])),
        dict(instance_weights=np.array([-0.1, 1.0])),
        dict(targets=np.array([1.0, 0.0])),
        dict(alpha_reg=0.0),
        dict(inputs=np.array([[np.nan], [1.0]])),
    ])
    def test_validation(self, kwargs):
        base = dict(inputs=np.array([[1.0], [-1.0]]), targets=np.array([1.0, -1.0]),
                    instance_weights=np.ones(2), alpha_reg=1.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            WeightedProblem(**base)

    def test_box(self):
        prob = WeightedProblem(np.ones((2, 1)), np.array([1.0, -1.0]), np.array([0.5, 1.0]), 2.0)
        assert prob.box.tolist() == [0.125, 0.25]


class TestTraining:
    def test_all_zero_weights(self, rng):
        prob = WeightedProblem(rng.normal(size=(6, 3)), np.array([1.0, -1] * 3), np.zeros(6), 1.0)
        m = train_weighted_svm(prob)
        assert np.all(m.weights == 0) and m.bias == 0.0

    def test_closed_form_1d(self):
        m = train_weighted_svm(_separable_1d(), tol=1e-10)
        assert m.weights[0] == pytest.approx(1.0, abs=1e-6)
        assert primal_objective(_separable_1d(), m) == pytest.approx(1.0, abs=1e-6)

    def test_random_against_subgradient(self, rng):
        Z = rng.normal(size=(20, 5))
        y = np.where(Z[:, 0] + 0.5 * rng.normal(size=20) > 0, 1.0, -1.0)
        v = rng.random(20)
        m = train_weighted_svm(WeightedProblem(Z, y, v, 0.7))
        ref = subgradient_svm(Z, y, v, 0.7, 20000)
        assert abs(m.primal - ref) / max(1.0, abs(ref)) <= 1e-3

    @pytest.mark.parametrize("fit_intercept", [True, False])
    def test_certificate(self, rng, fit_intercept):
        for _ in range(20):
            Z, y, v, alpha = random_svm_problem(rng)
            prob = WeightedProblem(Z, y, v, alpha, fit_intercept=fit_intercept)
            m = train_weighted_svm(prob, tol=1e-5)
            C = prob.box
            assert np.all(m.dual >= -1e-12) and np.all(m.dual <= C + 1e-12)
            if fit_intercept:
                assert abs(m.dual @ y) <= 1e-9 * max(1.0, C.sum())
            P = primal_objective(prob, m)
            D = dual_objective(prob, m.dual)
            assert P == pytest.approx(m.primal)
            assert P >= D - 1e-9
            assert (P - D) / max(1.0, abs(P)) <= 1e-5

    def test_debug_mode_runs(self, rng):
        Z, y, v, alpha = random_svm_problem(rng)
        for fit_intercept in (True, False):
            train_weighted_svm(WeightedProblem(Z, y, v, alpha, fit_intercept), debug=True)

    def test_regularization_monotone(self, rng):
        for _ in range(15):
            Z, y, v, alpha = random_svm_problem(rng)
            w1 = train_weighted_svm(WeightedProblem(Z, y, v, alpha), tol=1e-8).weights
            w2 = train_weighted_svm(WeightedProblem(Z, y, v, 2 * alpha), tol=1e-8).weights
            assert np.linalg.norm(w2) <= np.linalg.norm(w1) + 1e-4

    def test_unit_weights_match_unweighted_path(self, rng):
        Z, y, _, alpha = random_svm_problem(rng)
        a = train_weighted_svm(WeightedProblem(Z, y, np.ones(len(y)), alpha))
        b = train_weighted_svm(WeightedProblem(Z, y, np.ones(len(y)), alpha))
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias

    def test_zero_weight_rows_are_ignored(self, rng):
        Z, y, v, alpha = random_svm_problem(rng)
        v[::3] = 0.0
        full = train_weighted_svm(WeightedProblem(Z, y, v, alpha), tol=1e-8)
        keep = v > 0
        sub = train_weighted_svm(WeightedProblem(Z[keep], y[keep], v[keep], alpha), tol=1e-8)
        assert full.primal == pytest.approx(sub.primal, rel=1e-6)

    def test_single_class(self):
        Z = np.array([[1.0], [2.0], [3.0]])
        m = train_weighted_svm(WeightedProblem(Z, np.ones(3), np.ones(3), 1.0))
        assert np.all(decision_value(m, Z) >= 1 - 1e-6)


class TestObjectives:
    def test_zero_model_primal_is_n(self, rng):
        Z, y, _, alpha = random_svm_problem(rng)
        prob = WeightedProblem(Z, y, np.ones(len(y)), alpha)
        assert primal_objective(prob, LinearModel(np.zeros(Z.shape[1]))) == pytest.approx(len(y))

    def test_zero_duals(self, rng):
        Z, y, v, alpha = random_svm_problem(rng)
        assert dual_objective(WeightedProblem(Z, y, v, alpha), np.zeros(len(y))) == 0.0

    def test_decision_value(self):
        m = LinearModel(np.array([1.0, 0.0, 0.0]), bias=0.5)
        assert decision_value(LinearModel(np.zeros(3)), np.ones(3)) == 0.0
        assert decision_value(m, np.array([3.0, 7.0, 1.0])) == 3.5
        z1, z2 = np.array([1.0, 2, 3]), np.array([-4.0, 0, 1])
        assert decision_value(m, z1 + z2) == pytest.approx(decision_value(m, z1) + decision_value(m, z2) - 0.5)
        with pytest.raises(ValueError):
            decision_value(m, np.ones(2))

    def test_nonfinite_model_rejected(self):
        with pytest.raises(ValueError):
            LinearModel(np.array([np.inf]))


class TestBestBias:
    def test_brute_force(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 12))
            s = rng.normal(size=n)
            y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
            C = rng.random(n)
            f = lambda b: float(C @ np.maximum(0, 1 - y * (s + b)))
            grid = np.concatenate([y - s, np.linspace(-5, 5, 2001)])
            assert f(best_bias(s, y, C)) <= min(f(b) for b in grid) + 1e-12

    def test_no_live_weights(self):
        assert best_bias(np.zeros(3), np.ones(3), np.zeros(3)) == 0.0
