import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlspl import selfpace
from mlspl.selfpace import PaceParams, SchemeKind, advance_pace, inverse_loss, regularizer, weight

ALL = list(SchemeKind)


class TestWeight:
    def test_sigmoid_zero_loss(self):
        assert weight(SchemeKind.SIGMOID, 0.0, 1.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("kind", [SchemeKind.ARCTAN, SchemeKind.TANH])
    @pytest.mark.parametrize("lam", [1e-3, 0.5, 2.0, 40.0])
    def test_half_at_loss_equal_lambda(self, kind, lam):
        assert weight(kind, lam, lam) == pytest.approx(0.5, abs=1e-12)

    def test_exponential_at_lambda(self):
        assert weight(SchemeKind.EXPONENTIAL, 2.5, 2.5) == pytest.approx(math.exp(-1), abs=1e-12)

    def test_closed_forms(self):
        l, lam = 0.7, 0.4
        assert weight("arctan", l, lam) == pytest.approx((math.pi / 2 - math.atan(l - lam)) / math.pi)
        assert weight("sigmoid", l, lam) == pytest.approx(2 / (1 + math.exp(l / lam)))
        assert weight("tanh", l, lam) == pytest.approx(1 / (1 + math.exp(2 * (l - lam))))
        assert weight("exponential", l, lam) == pytest.approx(math.exp(-l / lam))

    def test_vectorized(self):
        out = weight(SchemeKind.SIGMOID, np.array([0.0, 1.0, 100.0]), 1.0)
        assert out.shape == (3,)
        assert out[0] == 1.0 and out[2] < 1e-40

    @pytest.mark.parametrize("kind", ALL)
    def test_range(self, kind):
        l = np.linspace(0, 50, 301)
        for lam in (1e-5, 1e-2, 1.0, 100.0):
            v = weight(kind, l, lam)
            assert np.all((v >= 0) & (v <= 1))

    @pytest.mark.parametrize("bad", [(1.0, 0.0), (1.0, -1.0), (math.nan, 1.0), (math.inf, 1.0)])
    def test_domain_errors(self, bad):
        with pytest.raises(ValueError):
            weight(SchemeKind.SIGMOID, *bad)

    def test_no_overflow_for_tiny_lambda(self):
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            for kind in ALL:
                v = weight(kind, np.array([0.0, 1e-3, 5.0]), 1e-5)
                assert np.all(np.isfinite(v))


class TestRegularizer:
    def test_spec_values(self):
        assert regularizer("sigmoid", 1.0, 3.0) == pytest.approx(0.0, abs=1e-15)
        assert regularizer("arctan", 0.5, 2.0) == pytest.approx(-1.0, abs=1e-12)
        assert regularizer("tanh", 1.0, 1.7) == pytest.approx(-1.7)
        assert regularizer("exponential", 1.0, 0.3) == pytest.approx(-0.3)

    def test_tanh_limit_from_inside(self):
        assert regularizer("tanh", 1 - 1e-12, 2.0) == pytest.approx(-2.0, abs=1e-9)

    def test_arctan_endpoints_are_infinite(self):
        assert regularizer("arctan", 0.0, 1.0) == math.inf
        assert regularizer("arctan", 1.0, 1.0) == math.inf

    @pytest.mark.parametrize("v", [-0.1, 1.1])
    def test_out_of_range(self, v):
        with pytest.raises(ValueError):
            regularizer("sigmoid", v, 1.0)

    def test_clamped_is_finite(self):
        f = selfpace.clamped_regularizer("arctan", np.array([0.0, 0.5, 1.0]), 1.0)
        assert np.all(np.isfinite(f))


class TestInverseLoss:
    def test_spec_values(self):
        assert inverse_loss("tanh", 0.5, 1.3) == pytest.approx(1.3)
        assert inverse_loss("arctan", 0.5, 0.2) == pytest.approx(0.2)
        assert inverse_loss("sigmoid", 1 - 1e-9, 1.0) == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("kind", ALL)
    @pytest.mark.parametrize("v", [0.0, 1.0])
    def test_endpoints_rejected(self, kind, v):
        with pytest.raises(ValueError):
            inverse_loss(kind, v, 1.0)

    @pytest.mark.parametrize("kind", ALL)
    def test_strictly_decreasing(self, kind):
        v = np.linspace(0.01, 0.99, 199)
        for lam in (1e-5, 0.1, 10.0):
            s = inverse_loss(kind, v, lam)
            assert np.all(np.diff(s) < 0)


class TestProperties:
    @pytest.mark.parametrize("kind", ALL)
    @given(v=st.floats(0.01, 0.99), loglam=st.floats(-5, 2))
    def test_derivative_identity(self, kind, v, loglam):
        lam = 10.0 ** loglam
        h = 1e-6
        fd = (regularizer(kind, v + h, lam) - regularizer(kind, v - h, lam)) / (2 * h)
        s = inverse_loss(kind, v, lam)
        assert abs(fd + s) <= 1e-5 * (1 + abs(s))

    @pytest.mark.parametrize("kind", ALL)
    @given(v=st.floats(0.01, 0.99), loglam=st.floats(-5, 2))
    def test_round_trip(self, kind, v, loglam):
        lam = 10.0 ** loglam
        assert weight(kind, inverse_loss(kind, v, lam), lam) == pytest.approx(v, abs=1e-9)

    @pytest.mark.parametrize("kind", ALL)
    @given(l1=st.floats(0, 30), l2=st.floats(0, 30), loglam=st.floats(-5, 2))
    def test_monotone_in_loss(self, kind, l1, l2, loglam):
        lo, hi = sorted((l1, l2))
        lam = 10.0 ** loglam
        assert weight(kind, lo, lam) >= weight(kind, hi, lam)

    @pytest.mark.parametrize("kind", ALL)
    @given(l=st.floats(0, 30), a=st.floats(-5, 2), b=st.floats(-5, 2))
    def test_monotone_in_pace(self, kind, l, a, b):
        lo, hi = sorted((a, b))
        assert weight(kind, l, 10.0 ** lo) <= weight(kind, l, 10.0 ** hi)

    @pytest.mark.parametrize("kind", ALL)
    def test_grid_argmin_matches_weight(self, kind):
        rng = np.random.default_rng(3)
        v = np.linspace(0, 1, 10001)
        if kind is SchemeKind.ARCTAN:
            v = v[1:-1]
        for _ in range(50):
            l = rng.uniform(0, 5)
            lam = 10 ** rng.uniform(-1, 1)
            obj = v * l + regularizer(kind, v, lam)
            assert abs(v[np.argmin(obj)] - weight(kind, l, lam)) <= 1e-3


class TestPace:
    def test_advance(self):
        assert advance_pace(PaceParams(0.001, 1.2)).lam == pytest.approx(0.0012)

    def test_mu_must_exceed_one(self):
        with pytest.raises(ValueError):
            PaceParams(1.0, 1.0)

    def test_lambda_positive(self):
        with pytest.raises(ValueError):
            PaceParams(0.0, 1.5)

    def test_repeated(self):
        p = PaceParams(0.3, 1.1)
        for _ in range(10):
            p = advance_pace(p)
        assert p.lam == pytest.approx(0.3 * 1.1 ** 10)
        assert p.mu == 1.1


class TestSchemeKind:
    def test_parse_strings(self):
        assert SchemeKind.parse("Sigmoid") is SchemeKind.SIGMOID
        assert SchemeKind.parse(SchemeKind.TANH) is SchemeKind.TANH

    def test_unknown_names_options(self):
        with pytest.raises(ValueError, match="arctan, sigmoid, tanh, exponential"):
            SchemeKind.parse("relu")


class TestVerifier:
    @pytest.mark.parametrize("kind", ALL)
    def test_all_checks_pass(self, kind):
        rep = selfpace.verify_scheme(kind)
        assert [c.name for c in rep.checks] == list(selfpace.CHECK_NAMES)
        assert rep.passed, rep.as_dict()

    @pytest.mark.parametrize("kind", ALL)
    def test_corrupted_fails_convexity(self, kind):
        rep = selfpace.verify_scheme(kind, funcs=selfpace.corrupted_funcs(kind))
        checks = {c.name: c.passed for c in rep.checks}
        assert not rep.passed
        assert checks["convexity"] is False

    def test_grid_is_dense_enough(self):
        g = selfpace.VerificationGrid()
        assert g.n_v >= 100 and g.n_l >= 100 and g.n_lam >= 100
