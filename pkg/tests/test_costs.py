import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from alpadeconv.convolution import make_operator
from alpadeconv.costs import (
    PenaltyParams,
    cost_pair,
    gap_bound,
    gradient_f_eps,
    inverse_irls_weights,
    irls_weights,
    lp_eps,
    lp_norm_p,
    smoothing_gap,
    stationarity_residual,
)
from alpadeconv.errors import DimensionMismatch, InvalidArgument

ps = st.sampled_from([0.1, 0.25, 0.5, 0.75, 1.0])
eps = st.sampled_from([1e-12, 1e-8, 1e-6, 1e-3, 1.0])


class TestParams:
    @pytest.mark.parametrize("kw", [{"p": 0}, {"p": 1.5}, {"delta": -1}, {"epsilon": 0}])
    def test_ranges(self, kw):
        with pytest.raises(InvalidArgument):
            PenaltyParams(**kw)

    def test_defaults(self):
        assert PenaltyParams() == PenaltyParams(0.1, 1.0, 1e-6)


class TestPenalties:
    def test_lp_norm_examples(self):
        assert lp_norm_p([0.0, 0.0, 0.0], 0.3) == 0.0
        assert lp_norm_p([1.0, -1.0], 1.0) == 2.0
        assert lp_norm_p([4.0], 0.5) == 2.0

    def test_lp_norm_p_range(self):
        with pytest.raises(InvalidArgument):
            lp_norm_p([1.0], 0.0)

    def test_lp_eps_examples(self):
        prm = PenaltyParams(p=0.4, epsilon=1e-4)
        assert lp_eps(np.zeros(7), prm) == pytest.approx(7 * 1e-4 ** 0.2, rel=1e-14)
        assert lp_eps([3.0], PenaltyParams(p=1.0, epsilon=16.0)) == 5.0

    def test_eps_limit(self):
        prm = PenaltyParams(p=0.5, epsilon=1e-12)
        assert abs(lp_eps([1.0, 2.0], prm) - lp_norm_p([1.0, 2.0], 0.5)) <= 1e-6

    @given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e3, 1e3)), ps, eps)
    def test_gap_in_range(self, e, p, ep):
        prm = PenaltyParams(p=p, epsilon=ep)
        g = smoothing_gap(e, prm)
        assert np.all(g > 0) and np.all(g <= ep ** (p / 2) * (1 + 1e-15))

    @pytest.mark.parametrize("x", [0.0, 1e-200, 1e-9, 1e-3, 0.7, 3.0, 1e5])
    @pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
    def test_gap_against_mpmath(self, x, p):
        ep = 1e-6
        with mpmath.workdps(60):
            ref = (mpmath.mpf(x) ** 2 + mpmath.mpf(ep)) ** (mpmath.mpf(p) / 2) - abs(mpmath.mpf(x)) ** p
        got = smoothing_gap([x], PenaltyParams(p=p, epsilon=ep))[0]
        assert got == pytest.approx(float(ref), rel=1e-12)


class TestCostPair:
    def test_zero_excitation(self, rng):
        h = rng.standard_normal(4)
        y = rng.standard_normal(12)
        prm = PenaltyParams(p=0.3, delta=2.0, epsilon=1e-4)
        c = cost_pair(y, h, np.zeros(9), prm)
        assert c.f_exact == pytest.approx(y @ y, rel=1e-14)
        assert c.f_eps == pytest.approx(y @ y + 2.0 * 9 * 1e-4 ** 0.15, rel=1e-14)

    def test_perfect_fit(self, rng):
        h, e = rng.standard_normal(3), rng.standard_normal(8)
        prm = PenaltyParams(p=0.5, delta=0.7)
        c = cost_pair(np.convolve(h, e), h, e, prm)
        assert c.data_term <= 1e-25
        assert c.f_exact == pytest.approx(0.7 * np.sum(np.abs(e) ** 0.5), rel=1e-12)

    @given(st.integers(0, 2**32 - 1), ps, eps, st.floats(0.01, 1.0))
    def test_split_and_sandwich(self, seed, p, ep, delta):
        r = np.random.default_rng(seed)
        h, e, y = r.standard_normal(5), r.standard_normal(11) * r.integers(0, 2, 11), r.standard_normal(15)
        prm = PenaltyParams(p=p, delta=delta, epsilon=ep)
        c = cost_pair(y, h, e, prm)
        assert c.f_exact == pytest.approx(c.data_term + delta * c.penalty_exact, rel=1e-13)
        assert c.f_eps == pytest.approx(c.data_term + delta * c.penalty_eps, rel=1e-13)
        # with delta <= 1 both delta*M*eps^(p/2) and M*eps^(p/2) bound the gap
        assert 0 < c.gap <= gap_bound(11, prm) <= 11 * ep ** (p / 2)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cost_pair(np.zeros(5), np.ones(2), np.ones(3), PenaltyParams())


class TestWeights:
    def test_origin(self):
        prm = PenaltyParams(p=0.3, epsilon=1e-4)
        assert irls_weights([0.0], prm)[0] == pytest.approx(0.3 * 1e-4 ** (0.15 - 1), rel=1e-14)

    def test_l1_limit(self):
        assert irls_weights([2.0], PenaltyParams(p=1.0, epsilon=1e-12))[0] == pytest.approx(0.5, rel=1e-10)

    @given(arrays(np.float64, 20, elements=st.floats(-1e4, 1e4)), ps, eps)
    def test_monotone_and_inverse(self, e, p, ep):
        prm = PenaltyParams(p=p, epsilon=ep)
        w = irls_weights(e, prm)
        order = np.argsort(np.abs(e))
        assert np.all(np.diff(w[order]) <= 0)
        np.testing.assert_allclose(w * inverse_irls_weights(e, prm), 1.0, rtol=1e-12)

    def test_inverse_weights_at_tiny_entries(self):
        prm = PenaltyParams(p=0.1, epsilon=1e-300)
        assert np.isfinite(inverse_irls_weights([0.0, 1e-300], prm)).all()

    def test_gradient_matches_finite_differences(self, rng):
        h, e, y = rng.standard_normal(4), rng.standard_normal(6), rng.standard_normal(9)
        prm = PenaltyParams(p=0.5, delta=0.8, epsilon=1e-2)
        g = gradient_f_eps(y, h, e, prm)
        fd = np.empty(6)
        for i in range(6):
            d = np.zeros(6)
            d[i] = 1e-6
            fd[i] = (cost_pair(y, h, e + d, prm).f_eps - cost_pair(y, h, e - d, prm).f_eps) / 2e-6
        np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-7)


class TestStationarity:
    def test_frozen_weight_solution(self, rng):
        h, y = rng.standard_normal(5), rng.standard_normal(20)
        prm = PenaltyParams(p=0.5, delta=1.0, epsilon=1e-4)
        e0 = rng.standard_normal(16)
        w = irls_weights(e0, prm)
        A = make_operator(h, 16).matrix()
        e = np.linalg.solve(A.T @ A + 0.5 * np.diag(w), A.T @ y)
        assert stationarity_residual(y, h, e, prm, weights=w) <= 1e-8 * np.linalg.norm(A.T @ y)

    def test_least_squares_solution(self, rng):
        h, y = rng.standard_normal(5), rng.standard_normal(20)
        A = make_operator(h, 16).matrix()
        e = np.linalg.lstsq(A, y, rcond=None)[0]
        prm = PenaltyParams(delta=0.0)
        assert stationarity_residual(y, h, e, prm) <= 1e-8 * np.linalg.norm(A.T @ y)

    def test_far_from_optimum(self, rng):
        h, y = rng.standard_normal(5), rng.standard_normal(20)
        assert stationarity_residual(y, h, 10 * rng.standard_normal(16), PenaltyParams()) > 0

    def test_is_half_the_gradient(self, rng):
        h, e, y = rng.standard_normal(4), rng.standard_normal(6), rng.standard_normal(9)
        prm = PenaltyParams(p=0.2, delta=1.3, epsilon=1e-3)
        assert stationarity_residual(y, h, e, prm) == pytest.approx(
            0.5 * np.linalg.norm(gradient_f_eps(y, h, e, prm)), rel=1e-12)
