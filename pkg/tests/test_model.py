import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kolmo2eq.model import (InitialBounds, ModelParams, beta_exponents,
                            estimate_constants, existence_time, q_constants,
                            thresholds_at, uniform_floor)

mp.mp.dps = 40


def mp_thresholds(b_min, om_min, om_max, kappa2, t):
    b_min, om_min, om_max, kappa2, t = map(mp.mpf, (b_min, om_min, om_max, kappa2, t))
    return (
        b_min * (1 + kappa2 * om_max * t) ** (-1 / kappa2),
        om_min / (1 + kappa2 * om_min * t),
        om_max / (1 + kappa2 * om_max * t),
        b_min * (1 + kappa2 * om_max * t) ** (-1 / kappa2) / (om_max / (1 + kappa2 * om_max * t)) / 4,
    )


def mp_tstar(delta, b_min, om_min, om_max, kappa2, c_est):
    delta, b_min, om_min, om_max, kappa2, c_est = map(
        mp.mpf, (delta, b_min, om_min, om_max, kappa2, c_est))
    q1 = (b_min / om_min) * (1 + b_min ** -3 + om_min ** -3)
    q2 = (1 + (om_max / b_min) ** 3) * ((b_min / om_min) * (1 + b_min ** -3 + om_min ** -3) ** 10 + 1)
    q3 = q1 ** 2 + q2 + 1
    beta = max(1 / kappa2 - 1, 3 / kappa2 - 3)
    bbar = 10 * max(1 + 1 / kappa2, 3) + beta
    x = (bbar + 1) * kappa2 * om_max * (1 + delta) ** -14 / (15 * c_est * q3)
    return ((1 + x) ** (1 / (bbar + 1)) - 1) / (kappa2 * om_max)


class TestModelParams:
    def test_defaults_unit_constants(self):
        p = ModelParams()
        assert (p.nu0, p.kappa1, p.kappa3, p.kappa4) == (1.0, 1.0, 1.0, 1.0)

    @pytest.mark.parametrize("field", ["nu0", "kappa2", "L1"])
    def test_rejects_nonpositive(self, field):
        with pytest.raises(ValueError, match=field):
            ModelParams(**{field: -1.0})


class TestInitialBounds:
    def test_rejects_inverted_omega(self):
        with pytest.raises(ValueError):
            InitialBounds(b_min=1.0, omega_min=2.0, omega_max=1.0)

    def test_rejects_zero_b(self):
        with pytest.raises(ValueError):
            InitialBounds(b_min=0.0, omega_min=1.0, omega_max=1.0)


class TestThresholds:
    def test_t0_identity(self):
        th = thresholds_at(InitialBounds(1, 1, 1), 1.0, 0.0)
        assert (th.b_star, th.omega_star, th.omega_dstar, th.mu_star) == (1.0, 1.0, 1.0, 0.25)

    def test_unit_t1(self):
        th = thresholds_at(InitialBounds(1, 1, 1), 1.0, 1.0)
        assert (th.b_star, th.omega_star, th.omega_dstar, th.mu_star) == (0.5, 0.5, 0.5, 0.25)

    def test_derived_values(self):
        # independent arbitrary-precision evaluation of the closed forms
        exp = [float(v) for v in mp_thresholds(2, 1, 4, 2, 0.5)]
        th = thresholds_at(InitialBounds(2, 1, 4), 2.0, 0.5)
        got = [th.b_star, th.omega_star, th.omega_dstar, th.mu_star]
        assert got == pytest.approx(exp, rel=1e-14)
        assert th.b_star == pytest.approx(0.8944271909999159, rel=1e-12)
        assert th.mu_star == pytest.approx(0.2795084971874737, rel=1e-12)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            thresholds_at(InitialBounds(1, 1, 1), 1.0, -0.1)

    @given(
        b_min=st.floats(0.1, 10), om_min=st.floats(0.1, 5), spread=st.floats(0.0, 5),
        kappa2=st.floats(0.2, 5), t1=st.floats(0, 10), dt=st.floats(0.01, 10),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_decay_and_order(self, b_min, om_min, spread, kappa2, t1, dt):
        bounds = InitialBounds(b_min, om_min, om_min + spread)
        a = thresholds_at(bounds, kappa2, t1)
        b = thresholds_at(bounds, kappa2, t1 + dt)
        assert b.b_star < a.b_star
        assert b.omega_star < a.omega_star
        assert b.omega_dstar < a.omega_dstar
        assert a.omega_star <= a.omega_dstar * (1 + 1e-12)
        assert min(a.b_star, a.omega_star, a.omega_dstar, a.mu_star) > 0

    @given(kappa2=st.floats(0.2, 5), t=st.floats(0, 20))
    @settings(max_examples=100, deadline=None)
    def test_mu_star_closed_form(self, kappa2, t):
        bounds = InitialBounds(2.0, 0.5, 3.0)
        th = thresholds_at(bounds, kappa2, t)
        direct = 0.25 * (bounds.b_min / bounds.omega_max) \
            * (1.0 + kappa2 * bounds.omega_max * t) ** (1.0 - 1.0 / kappa2)
        assert th.mu_star == pytest.approx(direct, rel=1e-12)

    def test_b_star_time_derivative_matches_fd(self):
        bounds = InitialBounds(2.0, 0.5, 3.0)
        kappa2, t, h = 1.7, 0.8, 1e-6
        analytic = -bounds.omega_max * bounds.b_min \
            * (1.0 + kappa2 * bounds.omega_max * t) ** (-1.0 / kappa2 - 1.0)
        fd = (thresholds_at(bounds, kappa2, t + h).b_star
              - thresholds_at(bounds, kappa2, t - h).b_star) / (2 * h)
        assert fd == pytest.approx(analytic, rel=1e-6)


class TestQConstants:
    def test_unit_bounds(self):
        assert q_constants(InitialBounds(1, 1, 1)) == (3.0, 118100.0, 118110.0)

    def test_derived_2_1_4(self):
        q1, q2, q3 = q_constants(InitialBounds(2, 1, 4))
        assert q1 == 4.25
        assert q2 == pytest.approx(33804.73133595474, rel=1e-13)
        assert q3 == pytest.approx(q1 ** 2 + q2 + 1.0, rel=1e-15)

    def test_q1_grows_linearly_in_large_b_min(self):
        q1a = q_constants(InitialBounds(100.0, 1, 1))[0]
        q1b = q_constants(InitialBounds(200.0, 1, 1))[0]
        assert q1b > q1a
        assert q1b / q1a == pytest.approx(2.0, rel=1e-4)


class TestBetaExponents:
    @pytest.mark.parametrize("kappa2,beta,beta_bar", [
        (1.0, 0.0, 30.0),
        (0.5, 3.0, 33.0),
        (2.0, -0.5, 29.5),
    ])
    def test_values(self, kappa2, beta, beta_bar):
        assert beta_exponents(kappa2) == (beta, beta_bar)

    def test_estimate_constants_bundle(self):
        ec = estimate_constants(InitialBounds(1, 1, 1), 1.0)
        assert ec.Q3 == ec.Q1 ** 2 + ec.Q2 + 1.0
        assert ec.beta_bar == 30.0


class TestExistenceTime:
    def test_frozen_unit_value(self):
        oracle = float(mp_tstar(0, 1, 1, 1, 1, 1))
        ts = existence_time(0.0, InitialBounds(1, 1, 1), 1.0, C_est=1.0)
        assert ts == pytest.approx(oracle, rel=1e-13)
        assert ts == pytest.approx(5.644407944083602e-07, rel=1e-12)

    @pytest.mark.parametrize("delta,bounds,kappa2,c_est", [
        (0.0, (1, 1, 1), 1.0, 1.0),
        (1.0, (2, 1, 4), 2.0, 1.0),
        (500.0, (1, 1, 1), 1.0, 1e-40),
        (3.0, (0.5, 0.2, 0.9), 0.7, 12.0),
    ])
    def test_defining_identity(self, delta, bounds, kappa2, c_est):
        bounds = InitialBounds(*bounds)
        ts = existence_time(delta, bounds, kappa2, C_est=c_est)
        _, _, q3 = q_constants(bounds)
        _, bbar = beta_exponents(kappa2)
        rate = kappa2 * bounds.omega_max
        lhs = (1.0 + delta) ** -14
        rhs = 15.0 * c_est * q3 / ((bbar + 1.0) * rate) * math.expm1((bbar + 1.0) * math.log1p(rate * ts))
        assert rhs == pytest.approx(lhs, rel=1e-12)

    def test_strictly_decreasing_in_delta(self):
        bounds = InitialBounds(1, 1, 1)
        values = [existence_time(d, bounds, 1.0) for d in np.linspace(0.0, 50.0, 100)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_halving_c_est_raises_tstar(self):
        bounds = InitialBounds(1, 1, 1)
        assert existence_time(1.0, bounds, 1.0, C_est=0.5) > existence_time(1.0, bounds, 1.0, C_est=1.0)

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            existence_time(-1.0, InitialBounds(1, 1, 1), 1.0)


class TestUniformFloor:
    def test_single_point_box(self):
        box = ((1.0, 1.0), (2.0, 2.0), (3.0, 3.0))
        floor = uniform_floor(0.5, box, 1.0)
        direct = existence_time(0.5, InitialBounds(3.0, 1.0, 2.0), 1.0)
        assert floor == pytest.approx(direct, rel=1e-14)

    def test_against_dense_scan(self):
        # brute-force scan at 100 points per axis, written out independently
        box = ((1.0, 2.0), (2.0, 4.0), (1.0, 3.0))
        floor = uniform_floor(1.0, box, 1.0, grid_n=16)
        a = np.linspace(1.0, 2.0, 100)[:, None, None]   # omega_min
        b = np.linspace(2.0, 4.0, 100)[None, :, None]   # omega_max
        c = np.linspace(1.0, 3.0, 100)[None, None, :]   # b_min
        q1 = (c / a) * (1.0 + c ** -3 + a ** -3)
        q2 = (1.0 + (b / c) ** 3) * ((c / a) * (1.0 + c ** -3 + a ** -3) ** 10 + 1.0)
        q3 = q1 * q1 + q2 + 1.0
        x = 31.0 * b * 2.0 ** -14 / (15.0 * q3)         # kappa2=1, delta=1, beta_bar=30
        best = float((np.expm1(np.log1p(x) / 31.0) / b).min())
        # the minimum sits at the (omega_min, omega_max, b_min) = (1, 4, 1) corner,
        # which both grids contain exactly
        assert floor == pytest.approx(best, rel=1e-12)
        assert floor == pytest.approx(float(mp_tstar(1, 1, 1, 4, 1, 1)), rel=1e-12)

    def test_floor_monotone_in_box_inclusion(self):
        small = ((1.0, 2.0), (2.0, 4.0), (1.0, 3.0))
        large = ((0.5, 2.0), (2.0, 6.0), (0.5, 4.0))
        assert uniform_floor(1.0, large, 1.0) <= uniform_floor(1.0, small, 1.0)

    def test_invalid_boxes_rejected(self):
        with pytest.raises(ValueError):
            uniform_floor(1.0, ((2.0, 3.0), (1.0, 4.0), (1.0, 2.0)), 1.0)  # a_hi > b_lo
        with pytest.raises(ValueError):
            uniform_floor(1.0, ((0.0, 1.0), (1.0, 2.0), (1.0, 2.0)), 1.0)
        with pytest.raises(ValueError):
            uniform_floor(1.0, ((1.0, 0.5), (1.0, 2.0), (1.0, 2.0)), 1.0)
