import math

import numpy as np
import pytest

from kolmo2eq.cutoffs import CutoffProvider, build_cutoffs
from kolmo2eq.integrator import (REASON_BLOWUP, REASON_T_END, REASON_TSTAR,
                                 REASON_UNDERFLOW, AdmissibilityError,
                                 IntegratorConfig, simulate, step)
from kolmo2eq.model import InitialBounds, ModelParams, existence_time, thresholds_at
from kolmo2eq.oracle import constant_solution
from kolmo2eq.rhs import project_initial_data, rhs_all, state_max_defects
from kolmo2eq.spectral import make_grid

TWO_PI = 2.0 * math.pi
PARAMS = ModelParams()
UNIT_BOUNDS = InitialBounds(1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def grid8():
    return make_grid(8, TWO_PI)


def constant_data(grid, omega_bar=1.0, b_bar=1.0):
    shape = grid.shape
    return np.zeros((3,) + shape), np.full(shape, omega_bar), np.full(shape, b_bar)


def make_rhs_eval(bounds, params=PARAMS, drift_tol=1e-3):
    provider = CutoffProvider(bounds, params.kappa2, drift_tol=drift_tol)
    return lambda s: rhs_all(s, params, provider.at(s.t))


class TestConfig:
    def test_rejects_bad_dt_ordering(self):
        with pytest.raises(ValueError):
            IntegratorConfig(dt_init=1e-3, dt_min=1e-2)

    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError):
            IntegratorConfig(method="euler")

    def test_rejects_nonpositive_t_end(self):
        with pytest.raises(ValueError):
            IntegratorConfig(t_end=0.0)


class TestStep:
    def test_fixed_point_of_zero_state(self, grid8):
        st = project_initial_data(grid8, *constant_data(grid8))
        st.omega.coef[:] = 0.0
        st.b.coef[:] = 0.0
        out = step(st, 0.1, make_rhs_eval(UNIT_BOUNDS))
        assert out.t == pytest.approx(0.1)
        assert np.array_equal(out.omega.coef, st.omega.coef)
        assert np.array_equal(out.b.coef, st.b.coef)
        assert np.array_equal(out.v.coef, st.v.coef)

    def test_local_error_fifth_order(self, grid8):
        st = project_initial_data(grid8, *constant_data(grid8))
        rhs_eval = make_rhs_eval(UNIT_BOUNDS)
        errs = []
        for dt in (0.08, 0.04):
            out = step(st, dt, rhs_eval)
            exact = constant_solution(1.0, 1.0, 1.0, dt)[0]
            errs.append(abs(out.omega.coef[0, 0, 0].real - exact))
        order = math.log2(errs[0] / errs[1])
        assert order == pytest.approx(5.0, abs=0.4)

    def test_preserves_symmetry_and_divergence(self, grid8):
        rng = np.random.default_rng(0)
        x = grid8.mesh()
        v0 = 0.1 * np.stack([np.sin(x[1]), np.sin(x[2]), np.zeros(grid8.shape)])
        om0 = 1.0 + 0.05 * np.cos(x[0])
        b0 = 1.0 + 0.05 * np.sin(x[1])
        st = project_initial_data(grid8, v0, om0, b0)
        out = step(st, 1e-3, make_rhs_eval(InitialBounds(0.9, 0.9, 1.1)))
        herm, div, off = state_max_defects(out)
        assert herm < 1e-12 and div < 1e-12 and off == 0.0


class TestSimulateConstantField:
    def test_matches_closed_form(self, grid8):
        cfg = IntegratorConfig(method="rk4", dt_init=1e-3, t_end=0.25, record_every=50)
        traj = simulate(grid8, *constant_data(grid8), PARAMS, UNIT_BOUNDS, cfg)
        assert traj.reason == REASON_T_END
        last = traj.entries[-1].state
        omega_exact, b_exact = constant_solution(1.0, 1.0, 1.0, 0.25)
        assert last.omega.coef[0, 0, 0].real == pytest.approx(omega_exact, abs=1e-10)
        assert last.b.coef[0, 0, 0].real == pytest.approx(b_exact, abs=1e-10)

    def test_rk4_convergence_order(self, grid8):
        # step sizes sit below the automatic diffusion cap 0.5/k_max^2 = 1/16
        errs = []
        dts = (0.05, 0.025, 0.0125)
        for dt in dts:
            cfg = IntegratorConfig(method="rk4", dt_init=dt, t_end=1.0, record_every=10 ** 6)
            traj = simulate(grid8, *constant_data(grid8), PARAMS, UNIT_BOUNDS, cfg)
            omega_final = traj.entries[-1].state.omega.coef[0, 0, 0].real
            errs.append(abs(omega_final - 0.5))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
        for order in orders:
            assert abs(order - 4.0) <= 0.2

    def test_zero_velocity_stays_zero_and_omega_mean_decays(self, grid8):
        x = grid8.mesh()
        om0 = 1.0 + 0.05 * np.cos(x[0])
        b0 = 1.0 + 0.05 * np.sin(x[1])
        bounds = InitialBounds(0.9, 0.9, 1.1)
        cfg = IntegratorConfig(dt_init=2e-3, t_end=0.05, record_every=5)
        traj = simulate(grid8, np.zeros((3,) + grid8.shape), om0, b0, PARAMS, bounds, cfg)
        l2v = [r.l2_v for r in traj.records]
        assert max(l2v) == 0.0
        means = [e.state.omega.coef[0, 0, 0].real for e in traj.entries]
        assert all(a > b for a, b in zip(means, means[1:]))


class TestTermination:
    def test_stop_at_tstar(self, grid8):
        # delta for unit constant data is ~496, making T* ~ 3e-43 for C_est = 1;
        # a tiny C_est lifts T* into the integrable range below t_end
        v0, om0, b0 = constant_data(grid8)
        from kolmo2eq.diagnostics import h2_delta
        delta = h2_delta(grid8, v0, om0, b0)
        c_est = existence_time(delta, UNIT_BOUNDS, 1.0, C_est=1.0) / 0.05  # scale T* toward 0.05
        t_star = existence_time(delta, UNIT_BOUNDS, 1.0, C_est=c_est)
        assert 0.01 < t_star < 0.2
        cfg = IntegratorConfig(dt_init=2e-3, t_end=1.0, record_every=100, stop_at_tstar=True)
        traj = simulate(grid8, v0, om0, b0, PARAMS, UNIT_BOUNDS, cfg, c_est=c_est)
        assert traj.reason == REASON_TSTAR
        assert traj.entries[-1].state.t == pytest.approx(t_star, rel=1e-12)

    def test_blowup_flag_via_ceiling(self, grid8):
        cfg = IntegratorConfig(dt_init=1e-3, t_end=0.1, record_every=10, h2_ceiling=1e-6)
        traj = simulate(grid8, *constant_data(grid8), PARAMS, UNIT_BOUNDS, cfg)
        assert traj.reason == REASON_BLOWUP

    def test_step_underflow(self, grid8):
        # CFL cap ~ 0.5/8 is far below the only permitted step size
        cfg = IntegratorConfig(dt_init=0.5, dt_min=0.5, dt_max=0.5, t_end=1.0)
        traj = simulate(grid8, *constant_data(grid8), PARAMS, UNIT_BOUNDS, cfg)
        assert traj.reason == REASON_UNDERFLOW


class TestAdmissibility:
    def test_b_below_floor_rejected(self, grid8):
        v0, om0, b0 = constant_data(grid8)
        b0 = b0 * 0.5
        with pytest.raises(AdmissibilityError, match="b0 min"):
            simulate(grid8, v0, om0, b0, PARAMS, UNIT_BOUNDS, IntegratorConfig(t_end=0.1))

    def test_omega_outside_band_rejected(self, grid8):
        v0, om0, b0 = constant_data(grid8)
        with pytest.raises(AdmissibilityError, match="omega0 min"):
            simulate(grid8, v0, 0.5 * om0, b0, PARAMS, UNIT_BOUNDS, IntegratorConfig(t_end=0.1))
        with pytest.raises(AdmissibilityError, match="omega0 max"):
            simulate(grid8, v0, 2.0 * om0, b0, PARAMS, UNIT_BOUNDS, IntegratorConfig(t_end=0.1))

    def test_nonfinite_rejected(self, grid8):
        v0, om0, b0 = constant_data(grid8)
        om0[0, 0, 0] = np.inf
        with pytest.raises(AdmissibilityError, match="non-finite"):
            simulate(grid8, v0, om0, b0, PARAMS, UNIT_BOUNDS, IntegratorConfig(t_end=0.1))


class TestDeterminism:
    def test_bit_identical_repeat(self, grid8):
        from kolmo2eq.config import InitialConfig, build_initial
        bounds = InitialBounds(0.9, 0.9, 1.1)
        init = InitialConfig(preset="random-smooth", amplitude=0.05, v_amplitude=0.05, seed=7)
        cfg = IntegratorConfig(dt_init=2e-3, t_end=0.02, record_every=2)
        outs = []
        for _ in range(2):
            v0, om0, b0 = build_initial(init, grid8, bounds)
            traj = simulate(grid8, v0, om0, b0, PARAMS, bounds, cfg)
            outs.append(traj)
        a, b = outs
        assert len(a.entries) == len(b.entries)
        for ea, eb in zip(a.entries, b.entries):
            assert np.array_equal(ea.state.omega.coef, eb.state.omega.coef)
            assert np.array_equal(ea.state.v.coef, eb.state.v.coef)
            assert ea.record == eb.record


class TestRk23:
    def test_matches_constant_solution(self, grid8):
        cfg = IntegratorConfig(method="rk23", dt_init=1e-3, t_end=0.25,
                               record_every=1000, rtol=1e-8, atol=1e-10)
        traj = simulate(grid8, *constant_data(grid8), PARAMS, UNIT_BOUNDS, cfg)
        assert traj.reason == REASON_T_END
        omega_final = traj.entries[-1].state.omega.coef[0, 0, 0].real
        exact = constant_solution(1.0, 1.0, 1.0, 0.25)[0]
        assert omega_final == pytest.approx(exact, abs=1e-6)

    def test_adapts_step_upward(self, grid8):
        cfg = IntegratorConfig(method="rk23", dt_init=1e-4, t_end=0.05,
                               record_every=1, rtol=1e-6, atol=1e-9)
        traj = simulate(grid8, *constant_data(grid8), PARAMS, UNIT_BOUNDS, cfg)
        times = [r.t for r in traj.records]
        steps = np.diff(times)
        assert steps[-1] > 5 * steps[0]
