"""Explicit time stepping for the truncated coefficient system.

Fixed-step classical RK4 is the default; an embedded 3(2) adaptive pair is
available for rough runs.  A diffusion CFL cap dt <= c / (max mu * k_max^2)
is applied automatically each step from the viscosity maximum of the step's
first stage.  Stages evaluate the cutoff families at their own stage time
through the drift-tolerance provider, so the non-autonomous barrier motion is
resolved to the provider tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cutoffs import CutoffProvider
from .diagnostics import DiagnosticsRecord, h2_delta, record
from .model import InitialBounds, ModelParams, existence_time
from .rhs import RhsBundle, State, project_initial_data, rhs_all
from .spectral import ScalarField, SpectralGrid, VelocityField

REASON_T_END = "reached_t_end"
REASON_TSTAR = "reached_tstar"
REASON_BLOWUP = "blowup_detected"
REASON_UNDERFLOW = "step_underflow"

ADMISSIBILITY_ATOL = 1e-12


class AdmissibilityError(ValueError):
    """Initial data violates the pointwise bounds or contains non-finite values."""


@dataclass
class IntegratorConfig:
    method: str = "rk4"
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1.0
    safety: float = 0.9
    t_end: float = 1.0
    record_every: int = 10
    stop_at_tstar: bool = False
    cfl: float = 0.5
    rtol: float = 1e-6
    atol: float = 1e-9
    h2_ceiling: float = 1e12

    def __post_init__(self):
        if self.method not in ("rk4", "rk23"):
            raise ValueError(f"method must be 'rk4' or 'rk23', got {self.method!r}")
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError(
                f"need 0 < dt_min <= dt_init <= dt_max, got ({self.dt_min}, {self.dt_init}, {self.dt_max})"
            )
        if self.t_end <= 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not (0.0 < self.safety <= 1.0):
            raise ValueError("safety must lie in (0, 1]")
        if self.cfl <= 0.0:
            raise ValueError("cfl must be positive")


@dataclass
class TrajectoryEntry:
    state: State
    record: DiagnosticsRecord


@dataclass
class Trajectory:
    entries: list[TrajectoryEntry] = field(default_factory=list)
    reason: str = REASON_T_END
    t_star: float = math.inf
    delta: float = 0.0

    @property
    def records(self):
        return [e.record for e in self.entries]

    @property
    def states(self):
        return [e.state for e in self.entries]


def _combine(grid: SpectralGrid, state: State, t_new, pieces) -> State:
    """state + sum(scale * bundle) as a new State at time t_new."""
    dv = state.v.coef.copy()
    dom = state.omega.coef.copy()
    db = state.b.coef.copy()
    for scale, bundle in pieces:
        dv += scale * bundle.dv
        dom += scale * bundle.domega
        db += scale * bundle.db
    return State(VelocityField(grid, dv), ScalarField(grid, dom), ScalarField(grid, db), t_new)


class BlowupDetected(RuntimeError):
    pass


def _check_finite(state: State):
    for arr in (state.v.coef, state.omega.coef, state.b.coef):
        if not np.all(np.isfinite(arr)):
            raise BlowupDetected


def step(state: State, dt: float, rhs_eval, k1: RhsBundle | None = None) -> State:
    """One classical RK4 step; raises BlowupDetected on non-finite results."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    g = state.grid
    t = state.t
    if k1 is None:
        k1 = rhs_eval(state)
    k2 = rhs_eval(_combine(g, state, t + 0.5 * dt, [(0.5 * dt, k1)]))
    k3 = rhs_eval(_combine(g, state, t + 0.5 * dt, [(0.5 * dt, k2)]))
    k4 = rhs_eval(_combine(g, state, t + dt, [(dt, k3)]))
    out = _combine(g, state, t + dt, [
        (dt / 6.0, k1), (dt / 3.0, k2), (dt / 3.0, k3), (dt / 6.0, k4),
    ])
    _check_finite(out)
    return out


def _rk23_step(state: State, dt: float, rhs_eval, k1: RhsBundle):
    """Bogacki-Shampine 3(2) step; returns (candidate state, error arrays)."""
    g = state.grid
    t = state.t
    k2 = rhs_eval(_combine(g, state, t + 0.5 * dt, [(0.5 * dt, k1)]))
    k3 = rhs_eval(_combine(g, state, t + 0.75 * dt, [(0.75 * dt, k2)]))
    out = _combine(g, state, t + dt, [
        (2.0 * dt / 9.0, k1), (dt / 3.0, k2), (4.0 * dt / 9.0, k3),
    ])
    k4 = rhs_eval(out)
    coeffs = ((-5.0 / 72.0, k1), (1.0 / 12.0, k2), (1.0 / 9.0, k3), (-1.0 / 8.0, k4))
    err_v = dt * sum(c * k.dv for c, k in coeffs)
    err_om = dt * sum(c * k.domega for c, k in coeffs)
    err_b = dt * sum(c * k.db for c, k in coeffs)
    return out, (err_v, err_om, err_b)


def _error_norm(state: State, out: State, errs, rtol, atol) -> float:
    total = 0.0
    count = 0
    for err, a, b in zip(errs,
                         (state.v.coef, state.omega.coef, state.b.coef),
                         (out.v.coef, out.omega.coef, out.b.coef)):
        scale = atol + rtol * np.maximum(np.abs(a), np.abs(b))
        total += float(np.sum((np.abs(err) / scale) ** 2))
        count += err.size
    return math.sqrt(total / count)


def _h2_sq(state: State) -> float:
    g = state.grid
    return (g.hk_norm(state.v.coef, 2) ** 2
            + g.hk_norm(state.omega.coef, 2) ** 2
            + g.hk_norm(state.b.coef, 2) ** 2)


def check_admissible(bounds: InitialBounds, omega0, b0):
    """Pointwise admissibility of gridded initial data, checked on the sample grid."""
    omega0 = np.asarray(omega0, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    if not (np.all(np.isfinite(omega0)) and np.all(np.isfinite(b0))):
        raise AdmissibilityError("initial data contains non-finite values")
    atol = ADMISSIBILITY_ATOL
    if b0.min() < bounds.b_min - atol * max(1.0, bounds.b_min):
        raise AdmissibilityError(
            f"b0 min {b0.min():.6g} falls below b_min {bounds.b_min:.6g}")
    if omega0.min() < bounds.omega_min - atol * max(1.0, bounds.omega_min):
        raise AdmissibilityError(
            f"omega0 min {omega0.min():.6g} falls below omega_min {bounds.omega_min:.6g}")
    if omega0.max() > bounds.omega_max + atol * max(1.0, bounds.omega_max):
        raise AdmissibilityError(
            f"omega0 max {omega0.max():.6g} exceeds omega_max {bounds.omega_max:.6g}")


def simulate(grid: SpectralGrid, v0, omega0, b0, params: ModelParams,
             bounds: InitialBounds, config: IntegratorConfig,
             c_est: float = 1.0, drift_tol: float = 1e-3) -> Trajectory:
    """Integrate projected initial data, recording diagnostics along the way.

    Initial fields are gridded physical values on the collocation grid;
    admissibility (b0 >= b_min, omega_min <= omega0 <= omega_max pointwise) is
    checked before projection and violations are rejected.
    """
    check_admissible(bounds, omega0, b0)
    state = project_initial_data(grid, v0, omega0, b0)
    provider = CutoffProvider(bounds, params.kappa2, drift_tol=drift_tol)

    def rhs_eval(s: State) -> RhsBundle:
        return rhs_all(s, params, provider.at(s.t))

    delta = h2_delta(grid, v0, omega0, b0)
    t_star = existence_time(delta, bounds, params.kappa2, C_est=c_est)
    t_stop = min(config.t_end, t_star) if config.stop_at_tstar else config.t_end

    traj = Trajectory(t_star=t_star, delta=delta)

    def push(s: State, bundle: RhsBundle | None):
        rec = record(s, params, bounds, cutoffs=provider.at(s.t), bundle=bundle)
        traj.entries.append(TrajectoryEntry(s.copy(), rec))

    k1 = rhs_eval(state)
    push(state, k1)
    dt = min(config.dt_init, config.dt_max)
    steps = 0
    while state.t < t_stop * (1.0 - 1e-14):
        cap = config.cfl / (max(k1.mu_max, 1e-300) * grid.k_sq_max)
        dt_step = min(dt, cap, config.dt_max, t_stop - state.t)
        if dt_step < config.dt_min:
            traj.reason = REASON_UNDERFLOW
            return traj
        try:
            if config.method == "rk4":
                new_state = step(state, dt_step, rhs_eval, k1=k1)
            else:
                new_state, errs = _rk23_step(state, dt_step, rhs_eval, k1)
                _check_finite(new_state)
                enorm = _error_norm(state, new_state, errs, config.rtol, config.atol)
                factor = config.safety * (enorm ** (-1.0 / 3.0)) if enorm > 0.0 else 5.0
                dt = dt_step * min(5.0, max(0.2, factor))
                if enorm > 1.0:
                    continue  # reject, retry with the shrunk dt
        except BlowupDetected:
            traj.reason = REASON_BLOWUP
            return traj
        state = new_state
        steps += 1
        k1 = rhs_eval(state)
        if _h2_sq(state) > config.h2_ceiling:
            push(state, k1)
            traj.reason = REASON_BLOWUP
            return traj
        if steps % config.record_every == 0 or state.t >= t_stop * (1.0 - 1e-14):
            push(state, k1)
    if not traj.entries or traj.entries[-1].state.t < state.t:
        push(state, k1)
    traj.reason = REASON_TSTAR if (config.stop_at_tstar and t_stop == t_star
                                   and t_stop <= config.t_end) else REASON_T_END
    return traj
