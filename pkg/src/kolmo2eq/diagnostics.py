"""Per-step records and post-hoc verification of the monitored estimates.

Every check is a pure function of recorded data, so re-running a report on a
saved trajectory reproduces it bit for bit.  Pointwise extrema and cutoff
activity are measured on the oversampled quadrature grid; the true extrema of
a band-limited field can differ slightly, which the resolution-dependent
slack of the maximum-principle check absorbs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .cutoffs import CutoffSet, build_cutoffs
from .model import InitialBounds, ModelParams, thresholds_at
from .rhs import RhsBundle, State, d_squared, rhs_all
from .spectral import SpectralGrid

ACTIVITY_TOL = 1e-12
MU_FLOOR_SLACK = 1e-12
ENERGY_REL_SLACK = 1e-8


@dataclass
class DiagnosticsRecord:
    t: float
    l2_v: float
    l2_omega: float
    l2_b: float
    h1_v: float
    h1_omega: float
    h1_b: float
    h2_v: float
    h2_omega: float
    h2_b: float
    min_omega: float
    max_omega: float
    min_b: float
    max_b: float
    mu_min: float
    mu_max: float
    diss_v: float
    diss_omega: float
    diss_b: float
    act_sink_omega: float
    act_sink_b: float
    act_visc_b: float
    act_visc_omega: float
    res_energy_v: float
    res_energy_omega: float
    res_energy_b: float
    b_star: float
    omega_star: float
    omega_dstar: float
    mu_star: float


RECORD_COLUMNS = tuple(f.name for f in dc_fields(DiagnosticsRecord))


def _activity_fraction(mapped, raw):
    tol = ACTIVITY_TOL * (1.0 + np.abs(raw))
    return float(np.count_nonzero(np.abs(mapped - raw) > tol)) / raw.size


def _inner(grid: SpectralGrid, a, b):
    # L^2 inner product from spectral coefficients
    return grid.volume * float(np.real(np.sum(a * np.conj(b))))


def record(state: State, params: ModelParams, bounds: InitialBounds,
           cutoffs: CutoffSet | None = None,
           bundle: RhsBundle | None = None) -> DiagnosticsRecord:
    """Populate one diagnostics row from a state snapshot.

    cutoffs defaults to a set built at the exact record time; pass the set the
    integrator actually used to monitor the dynamics as computed.  bundle
    likewise defaults to a fresh right-hand-side evaluation.
    """
    g = state.grid
    th = thresholds_at(bounds, params.kappa2, state.t)
    if cutoffs is None:
        cutoffs = build_cutoffs(th)
    if bundle is None:
        bundle = rhs_all(state, params, cutoffs)

    om_phys = g.to_physical_quad(state.omega.coef)
    b_phys = g.to_physical_quad(state.b.coef)

    # instantaneous residuals of the three decay estimates (negative when satisfied)
    grad_v_sq = g.volume * float(np.sum(g.k_sq * np.abs(state.v.coef) ** 2))
    d_v_sq = 0.5 * grad_v_sq
    grad_om_sq = g.volume * float(np.sum(g.k_sq * np.abs(state.omega.coef) ** 2))
    grad_b_sq = g.volume * float(np.sum(g.k_sq * np.abs(state.b.coef) ** 2))
    res_v = 2.0 * _inner(g, bundle.dv, state.v.coef) + 2.0 * th.mu_star * d_v_sq
    res_om = 2.0 * _inner(g, bundle.domega, state.omega.coef) + 2.0 * th.mu_star * grad_om_sq
    max_abs_b = float(np.max(np.abs(b_phys)))
    res_b = (2.0 * _inner(g, bundle.db, state.b.coef) + 2.0 * th.mu_star * grad_b_sq
             - 2.0 * max_abs_b * bundle.mu_max * grad_v_sq)

    return DiagnosticsRecord(
        t=state.t,
        l2_v=g.l2_norm(state.v.coef),
        l2_omega=g.l2_norm(state.omega.coef),
        l2_b=g.l2_norm(state.b.coef),
        h1_v=g.hk_norm(state.v.coef, 1),
        h1_omega=g.hk_norm(state.omega.coef, 1),
        h1_b=g.hk_norm(state.b.coef, 1),
        h2_v=g.hk_norm(state.v.coef, 2),
        h2_omega=g.hk_norm(state.omega.coef, 2),
        h2_b=g.hk_norm(state.b.coef, 2),
        min_omega=float(om_phys.min()),
        max_omega=float(om_phys.max()),
        min_b=float(b_phys.min()),
        max_b=float(b_phys.max()),
        mu_min=bundle.mu_min,
        mu_max=bundle.mu_max,
        diss_v=bundle.diss_v,
        diss_omega=bundle.diss_omega,
        diss_b=bundle.diss_b,
        act_sink_omega=_activity_fraction(cutoffs.sink_omega(om_phys), om_phys),
        act_sink_b=_activity_fraction(cutoffs.sink_b(b_phys), b_phys),
        act_visc_b=_activity_fraction(cutoffs.visc_b(b_phys), b_phys),
        act_visc_omega=_activity_fraction(cutoffs.visc_omega(om_phys), om_phys),
        res_energy_v=res_v,
        res_energy_omega=res_om,
        res_energy_b=res_b,
        b_star=th.b_star,
        omega_star=th.omega_star,
        omega_dstar=th.omega_dstar,
        mu_star=th.mu_star,
    )


def h2_delta(grid: SpectralGrid, v0, omega0, b0) -> float:
    """Summed squared H^2 norm of gridded initial data (full spectrum, no truncation)."""
    v_coef = grid.to_spectral(np.asarray(v0, dtype=float))
    om_coef = grid.to_spectral(np.asarray(omega0, dtype=float))
    b_coef = grid.to_spectral(np.asarray(b0, dtype=float))
    return (grid.hk_norm(v_coef, 2) ** 2
            + grid.hk_norm(om_coef, 2) ** 2
            + grid.hk_norm(b_coef, 2) ** 2)


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_violation: float
    details: list

    def to_json(self):
        return {
            "check": self.name,
            "passed": self.passed,
            "max_violation": self.max_violation,
            "details": list(self.details),
        }

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} (max violation {self.max_violation:.3e})"


def _pairs(records):
    return zip(records[:-1], records[1:])


def check_energy_monotonicity(records, rel_slack: float = ENERGY_REL_SLACK) -> CheckReport:
    """Velocity and omega L^2 decay, plus the dissipation-weighted discrete form."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    worst = 0.0
    details = []
    for a, b in _pairs(records):
        dt = b.t - a.t
        for label, na, nb in (("|v|_2", a.l2_v, b.l2_v), ("|omega|_2", a.l2_omega, b.l2_omega)):
            tol = rel_slack * (1.0 + na)
            excess = nb - na - tol
            worst = max(worst, excess)
            if excess > 0.0:
                details.append(f"{label} rose by {nb - na:.3e} over [{a.t:.6g}, {b.t:.6g}]")
        # discrete dissipation inequalities on the pair, Korn equality for |D(v)|^2
        dsq = lambda r: 0.5 * (r.h1_v ** 2 - r.l2_v ** 2)
        gosq = lambda r: r.h1_omega ** 2 - r.l2_omega ** 2
        lhs_v = (b.l2_v ** 2 - a.l2_v ** 2) + dt * (a.mu_star * dsq(a) + b.mu_star * dsq(b))
        lhs_o = (b.l2_omega ** 2 - a.l2_omega ** 2) + dt * (a.mu_star * gosq(a) + b.mu_star * gosq(b))
        for label, lhs, scale in (("v dissipation", lhs_v, a.l2_v), ("omega dissipation", lhs_o, a.l2_omega)):
            tol = rel_slack * (1.0 + scale ** 2)
            excess = lhs - tol
            worst = max(worst, excess)
            if excess > 0.0:
                details.append(f"{label} budget violated by {lhs:.3e} over [{a.t:.6g}, {b.t:.6g}]")
    return CheckReport("energy-monotonicity", not details, max(worst, 0.0), details)


def check_b_growth(records, rel_slack: float = ENERGY_REL_SLACK) -> CheckReport:
    """Discrete growth budget for b: dissipation bounded by the velocity-gradient source."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    worst = 0.0
    details = []
    for a, b in _pairs(records):
        dt = b.t - a.t
        gbsq = lambda r: r.h1_b ** 2 - r.l2_b ** 2
        gvsq = lambda r: r.h1_v ** 2 - r.l2_v ** 2
        max_b_inf = max(abs(a.max_b), abs(a.min_b), abs(b.max_b), abs(b.min_b))
        max_mu_inf = max(a.mu_max, b.mu_max)
        lhs = (b.l2_b ** 2 - a.l2_b ** 2) + dt * (a.mu_star * gbsq(a) + b.mu_star * gbsq(b))
        rhs = dt * max_b_inf * max_mu_inf * (gvsq(a) + gvsq(b))
        tol = rel_slack * (1.0 + a.l2_b ** 2)
        excess = lhs - rhs - tol
        worst = max(worst, excess)
        if excess > 0.0:
            details.append(f"b budget violated by {lhs - rhs:.3e} over [{a.t:.6g}, {b.t:.6g}]")
    return CheckReport("b-growth-budget", not details, max(worst, 0.0), details)


def check_max_principles(records, eps: float = 1e-3) -> CheckReport:
    """Grid extrema against the time-decayed barriers, with resolution slack eps."""
    worst = {"omega-low": 0.0, "omega-high": 0.0, "b-low": 0.0}
    for r in records:
        worst["omega-low"] = max(worst["omega-low"], r.omega_star - r.min_omega)
        worst["omega-high"] = max(worst["omega-high"], r.max_omega - r.omega_dstar)
        worst["b-low"] = max(worst["b-low"], r.b_star - r.min_b)
    max_violation = max(max(v, 0.0) for v in worst.values())
    details = [f"{k}: worst signed violation {v:.3e}" for k, v in worst.items()]
    return CheckReport("max-principles", max_violation <= eps, max_violation, details)


def max_principle_violation(records) -> float:
    """Largest positive barrier violation over a trajectory (0 if none)."""
    return check_max_principles(records).max_violation


def check_truncation_inactive(records) -> CheckReport:
    """All four cutoff-activity fractions must vanish on every record."""
    worst = 0.0
    for r in records:
        worst = max(worst, r.act_sink_omega, r.act_sink_b, r.act_visc_b, r.act_visc_omega)
    details = [f"max activity fraction {worst:.3e}"]
    return CheckReport("truncation-inactive", worst == 0.0, worst, details)


def check_mu_floor(records, slack: float = MU_FLOOR_SLACK) -> CheckReport:
    """Recorded pointwise viscosity minimum must stay above mu_star - slack."""
    worst = 0.0
    details = []
    for r in records:
        gap = (r.mu_star - slack) - r.mu_min
        worst = max(worst, gap)
        if gap > 0.0:
            details.append(f"t={r.t:.6g}: mu_min {r.mu_min:.6e} below floor {r.mu_star:.6e}")
    return CheckReport("mu-floor", worst <= 0.0, max(worst, 0.0), details)


def verify_records(records, eps: float = 1e-3):
    """The full report list the verify command evaluates."""
    return [
        check_energy_monotonicity(records),
        check_b_growth(records),
        check_max_principles(records, eps=eps),
        check_truncation_inactive(records),
        check_mu_floor(records),
    ]


def reports_to_json(reports) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2)
