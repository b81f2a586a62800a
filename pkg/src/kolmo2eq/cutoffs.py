"""Smooth truncation functions built from a compactly supported bump kernel.

Four families keep the eddy viscosity mu = clamp(b)/clamp(omega) positive and
bounded in the truncated system:

* a lower clamp (plateau threshold/2 below half-threshold, identity above the
  threshold) applied to b in the viscosity numerator,
* a two-sided clamp (additionally saturating at twice the upper threshold)
  applied to omega in the denominator,
* two zero ramps (0 below half-threshold, identity above the threshold)
  gating the sink terms of the omega and b equations.

All transitions are C-infinity with flat joins, so values that sit exactly on
a threshold see the identity to machine precision.  Every family is an affine
reparametrization of one of three unit-interval profiles; the profiles are
tabulated once (Hermite interpolation, verified against quadrature refinement
at build time) and derivatives are evaluated from closed-form chain rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .model import InitialBounds, Thresholds, thresholds_at

E_MINUS_4 = math.exp(-4.0)

_TABLE_KNOTS = 4096
_TABLE_ERROR_BUDGET = 1e-10
_C0_SAMPLES = 100_000


def _prep(x):
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr), arr.ndim == 0


def _ret(out, scalar):
    return float(out[0]) if scalar else out


def bump_f(x):
    """exp(-1/x) for x > 0, zero elsewhere; the C-infinity building block."""
    x, scalar = _prep(x)
    out = np.zeros_like(x)
    pos = x > 0.0
    with np.errstate(under="ignore"):
        out[pos] = np.exp(-1.0 / x[pos])
    return _ret(out, scalar)


def _bump_d1(x):
    # f'(x) = f(x)/x^2 on x > 0
    x, scalar = _prep(x)
    out = np.zeros_like(x)
    pos = x > 0.0
    with np.errstate(under="ignore"):
        xp = x[pos]
        out[pos] = np.exp(-1.0 / xp) / xp ** 2
    return _ret(out, scalar)


def _bump_d2(x):
    # f''(x) = f(x) (1 - 2x)/x^4 on x > 0
    x, scalar = _prep(x)
    out = np.zeros_like(x)
    pos = x > 0.0
    with np.errstate(under="ignore"):
        xp = x[pos]
        out[pos] = np.exp(-1.0 / xp) * (1.0 - 2.0 * xp) / xp ** 4
    return _ret(out, scalar)


def _ramp_integrand(y):
    # f(y) f(1-y) = exp(-1/y - 1/(1-y)) on (0,1), zero outside
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = (y > 0.0) & (y < 1.0)
    with np.errstate(under="ignore"):
        yi = y[inside]
        out[inside] = np.exp(-1.0 / yi - 1.0 / (1.0 - yi))
    return out


def _gauss_cumulative(n_intervals, order=8):
    """Knot values of the cumulative integral of the ramp integrand on [0,1]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, n_intervals + 1)
    half = 0.5 / n_intervals
    mids = 0.5 * (edges[:-1] + edges[1:])
    samples = mids[:, None] + half * nodes[None, :]
    pieces = half * (_ramp_integrand(samples) * weights[None, :]).sum(axis=1)
    knots = np.concatenate([[0.0], np.cumsum(pieces)])
    return edges, knots


class BumpKernel:
    """Normalized smooth ramp: 0 below 0, 1 above 1, with known derivatives.

    c_norm is the normalization integral of f(y) f(1-y) over (0,1); the ramp
    value comes from a Hermite table with exact knot derivatives, the
    derivatives themselves from closed forms.
    """

    def __init__(self, n_intervals=_TABLE_KNOTS):
        edges, raw = _gauss_cumulative(n_intervals)
        self.c_norm = float(raw[-1])
        if not (0.0 < self.c_norm <= E_MINUS_4):
            raise RuntimeError(f"ramp normalization out of range: {self.c_norm}")
        values = raw / self.c_norm
        derivs = _ramp_integrand(edges) / self.c_norm
        self._spline = CubicHermiteSpline(edges, values, derivs)
        self._verify(edges, n_intervals)

    def _verify(self, edges, n_intervals):
        # error budget check: interpolated midpoints vs doubled-resolution quadrature
        _, fine = _gauss_cumulative(2 * n_intervals)
        mids = 0.5 * (edges[:-1] + edges[1:])
        exact_mid = fine[1::2] / fine[-1]
        err = np.max(np.abs(self._spline(mids) - exact_mid))
        if err > _TABLE_ERROR_BUDGET:
            raise RuntimeError(f"ramp table error {err:.3e} exceeds budget {_TABLE_ERROR_BUDGET}")

    def ramp(self, x):
        x, scalar = _prep(x)
        out = np.empty_like(x)
        lo = x <= 0.0
        hi = x >= 1.0
        mid = ~(lo | hi)
        out[lo] = 0.0
        out[hi] = 1.0
        # interpolation can wiggle below 0 at denormal scale in the flat tails
        out[mid] = np.clip(self._spline(x[mid]), 0.0, 1.0)
        return _ret(out, scalar)

    def ramp_d1(self, x):
        x, scalar = _prep(x)
        return _ret(_ramp_integrand(x) / self.c_norm, scalar)

    def ramp_d2(self, x):
        x, scalar = _prep(x)
        out = np.zeros_like(x)
        inside = (x > 0.0) & (x < 1.0)
        xi = x[inside]
        with np.errstate(under="ignore"):
            out[inside] = (
                _ramp_integrand(xi)
                * (1.0 / xi ** 2 - 1.0 / (1.0 - xi) ** 2)
                / self.c_norm
            )
        return _ret(out, scalar)


_KERNEL = None


def kernel() -> BumpKernel:
    """Shared kernel instance; built on first use."""
    global _KERNEL
    if _KERNEL is None:
        _KERNEL = BumpKernel()
    return _KERNEL


def eta_tilde(x):
    """The normalized ramp itself (0 below 0, 1 above 1)."""
    return kernel().ramp(x)


# The blend h interpolates between the bump f (near 0) and the identity
# (from 3/4 on) using eta(x) = ramp(2(x - 1/4)).  The identity branch
# g(x) = x is only ever multiplied by eta, which vanishes for x <= 1/4,
# so the product is zero by definition for x <= 0.

def blend_h(x):
    """0 for x <= 0, identity for x >= 3/4, smooth monotone blend between."""
    ker = kernel()
    x, scalar = _prep(x)
    out = np.where(x >= 0.75, x, 0.0)
    mid = (x > 0.0) & (x < 0.75)
    if np.any(mid):
        xm = x[mid]
        eta = ker.ramp(2.0 * (xm - 0.25))
        out[mid] = (1.0 - eta) * bump_f(xm) + eta * xm
    return _ret(out, scalar)


def blend_h_d1(x):
    ker = kernel()
    x, scalar = _prep(x)
    out = np.where(x >= 0.75, 1.0, 0.0)
    mid = (x > 0.0) & (x < 0.75)
    if np.any(mid):
        xm = x[mid]
        z = 2.0 * (xm - 0.25)
        eta = ker.ramp(z)
        d_eta = 2.0 * ker.ramp_d1(z)
        out[mid] = (1.0 - eta) * _bump_d1(xm) + eta + d_eta * (xm - bump_f(xm))
    return _ret(out, scalar)


def blend_h_d2(x):
    ker = kernel()
    x, scalar = _prep(x)
    out = np.zeros_like(x)
    mid = (x > 0.0) & (x < 0.75)
    if np.any(mid):
        xm = x[mid]
        z = 2.0 * (xm - 0.25)
        eta = ker.ramp(z)
        d_eta = 2.0 * ker.ramp_d1(z)
        dd_eta = 4.0 * ker.ramp_d2(z)
        out[mid] = (
            (1.0 - eta) * _bump_d2(xm)
            + dd_eta * (xm - bump_f(xm))
            + 2.0 * d_eta * (1.0 - _bump_d1(xm))
        )
    return _ret(out, scalar)


class _UnitTables:
    """Hermite tables of the transition profiles plus their sampled derivative bounds."""

    def __init__(self):
        ker = kernel()
        # clamp profile: h on [0, 3/4]
        u = np.linspace(0.0, 0.75, _TABLE_KNOTS + 1)
        self.h_spline = CubicHermiteSpline(u, blend_h(u), blend_h_d1(u))
        u_mid = 0.5 * (u[:-1] + u[1:])
        err = np.max(np.abs(self.h_spline(u_mid) - blend_h(u_mid)))
        if err > _TABLE_ERROR_BUDGET:
            raise RuntimeError(f"clamp profile table error {err:.3e} exceeds budget")
        # ramp profile: q(s) = ((1+s)/2) ramp(s) on [0,1], so x*ramp(s(x)) = theta*q(s)
        s = np.linspace(0.0, 1.0, _TABLE_KNOTS + 1)
        q = 0.5 * (1.0 + s) * ker.ramp(s)
        dq = 0.5 * ker.ramp(s) + 0.5 * (1.0 + s) * ker.ramp_d1(s)
        self.q_spline = CubicHermiteSpline(s, q, dq)
        s_mid = 0.5 * (s[:-1] + s[1:])
        q_mid = 0.5 * (1.0 + s_mid) * ker.ramp(s_mid)
        err = np.max(np.abs(self.q_spline(s_mid) - q_mid))
        if err > _TABLE_ERROR_BUDGET:
            raise RuntimeError(f"ramp profile table error {err:.3e} exceeds budget")
        # scale-invariant derivative bounds over dense profile samples
        uu = np.linspace(0.0, 0.75, _C0_SAMPLES)
        self.sup_h_d1 = float(np.max(np.abs(blend_h_d1(uu))))
        self.sup_h_d2 = float(np.max(np.abs(blend_h_d2(uu))))
        ss = np.linspace(0.0, 1.0, _C0_SAMPLES)
        r_d1 = ker.ramp(ss) + (1.0 + ss) * ker.ramp_d1(ss)
        r_d2 = 4.0 * ker.ramp_d1(ss) + 2.0 * (1.0 + ss) * ker.ramp_d2(ss)
        self.sup_ramp_d1 = float(np.max(np.abs(r_d1)))
        self.sup_ramp_d2 = float(np.max(np.abs(r_d2)))


_TABLES = None


def _tables() -> _UnitTables:
    global _TABLES
    if _TABLES is None:
        _TABLES = _UnitTables()
    return _TABLES


class CutoffFamily:
    """Common evaluation interface: value, first/second derivative, c0 bound."""

    kind: str
    scale: float
    c0: float

    def __call__(self, x):
        raise NotImplementedError

    def derivative(self, order, x):
        if order == 1:
            return self._d1(x)
        if order == 2:
            return self._d2(x)
        raise ValueError(f"derivative order must be 1 or 2, got {order!r}")

    def transition_intervals(self):
        raise NotImplementedError


class _LowerClamp(CutoffFamily):
    """threshold/2 below half-threshold, identity at and above the threshold."""

    kind = "lower-clamp"

    def __init__(self, threshold):
        if not (np.isfinite(threshold) and threshold > 0.0):
            raise ValueError(f"clamp threshold must be positive, got {threshold!r}")
        self.scale = float(threshold)
        self.a = 0.5 * self.scale          # plateau value and plateau edge
        self.w = 0.5 * self.scale          # transition width in profile units
        self.ident_edge = self.a + 0.75 * self.w
        t = _tables()
        self.c0 = max(t.sup_h_d1, 2.0 * t.sup_h_d2)

    def __call__(self, x):
        x, scalar = _prep(x)
        out = np.where(x >= self.ident_edge, x, self.a)
        mid = (x > self.a) & (x < self.ident_edge)
        if np.any(mid):
            out[mid] = self.a + self.w * _tables().h_spline((x[mid] - self.a) / self.w)
        return _ret(out, scalar)

    def _d1(self, x):
        x, scalar = _prep(x)
        out = np.where(x >= self.ident_edge, 1.0, 0.0)
        mid = (x > self.a) & (x < self.ident_edge)
        if np.any(mid):
            out[mid] = blend_h_d1((x[mid] - self.a) / self.w)
        return _ret(out, scalar)

    def _d2(self, x):
        x, scalar = _prep(x)
        out = np.zeros_like(x)
        mid = (x > self.a) & (x < self.ident_edge)
        if np.any(mid):
            out[mid] = blend_h_d2((x[mid] - self.a) / self.w) / self.w
        return _ret(out, scalar)

    def transition_intervals(self):
        return [(self.a, self.ident_edge)]


class _BandClamp(CutoffFamily):
    """Lower clamp at lo plus saturation at 2*hi; identity on [lo, hi]."""

    kind = "band-clamp"

    def __init__(self, lo, hi):
        if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 < lo <= hi):
            raise ValueError(f"band thresholds must satisfy 0 < lo <= hi, got ({lo!r}, {hi!r})")
        self.scale = float(lo)
        self.lo = float(lo)
        self.hi = float(hi)
        self.a = 0.5 * self.lo
        self.w = 0.5 * self.lo
        self.low_edge = self.a + 0.75 * self.w      # identity from here up
        self.A = self.hi                            # upper transition anchors
        self.B = 2.0 * self.hi
        self.up_edge = self.A + 0.25 * (self.B - self.A)   # identity until here
        t = _tables()
        self.c0 = max(t.sup_h_d1, 2.0 * t.sup_h_d2)

    def __call__(self, x):
        x, scalar = _prep(x)
        out = np.where(x >= self.B, self.B, np.where(x <= self.a, self.a, x))
        width = self.B - self.A
        low = (x > self.a) & (x < self.low_edge)
        up = (x > self.up_edge) & (x < self.B)
        if np.any(low):
            out[low] = self.a + self.w * _tables().h_spline((x[low] - self.a) / self.w)
        if np.any(up):
            out[up] = self.B - width * _tables().h_spline((self.B - x[up]) / width)
        return _ret(out, scalar)

    def _d1(self, x):
        x, scalar = _prep(x)
        out = np.where((x >= self.low_edge) & (x <= self.up_edge), 1.0, 0.0)
        low = (x > self.a) & (x < self.low_edge)
        up = (x > self.up_edge) & (x < self.B)
        if np.any(low):
            out[low] = blend_h_d1((x[low] - self.a) / self.w)
        if np.any(up):
            out[up] = blend_h_d1((self.B - x[up]) / (self.B - self.A))
        return _ret(out, scalar)

    def _d2(self, x):
        x, scalar = _prep(x)
        out = np.zeros_like(x)
        width = self.B - self.A
        low = (x > self.a) & (x < self.low_edge)
        up = (x > self.up_edge) & (x < self.B)
        if np.any(low):
            out[low] = blend_h_d2((x[low] - self.a) / self.w) / self.w
        if np.any(up):
            out[up] = -blend_h_d2((self.B - x[up]) / width) / width
        return _ret(out, scalar)

    def transition_intervals(self):
        return [(self.a, self.low_edge), (self.up_edge, self.B)]


class _ZeroRamp(CutoffFamily):
    """0 below half-threshold, identity at and above the threshold, <= x in between."""

    kind = "zero-ramp"

    def __init__(self, threshold):
        if not (np.isfinite(threshold) and threshold > 0.0):
            raise ValueError(f"ramp threshold must be positive, got {threshold!r}")
        self.scale = float(threshold)
        self.half = 0.5 * self.scale
        t = _tables()
        self.c0 = max(t.sup_ramp_d1, t.sup_ramp_d2)

    def _s(self, x):
        return (2.0 * x - self.scale) / self.scale

    def __call__(self, x):
        x, scalar = _prep(x)
        out = np.where(x >= self.scale, x, 0.0)
        mid = (x > self.half) & (x < self.scale)
        if np.any(mid):
            out[mid] = self.scale * _tables().q_spline(self._s(x[mid]))
        return _ret(out, scalar)

    def _d1(self, x):
        ker = kernel()
        x, scalar = _prep(x)
        out = np.where(x >= self.scale, 1.0, 0.0)
        mid = (x > self.half) & (x < self.scale)
        if np.any(mid):
            s = self._s(x[mid])
            out[mid] = ker.ramp(s) + (2.0 * x[mid] / self.scale) * ker.ramp_d1(s)
        return _ret(out, scalar)

    def _d2(self, x):
        ker = kernel()
        x, scalar = _prep(x)
        out = np.zeros_like(x)
        mid = (x > self.half) & (x < self.scale)
        if np.any(mid):
            s = self._s(x[mid])
            out[mid] = (4.0 / self.scale) * ker.ramp_d1(s) \
                + (4.0 * x[mid] / self.scale ** 2) * ker.ramp_d2(s)
        return _ret(out, scalar)

    def transition_intervals(self):
        return [(self.half, self.scale)]


def make_psi_upper(b_star) -> CutoffFamily:
    """Viscosity-numerator clamp: b_star/2 below b_star/2, identity above b_star."""
    return _LowerClamp(b_star)


def make_phi_twosided(omega_star, omega_dstar) -> CutoffFamily:
    """Viscosity-denominator clamp: identity on [omega_star, omega_dstar], saturating at 2*omega_dstar."""
    return _BandClamp(omega_star, omega_dstar)


def make_psi_lower(b_star) -> CutoffFamily:
    """Sink gate for b: 0 below b_star/2, identity above b_star."""
    return _ZeroRamp(b_star)


def make_phi_lower(omega_star) -> CutoffFamily:
    """Sink gate for omega: 0 below omega_star/2, identity above omega_star."""
    return _ZeroRamp(omega_star)


def derivative(family: CutoffFamily, order: int, x):
    return family.derivative(order, x)


def estimate_c0(family: CutoffFamily, n_samples: int = _C0_SAMPLES) -> float:
    """Dense-sample sup of |first derivative| and scale*|second derivative|."""
    intervals = family.transition_intervals()
    per = max(2, n_samples // len(intervals))
    best = 0.0
    for lo, hi in intervals:
        x = np.linspace(lo, hi, per)
        best = max(best,
                   float(np.max(np.abs(family.derivative(1, x)))),
                   float(family.scale * np.max(np.abs(family.derivative(2, x)))))
    return best


@dataclass(frozen=True)
class CutoffSet:
    """The four families anchored to one thresholds snapshot."""

    thresholds: Thresholds
    visc_b: CutoffFamily       # numerator clamp applied to b
    visc_omega: CutoffFamily   # denominator clamp applied to omega
    sink_b: CutoffFamily       # zero ramp gating the b sink
    sink_omega: CutoffFamily   # zero ramp gating the omega sink


def build_cutoffs(thresholds: Thresholds) -> CutoffSet:
    return CutoffSet(
        thresholds=thresholds,
        visc_b=make_psi_upper(thresholds.b_star),
        visc_omega=make_phi_twosided(thresholds.omega_star, thresholds.omega_dstar),
        sink_b=make_psi_lower(thresholds.b_star),
        sink_omega=make_phi_lower(thresholds.omega_star),
    )


class CutoffProvider:
    """Serves cutoff sets, rebuilding only when thresholds drift beyond a tolerance.

    Between rebuilds the stored thresholds are used consistently everywhere;
    the flat transition joins keep sub-tolerance staleness invisible at the
    1e-12 level for tolerances up to ~1e-2.
    """

    def __init__(self, bounds: InitialBounds, kappa2: float, drift_tol: float = 1e-3):
        if drift_tol < 0.0:
            raise ValueError("drift_tol must be nonnegative")
        self.bounds = bounds
        self.kappa2 = kappa2
        self.drift_tol = drift_tol
        self._current: CutoffSet | None = None

    def at(self, t: float) -> CutoffSet:
        fresh = thresholds_at(self.bounds, self.kappa2, t)
        cur = self._current
        if cur is not None and self.drift_tol > 0.0:
            built = cur.thresholds
            drift = max(
                abs(fresh.b_star / built.b_star - 1.0),
                abs(fresh.omega_star / built.omega_star - 1.0),
                abs(fresh.omega_dstar / built.omega_dstar - 1.0),
            )
            if drift <= self.drift_tol:
                return cur
        self._current = build_cutoffs(fresh)
        return self._current
