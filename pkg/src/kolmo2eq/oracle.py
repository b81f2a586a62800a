"""Brute-force references used to validate the fast paths.

The Galerkin right-hand side is recomputed here as literal quadrature sums of
the weak-form inner products: fields are evaluated on a tensor trapezoid grid
through explicit per-axis phase matrices (a direct DFT by matrix product, no
FFT), test-function gradients are applied analytically, and velocity moments
are projected onto the divergence-free directions at the coefficient level.
Trapezoid quadrature on a periodic box is exact for trigonometric integrands
below the grid's Nyquist limit, so with the default margin the oracle's own
error is negligible against the comparison tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .cutoffs import CutoffSet
from .model import ModelParams
from .rhs import RhsBundle, State, d_squared
from .spectral import SpectralGrid

BASIS_GUARD = 200


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor trapezoid rule resolution for the brute-force inner products."""

    points_per_axis: int = 64

    def validate(self, grid: SpectralGrid):
        max_mode = max(int(np.max(np.abs(m))) for m in grid.mode_numbers)
        need = 3 * max_mode + 1  # alias-free quadratic products plus margin
        if self.points_per_axis < need:
            raise ValueError(
                f"{self.points_per_axis} points per axis too few for modes up to {max_mode};"
                f" need at least {need}"
            )


def _basis_count(grid: SpectralGrid) -> int:
    n_vel = int(np.count_nonzero(grid.velocity_mask))
    n_scal = int(np.count_nonzero(grid.retained_mask))
    return 2 * n_vel + 2 * n_scal


def _phase_matrices(grid: SpectralGrid, points: int):
    """Per-axis forward phases exp(+i k x) used to evaluate trig polynomials."""
    mats = []
    for n, L, modes in zip(grid.shape, grid.lengths, grid.mode_numbers):
        x = np.arange(points) * (L / points)
        k = 2.0 * math.pi * modes / L
        mats.append(np.exp(1j * np.outer(k, x)))
    return mats


def _eval_grid(coef, mats):
    """Values of sum_k c_k e^{ik.x} on the tensor grid (real part)."""
    out = np.tensordot(coef, mats[0], axes=([-3], [0]))
    out = np.tensordot(out, mats[1], axes=([-3], [0]))
    out = np.tensordot(out, mats[2], axes=([-3], [0]))
    return out.real


def _moments(values, mats, points: int):
    """Quadrature approximation of the spectral coefficients of gridded values."""
    conj = [m.conj() for m in mats]
    out = np.tensordot(values, conj[0], axes=([-3], [1]))
    out = np.tensordot(out, conj[1], axes=([-3], [1]))
    out = np.tensordot(out, conj[2], axes=([-3], [1]))
    return out / points ** 3


def rhs_bruteforce(state: State, params: ModelParams, cutoffs: CutoffSet,
                   spec: QuadratureSpec = QuadratureSpec()) -> RhsBundle:
    """Reference right-hand side from literal weak-form inner products."""
    g = state.grid
    count = _basis_count(g)
    if count > BASIS_GUARD:
        raise ValueError(f"{count} basis functions exceed the brute-force guard {BASIS_GUARD}")
    spec.validate(g)
    mats = _phase_matrices(g, spec.points_per_axis)
    p = spec.points_per_axis

    v = _eval_grid(state.v.coef, mats)
    om = _eval_grid(state.omega.coef, mats)
    b = _eval_grid(state.b.coef, mats)
    grad_om = _eval_grid(g.gradient(state.omega.coef), mats)
    grad_b = _eval_grid(g.gradient(state.b.coef), mats)
    sym = _eval_grid(g.sym_gradient(state.v.coef), mats)
    mu = cutoffs.visc_b(b) / cutoffs.visc_omega(om)
    gate_om = cutoffs.sink_omega(om)
    gate_b = cutoffs.sink_b(b)

    k = g.k
    pairs = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
    adv = np.stack([v[i] * v[j] for i, j in pairs])
    stress = mu * sym
    adv_m = _moments(adv, mats, p)
    stress_m = _moments(stress, mats, p)

    def sym_dot_k(t6):
        return np.stack([
            k[0] * t6[0] + k[1] * t6[3] + k[2] * t6[4],
            k[0] * t6[3] + k[1] * t6[1] + k[2] * t6[5],
            k[0] * t6[4] + k[1] * t6[5] + k[2] * t6[2],
        ])

    dv = -1j * sym_dot_k(adv_m) + 1j * params.nu0 * sym_dot_k(stress_m)
    dv = g.truncate(g.leray_project(dv), g.velocity_mask)

    def k_dot(m3):
        return k[0] * m3[0] + k[1] * m3[1] + k[2] * m3[2]

    domega = (
        -1j * k_dot(_moments(om * v, mats, p))
        + 1j * params.kappa1 * k_dot(_moments(mu * grad_om, mats, p))
        - params.kappa2 * _moments(gate_om ** 2, mats, p)
    )
    domega = g.truncate(domega)

    dsq = d_squared(sym)
    db = (
        -1j * k_dot(_moments(b * v, mats, p))
        + 1j * params.kappa3 * k_dot(_moments(mu * grad_b, mats, p))
        - _moments(gate_b * gate_om, mats, p)
        + params.kappa4 * _moments(mu * dsq, mats, p)
    )
    db = g.truncate(db)

    cell = g.volume / p ** 3
    return RhsBundle(
        dv=dv, domega=domega, db=db,
        mu_min=float(mu.min()), mu_max=float(mu.max()),
        diss_v=float(np.sum(mu * dsq)) * cell,
        diss_omega=float(np.sum(mu * (grad_om[0] ** 2 + grad_om[1] ** 2 + grad_om[2] ** 2))) * cell,
        diss_b=float(np.sum(mu * (grad_b[0] ** 2 + grad_b[1] ** 2 + grad_b[2] ** 2))) * cell,
    )


def constant_solution(b_bar: float, omega_bar: float, kappa2: float, t):
    """Spatially constant exact solution: d(omega)/dt = -kappa2 omega^2, db/dt = -b omega."""
    if b_bar <= 0.0 or omega_bar <= 0.0:
        raise ValueError("constant solution needs positive initial values")
    t = np.asarray(t, dtype=float)
    growth = 1.0 + kappa2 * omega_bar * t
    omega_t = omega_bar / growth
    b_t = b_bar * growth ** (-1.0 / kappa2)
    if t.ndim == 0:
        return float(omega_t), float(b_t)
    return omega_t, b_t


def eta_norm_quadrature(tolerance: float = 1e-14) -> float:
    """Adaptive quadrature of the bump normalization integral on (0,1)."""
    val, err = quad(lambda y: math.exp(-1.0 / y - 1.0 / (1.0 - y)) if 0.0 < y < 1.0 else 0.0,
                    0.0, 1.0, epsabs=tolerance, epsrel=1e-13, limit=200, points=[0.5])
    if err > 100 * tolerance:
        raise RuntimeError(f"quadrature error estimate {err:.3e} above tolerance")
    return val


# --- fast-path comparison suite ---------------------------------------------

def random_admissible_state(grid: SpectralGrid, bounds, rng,
                            amplitude: float = 0.1, v_amplitude: float = 0.2) -> State:
    """Random retained-shell state with pointwise-admissible omega and b."""
    from .rhs import project_initial_data

    def random_scalar(base, lo, hi):
        coef = np.zeros(grid.shape, dtype=complex)
        mask = grid.retained_mask & (grid.k_sq > 0)
        n = int(np.count_nonzero(mask))
        coef[mask] = rng.normal(size=n) + 1j * rng.normal(size=n)
        coef = grid.hermitian_symmetrize(coef)
        vals = grid.to_physical(coef)
        sup = float(np.max(np.abs(vals))) or 1.0
        room = min(base - lo, hi - base) if hi < math.inf else base - lo
        vals *= min(amplitude, 0.9 * room) / sup
        return base + vals

    omega_base = 0.5 * (bounds.omega_min + bounds.omega_max)
    omega0 = random_scalar(omega_base, bounds.omega_min, bounds.omega_max)
    b0 = random_scalar(bounds.b_min + 2.0 * amplitude, bounds.b_min, math.inf)
    v_coef = np.zeros((3,) + grid.shape, dtype=complex)
    mask = grid.velocity_mask
    n = int(np.count_nonzero(mask))
    for i in range(3):
        comp = np.zeros(grid.shape, dtype=complex)
        comp[mask] = rng.normal(size=n) + 1j * rng.normal(size=n)
        v_coef[i] = comp
    v_coef = grid.hermitian_symmetrize(v_coef)
    v0 = grid.to_physical(v_coef)
    sup = float(np.max(np.sqrt((v0 ** 2).sum(axis=0)))) or 1.0
    v0 *= v_amplitude / sup
    return project_initial_data(grid, v0, omega0, b0)


def bundle_relative_error(fast: RhsBundle, ref: RhsBundle) -> float:
    """Max over components of the sup-norm error relative to the reference sup-norm."""
    worst = 0.0
    for a, b in ((fast.dv, ref.dv), (fast.domega, ref.domega), (fast.db, ref.db)):
        scale = max(float(np.max(np.abs(b))), 1e-30)
        worst = max(worst, float(np.max(np.abs(a - b))) / scale)
    return worst


def comparison_suite(n_states: int = 20, seed: int = 0, grid_n: int = 4,
                     points: int = 64, oversample: float = 4.0):
    """Fast Galerkin right-hand side vs brute-force quadrature on random states.

    Returns (list of per-state relative errors, list of constant-viscosity
    errors).  The constant-viscosity states isolate the exactly-dealiased
    paths, so they are held to a much tighter tolerance by the callers.
    """
    from .cutoffs import build_cutoffs
    from .model import InitialBounds, ModelParams, thresholds_at
    from .rhs import State as RhsState, project_initial_data, rhs_all
    from .spectral import ScalarField, SpectralGrid as Grid, VelocityField

    params = ModelParams()
    bounds = InitialBounds(b_min=0.8, omega_min=0.8, omega_max=1.25)
    grid = Grid(grid_n, params.lengths, oversample=oversample)
    cutoffs = build_cutoffs(thresholds_at(bounds, params.kappa2, 0.0))
    spec = QuadratureSpec(points_per_axis=points)
    rng = np.random.default_rng(seed)

    errors = []
    for _ in range(n_states):
        state = random_admissible_state(grid, bounds, rng)
        fast = rhs_all(state, params, cutoffs)
        ref = rhs_bruteforce(state, params, cutoffs, spec)
        errors.append(bundle_relative_error(fast, ref))

    const_errors = []
    for _ in range(max(3, n_states // 5)):
        state = random_admissible_state(grid, bounds, rng, amplitude=0.0, v_amplitude=0.3)
        fast = rhs_all(state, params, cutoffs)
        ref = rhs_bruteforce(state, params, cutoffs, spec)
        const_errors.append(bundle_relative_error(fast, ref))
    return errors, const_errors
