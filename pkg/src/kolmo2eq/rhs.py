"""Right-hand side of the truncated coefficient system.

Quadratic advection terms are exact on the retained shells (the quadrature
grid oversamples beyond the 3/2 rule); terms carrying the pointwise viscosity
mu = clamp(b)/clamp(omega) are evaluated on the oversampled grid and their
residual aliasing is quantified by the brute-force oracle rather than assumed
zero.  All products happen in physical space on the quadrature grid; the
result is transformed back and truncated to the retained shells, with the
velocity component projected onto the divergence-free subspace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cutoffs import CutoffSet
from .model import ModelParams
from .spectral import ScalarField, SpectralGrid, VelocityField

# symmetric tensor component order: 11, 22, 33, 12, 13, 23
_SYM_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass
class State:
    """Spectral coefficients of (v, omega, b) at time t, supported on retained shells."""

    v: VelocityField
    omega: ScalarField
    b: ScalarField
    t: float

    @property
    def grid(self) -> SpectralGrid:
        return self.v.grid

    def copy(self):
        return State(self.v.copy(), self.omega.copy(), self.b.copy(), self.t)


@dataclass
class RhsBundle:
    """Coefficient time derivatives plus cheap pointwise statistics of the assembly."""

    dv: np.ndarray
    domega: np.ndarray
    db: np.ndarray
    mu_min: float
    mu_max: float
    diss_v: float       # integral of mu |D(v)|^2
    diss_omega: float   # integral of mu |grad omega|^2
    diss_b: float       # integral of mu |grad b|^2


def mu_field(state: State, cutoffs: CutoffSet, b_phys=None, omega_phys=None):
    """Pointwise truncated viscosity on the quadrature grid; >= mu_star by construction."""
    g = state.grid
    if b_phys is None:
        b_phys = g.to_physical_quad(state.b.coef)
    if omega_phys is None:
        omega_phys = g.to_physical_quad(state.omega.coef)
    return cutoffs.visc_b(b_phys) / cutoffs.visc_omega(omega_phys)


def _div_sym(g: SpectralGrid, t6):
    k = g.k
    return np.stack([
        1j * (k[0] * t6[0] + k[1] * t6[3] + k[2] * t6[4]),
        1j * (k[0] * t6[3] + k[1] * t6[1] + k[2] * t6[5]),
        1j * (k[0] * t6[4] + k[1] * t6[5] + k[2] * t6[2]),
    ])


def d_squared(dv_sym_phys):
    """Squared Frobenius norm of the symmetric gradient from its 6 components."""
    return (dv_sym_phys[0] ** 2 + dv_sym_phys[1] ** 2 + dv_sym_phys[2] ** 2
            + 2.0 * (dv_sym_phys[3] ** 2 + dv_sym_phys[4] ** 2 + dv_sym_phys[5] ** 2))


def rhs_all(state: State, params: ModelParams, cutoffs: CutoffSet) -> RhsBundle:
    """Assemble all three truncated right-hand sides sharing one set of transforms.

    All inverse and forward transforms are batched into one call each; the
    per-call dispatch overhead dominates at desk-scale resolutions.
    """
    g = state.grid
    v = state.v.coef
    om = state.omega.coef
    b = state.b.coef

    # one batched inverse transform: v(3) | omega | b | grad omega(3) | grad b(3) | D(v)(6)
    spect = np.concatenate([
        v, om[None], b[None], g.gradient(om), g.gradient(b), g.sym_gradient(v),
    ], axis=0)
    phys = g.to_physical_quad(spect)
    v_phys, om_phys, b_phys = phys[0:3], phys[3], phys[4]
    grad_om, grad_b, sym = phys[5:8], phys[8:11], phys[11:17]

    mu = cutoffs.visc_b(b_phys) / cutoffs.visc_omega(om_phys)
    dsq = d_squared(sym)
    gate_om = cutoffs.sink_omega(om_phys)
    gate_b = cutoffs.sink_b(b_phys)

    # one batched forward transform:
    # v x v(6) | mu D(v)(6) | omega v(3) | mu grad omega(3) | b v(3) | mu grad b(3)
    # | gate(omega)^2 | gate(b) gate(omega) | mu |D|^2
    fwd = np.concatenate([
        np.stack([v_phys[i] * v_phys[j] for i, j in _SYM_PAIRS]),
        mu * sym,
        om_phys * v_phys,
        mu * grad_om,
        b_phys * v_phys,
        mu * grad_b,
        (gate_om ** 2)[None],
        (gate_b * gate_om)[None],
        (mu * dsq)[None],
    ], axis=0)
    hats = g.to_spectral_unpad(fwd)

    dv = -_div_sym(g, hats[0:6]) + params.nu0 * _div_sym(g, hats[6:12])
    dv = g.truncate(g.leray_project(dv), g.velocity_mask)

    domega = (-g.divergence(hats[12:15])
              + params.kappa1 * g.divergence(hats[15:18])
              - params.kappa2 * hats[24])
    domega = g.truncate(domega)

    db = (-g.divergence(hats[18:21])
          + params.kappa3 * g.divergence(hats[21:24])
          - hats[25]
          + params.kappa4 * hats[26])
    db = g.truncate(db)

    return RhsBundle(
        dv=dv, domega=domega, db=db,
        mu_min=float(mu.min()), mu_max=float(mu.max()),
        diss_v=g.quad_integral(mu * dsq),
        diss_omega=g.quad_integral(mu * (grad_om[0] ** 2 + grad_om[1] ** 2 + grad_om[2] ** 2)),
        diss_b=g.quad_integral(mu * (grad_b[0] ** 2 + grad_b[1] ** 2 + grad_b[2] ** 2)),
    )


def rhs_velocity(state: State, params: ModelParams, cutoffs: CutoffSet):
    return rhs_all(state, params, cutoffs).dv


def rhs_omega(state: State, params: ModelParams, cutoffs: CutoffSet):
    return rhs_all(state, params, cutoffs).domega


def rhs_b(state: State, params: ModelParams, cutoffs: CutoffSet):
    return rhs_all(state, params, cutoffs).db


def project_initial_data(grid: SpectralGrid, v0, omega0, b0, t: float = 0.0) -> State:
    """L^2-project gridded fields onto the retained shells; velocity also made solenoidal.

    Accepts physical-space values on the collocation grid.  The projection
    only removes energy (Bessel), so every Sobolev norm of the state is
    bounded by the input's.
    """
    v0 = np.asarray(v0, dtype=float)
    omega0 = np.asarray(omega0, dtype=float)
    b0 = np.asarray(b0, dtype=float)
    if v0.shape != (3,) + grid.shape:
        raise ValueError(f"v0 must have shape {(3,) + grid.shape}, got {v0.shape}")
    if omega0.shape != grid.shape or b0.shape != grid.shape:
        raise ValueError(f"scalar fields must have shape {grid.shape}")
    for name, arr in (("v0", v0), ("omega0", omega0), ("b0", b0)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} contains non-finite values")
    v_coef = grid.hermitian_symmetrize(grid.to_spectral(v0))
    v_coef = grid.truncate(grid.leray_project(v_coef), grid.velocity_mask)
    om_coef = grid.truncate(grid.hermitian_symmetrize(grid.to_spectral(omega0)))
    b_coef = grid.truncate(grid.hermitian_symmetrize(grid.to_spectral(b0)))
    return State(
        v=VelocityField(grid, v_coef),
        omega=ScalarField(grid, om_coef),
        b=ScalarField(grid, b_coef),
        t=t,
    )


def state_max_defects(state: State):
    """(hermitian defect, divergence defect, off-shell mass) for invariant checks."""
    g = state.grid
    herm = max(g.hermitian_defect(state.v.coef),
               g.hermitian_defect(state.omega.coef),
               g.hermitian_defect(state.b.coef))
    div = state.v.divergence_defect()
    off = 0.0
    inv_scalar = ~g.retained_mask
    inv_vel = ~g.velocity_mask
    for coef, mask in ((state.v.coef, inv_vel), (state.omega.coef, inv_scalar),
                       (state.b.coef, inv_scalar)):
        vals = np.abs(coef[..., mask] if coef.ndim == 4 else coef[mask])
        if vals.size:
            off = max(off, float(vals.max()))
    return herm, div, off
