"""Pseudo-spectral Galerkin solver for Kolmogorov's two-equation turbulence model.

The truncated system evolves spectral coefficients of (v, omega, b) on a 3D
periodic box with a smoothly clamped eddy viscosity; this package also carries
the closed-form existence-time bound, the time-decaying solution barriers and
a verification layer for the energy and maximum-principle estimates.
"""

from .cutoffs import (BumpKernel, CutoffFamily, CutoffProvider, CutoffSet,
                      blend_h, build_cutoffs, bump_f, estimate_c0, eta_tilde,
                      make_phi_lower, make_phi_twosided, make_psi_lower,
                      make_psi_upper)
from .diagnostics import (DiagnosticsRecord, check_b_growth,
                          check_energy_monotonicity, check_max_principles,
                          check_mu_floor, check_truncation_inactive, h2_delta,
                          record, verify_records)
from .integrator import (AdmissibilityError, IntegratorConfig, Trajectory,
                         simulate, step)
from .model import (EstimateConstants, InitialBounds, ModelParams, Thresholds,
                    beta_exponents, estimate_constants, existence_time,
                    q_constants, thresholds_at, uniform_floor)
from .oracle import (QuadratureSpec, comparison_suite, constant_solution,
                     eta_norm_quadrature, rhs_bruteforce)
from .rhs import (RhsBundle, State, mu_field, project_initial_data, rhs_all,
                  rhs_b, rhs_omega, rhs_velocity)
from .spectral import ScalarField, SpectralGrid, VelocityField, make_grid

__version__ = "0.1.0"
