"""Model constants, time-decaying solution barriers and the existence-time bound.

The two-equation system couples a mean velocity v, a dissipation rate omega
and a turbulent-energy variable b through the eddy viscosity b/omega.  For
admissible initial data (b bounded below, omega pinched between two positive
constants) the solution respects closed-form time-decaying barriers; those
barriers, the growth constants Q1..Q3 and the existence-time lower bound T*
are all evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and box edge lengths.

    The default preset keeps every coefficient except kappa2 equal to one;
    kappa2 controls the omega-decay rate and enters all barrier formulas.
    """

    nu0: float = 1.0
    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa3: float = 1.0
    kappa4: float = 1.0
    L1: float = TWO_PI
    L2: float = TWO_PI
    L3: float = TWO_PI

    def __post_init__(self):
        for name in ("nu0", "kappa1", "kappa2", "kappa3", "kappa4", "L1", "L2", "L3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"ModelParams.{name} must be a positive finite real, got {value!r}")

    @property
    def lengths(self):
        return (self.L1, self.L2, self.L3)


@dataclass(frozen=True)
class InitialBounds:
    """Pointwise bounds the initial data must satisfy: b0 >= b_min, omega_min <= omega0 <= omega_max."""

    b_min: float
    omega_min: float
    omega_max: float

    def __post_init__(self):
        if not (math.isfinite(self.b_min) and self.b_min > 0.0):
            raise ValueError(f"b_min must be positive, got {self.b_min!r}")
        if not (math.isfinite(self.omega_min) and self.omega_min > 0.0):
            raise ValueError(f"omega_min must be positive, got {self.omega_min!r}")
        if not (math.isfinite(self.omega_max) and self.omega_max >= self.omega_min):
            raise ValueError(
                f"need 0 < omega_min <= omega_max, got ({self.omega_min!r}, {self.omega_max!r})"
            )


@dataclass(frozen=True)
class Thresholds:
    """Barrier values at a fixed time t.

    b_star and omega_star decay like the slowest admissible solution value,
    omega_dstar like the fastest; mu_star = b_star / (4 omega_dstar) is the
    guaranteed viscosity floor of the truncated system.
    """

    t: float
    b_star: float
    omega_star: float
    omega_dstar: float
    mu_star: float


def thresholds_at(bounds: InitialBounds, kappa2: float, t: float) -> Thresholds:
    """Evaluate the four time-decayed barriers at t >= 0."""
    if not (math.isfinite(t) and t >= 0.0):
        raise ValueError(f"time must be nonnegative, got {t!r}")
    if kappa2 <= 0.0:
        raise ValueError(f"kappa2 must be positive, got {kappa2!r}")
    b_star = bounds.b_min * (1.0 + kappa2 * bounds.omega_max * t) ** (-1.0 / kappa2)
    omega_star = bounds.omega_min / (1.0 + kappa2 * bounds.omega_min * t)
    omega_dstar = bounds.omega_max / (1.0 + kappa2 * bounds.omega_max * t)
    mu_star = 0.25 * b_star / omega_dstar
    return Thresholds(t=t, b_star=b_star, omega_star=omega_star,
                      omega_dstar=omega_dstar, mu_star=mu_star)


def q_constants(bounds: InitialBounds):
    """Growth constants (Q1, Q2, Q3) of the higher-order estimates."""
    b, om_mn, om_mx = bounds.b_min, bounds.omega_min, bounds.omega_max
    base = (b / om_mn) * (1.0 + b ** -3 + om_mn ** -3)
    q1 = base
    q2 = (1.0 + (om_mx / b) ** 3) * ((b / om_mn) * (1.0 + b ** -3 + om_mn ** -3) ** 10 + 1.0)
    q3 = q1 * q1 + q2 + 1.0
    return q1, q2, q3


def beta_exponents(kappa2: float):
    """Time-growth exponents (beta, beta_bar) as functions of kappa2."""
    if kappa2 <= 0.0:
        raise ValueError(f"kappa2 must be positive, got {kappa2!r}")
    beta = max(1.0 / kappa2 - 1.0, 3.0 / kappa2 - 3.0)
    beta_bar = 10.0 * max(1.0 + 1.0 / kappa2, 3.0) + beta
    return beta, beta_bar


@dataclass(frozen=True)
class EstimateConstants:
    """Bundle of the a-priori estimate constants for a given bounds/kappa2 pair.

    C_est stands in for the unnamed constant of the Gronwall estimate, which
    depends only on the box and the cutoff derivative bound and is never given
    numerically; T* evaluations are therefore formula evaluations, not
    certified bounds.
    """

    Q1: float
    Q2: float
    Q3: float
    beta: float
    beta_bar: float
    C_est: float = 1.0

    def __post_init__(self):
        if self.C_est <= 0.0:
            raise ValueError(f"C_est must be positive, got {self.C_est!r}")
        expected = self.Q1 ** 2 + self.Q2 + 1.0
        if not math.isclose(self.Q3, expected, rel_tol=1e-12):
            raise ValueError(f"Q3 must equal Q1^2 + Q2 + 1 = {expected!r}, got {self.Q3!r}")


def estimate_constants(bounds: InitialBounds, kappa2: float, C_est: float = 1.0) -> EstimateConstants:
    q1, q2, q3 = q_constants(bounds)
    beta, beta_bar = beta_exponents(kappa2)
    return EstimateConstants(Q1=q1, Q2=q2, Q3=q3, beta=beta, beta_bar=beta_bar, C_est=C_est)


def existence_time(delta: float, bounds: InitialBounds, kappa2: float,
                   C_est: float = 1.0) -> float:
    """Closed-form lower bound T* on the lifespan of the regular solution.

    delta is the summed squared H^2 norm of the initial data.  The returned
    time solves (1+delta)^-14 = 15 C Q3 / ((beta_bar+1) kappa2 omega_max)
    * ((1 + kappa2 omega_max T*)^(beta_bar+1) - 1) exactly; the inversion is
    written through log1p/expm1 because the inner ratio is typically << 1.
    """
    if not (math.isfinite(delta) and delta >= 0.0):
        raise ValueError(f"delta must be a nonnegative real, got {delta!r}")
    if C_est <= 0.0:
        raise ValueError(f"C_est must be positive, got {C_est!r}")
    _, _, q3 = q_constants(bounds)
    _, beta_bar = beta_exponents(kappa2)
    rate = kappa2 * bounds.omega_max
    x = (beta_bar + 1.0) * rate * (1.0 + delta) ** -14 / (15.0 * C_est * q3)
    return math.expm1(math.log1p(x) / (beta_bar + 1.0)) / rate


def _existence_time_grid(delta, om_min, om_max, b_min, kappa2, C_est):
    # vectorized T* over arrays of bounds triples
    q1 = (b_min / om_min) * (1.0 + b_min ** -3 + om_min ** -3)
    q2 = (1.0 + (om_max / b_min) ** 3) * ((b_min / om_min) * (1.0 + b_min ** -3 + om_min ** -3) ** 10 + 1.0)
    q3 = q1 * q1 + q2 + 1.0
    _, beta_bar = beta_exponents(kappa2)
    rate = kappa2 * om_max
    x = (beta_bar + 1.0) * rate * (1.0 + delta) ** -14 / (15.0 * C_est * q3)
    return np.expm1(np.log1p(x) / (beta_bar + 1.0)) / rate


def uniform_floor(delta: float, K, kappa2: float, C_est: float = 1.0,
                  grid_n: int = 16) -> float:
    """Infimum of T* over a compact box K of (omega_min, omega_max, b_min) triples.

    K is given as three coordinate intervals ((a_lo, a_hi), (b_lo, b_hi),
    (c_lo, c_hi)); every point must satisfy 0 < a <= b and 0 < c, so a_hi must
    not exceed b_lo.  T* is monotone in omega_min and omega_max but only
    piecewise monotone in b_min, hence corners plus a grid scan.
    """
    (a_lo, a_hi), (b_lo, b_hi), (c_lo, c_hi) = K
    if not (0.0 < a_lo <= a_hi and 0.0 < b_lo <= b_hi and 0.0 < c_lo <= c_hi):
        raise ValueError(f"invalid box K: {K!r}")
    if a_hi > b_lo:
        raise ValueError(
            f"box violates omega_min <= omega_max: omega_min up to {a_hi} exceeds omega_max down to {b_lo}"
        )
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    om_min = np.linspace(a_lo, a_hi, grid_n)
    om_max = np.linspace(b_lo, b_hi, grid_n)
    b_min = np.linspace(c_lo, c_hi, grid_n)
    grid = _existence_time_grid(
        delta,
        om_min[:, None, None],
        om_max[None, :, None],
        b_min[None, None, :],
        kappa2,
        C_est,
    )
    return float(grid.min())
