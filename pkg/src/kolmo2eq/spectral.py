"""Fourier spectral machinery on a periodic box.

Coefficients follow the mean convention: the mode-0 coefficient equals the
spatial mean, so embedding a spectrum into a finer (oversampled) grid leaves
field values unchanged.  The Galerkin truncation retains whole Laplacian
eigenspaces: spherical shells |k|^2 <= K^2, by default the largest shell set
fully contained in the 2/3-rule dealias box.  Velocity lives in the
divergence-free mean-zero subspace via mode-wise projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * math.pi


class SpectralGrid:
    """Wavenumbers, masks and transforms for one box discretization.

    shape: modes per axis (even, >= 4).  lengths: box edges.  oversample:
    quadrature-grid factor for non-polynomial nonlinearities (>= 1.5).
    shell_cut: optional explicit |k|^2 cutoff for the retained Galerkin set;
    defaults to the largest complete-shell cutoff inside the dealias box.
    """

    def __init__(self, shape, lengths, oversample: float = 2.0, shell_cut=None):
        if np.ndim(shape) == 0:
            shape = (shape,) * 3
        if np.ndim(lengths) == 0:
            lengths = (lengths,) * 3
        shape = tuple(int(n) for n in shape)
        lengths = tuple(float(L) for L in lengths)
        if len(shape) != 3 or len(lengths) != 3:
            raise ValueError("grid needs three axes")
        for n in shape:
            if n < 4 or n % 2:
                raise ValueError(f"modes per axis must be even and >= 4, got {shape}")
        for L in lengths:
            if not (L > 0.0 and math.isfinite(L)):
                raise ValueError(f"box lengths must be positive, got {lengths}")
        if oversample < 1.5:
            raise ValueError(f"oversample must be >= 1.5 (quadrature-grid rule), got {oversample}")
        self.shape = shape
        self.lengths = lengths
        self.volume = float(np.prod(lengths))
        self.npoints = int(np.prod(shape))

        modes = [np.fft.fftfreq(n, 1.0 / n).astype(int) for n in shape]
        self.mode_numbers = modes
        k1d = [TWO_PI * m / L for m, L in zip(modes, lengths)]
        self.k = (
            k1d[0][:, None, None],
            k1d[1][None, :, None],
            k1d[2][None, None, :],
        )
        self.k_sq = self.k[0] ** 2 + self.k[1] ** 2 + self.k[2] ** 2

        m_keep = [n // 3 for n in shape]
        self.dealias_mask = (
            (np.abs(modes[0])[:, None, None] <= m_keep[0])
            & (np.abs(modes[1])[None, :, None] <= m_keep[1])
            & (np.abs(modes[2])[None, None, :] <= m_keep[2])
        )
        # largest |k|^2 bound whose shells all fit in the dealias box
        box_bound = min(
            (TWO_PI * (m + 1) / L) ** 2 for m, L in zip(m_keep, lengths)
        )
        if shell_cut is None:
            self.shell_cut = self._max_ksq_below(box_bound)
            self.retained_mask = self.k_sq < box_bound * (1.0 - 1e-12)
        else:
            shell_cut = float(shell_cut)
            if shell_cut <= 0.0:
                raise ValueError("shell_cut must be positive")
            if shell_cut >= box_bound * (1.0 - 1e-12):
                raise ValueError(
                    f"shell_cut {shell_cut} exceeds the dealias-complete bound {box_bound}"
                )
            self.shell_cut = shell_cut
            self.retained_mask = self.k_sq <= shell_cut * (1.0 + 1e-12)
        self.velocity_mask = self.retained_mask & (self.k_sq > 0.0)
        self.k_sq_max = float(self.k_sq[self.retained_mask].max())

        self.oversample = float(oversample)
        quad = []
        for n in shape:
            nq = int(math.ceil(self.oversample * n))
            quad.append(nq + (nq % 2))
        self.quad_shape = tuple(quad)
        self.quad_npoints = int(np.prod(self.quad_shape))
        embed = []
        for n, nq in zip(shape, self.quad_shape):
            pos = np.where(np.fft.fftfreq(n) < 0,
                           np.fft.fftfreq(n, 1.0 / n).astype(int) + nq,
                           np.fft.fftfreq(n, 1.0 / n).astype(int))
            embed.append(pos)
        self._embed = np.ix_(*embed)

    def _max_ksq_below(self, bound):
        vals = self.k_sq[self.k_sq < bound * (1.0 - 1e-12)]
        return float(vals.max())

    # coordinate meshes -------------------------------------------------
    def mesh(self):
        axes = [np.arange(n) * L / n for n, L in zip(self.shape, self.lengths)]
        return np.meshgrid(*axes, indexing="ij")

    def mesh_quad(self):
        axes = [np.arange(n) * L / n for n, L in zip(self.quad_shape, self.lengths)]
        return np.meshgrid(*axes, indexing="ij")

    # transforms ---------------------------------------------------------
    def to_spectral(self, values):
        return sfft.fftn(np.asarray(values, dtype=float), axes=(-3, -2, -1), norm="forward")

    def to_physical(self, coef):
        return sfft.ifftn(coef, axes=(-3, -2, -1), norm="forward").real

    def pad_coef(self, coef):
        out = np.zeros(coef.shape[:-3] + self.quad_shape, dtype=complex)
        out[(Ellipsis,) + self._embed] = coef
        return out

    def to_physical_quad(self, coef):
        return sfft.ifftn(self.pad_coef(coef), axes=(-3, -2, -1), norm="forward").real

    def to_spectral_unpad(self, values):
        full = sfft.fftn(np.asarray(values, dtype=float), axes=(-3, -2, -1), norm="forward")
        return full[(Ellipsis,) + self._embed]

    # integrals on the quadrature grid ------------------------------------
    def quad_integral(self, values):
        return float(np.sum(values) * (self.volume / self.quad_npoints))

    # norms ----------------------------------------------------------------
    def l2_norm(self, coef):
        return math.sqrt(self.volume * float(np.sum(np.abs(coef) ** 2)))

    def hk_norm(self, coef, order: int):
        """Sobolev norm (|grad^order f|_2^2 + |f|_2^2)^(1/2); order 0 is plain L^2."""
        if order not in (0, 1, 2, 3):
            raise ValueError(f"norm order must be 0..3, got {order!r}")
        if order == 0:
            return self.l2_norm(coef)
        weight = 1.0 + self.k_sq ** order
        return math.sqrt(self.volume * float(np.sum(weight * np.abs(coef) ** 2)))

    # operators --------------------------------------------------------------
    def gradient(self, coef):
        return np.stack([1j * self.k[i] * coef for i in range(3)])

    def divergence(self, coef3):
        return 1j * (self.k[0] * coef3[0] + self.k[1] * coef3[1] + self.k[2] * coef3[2])

    def laplacian(self, coef):
        return -self.k_sq * coef

    def sym_gradient(self, coef3):
        """Symmetric gradient, component order (11, 22, 33, 12, 13, 23)."""
        k = self.k
        d = np.empty((6,) + coef3.shape[1:], dtype=complex)
        d[0] = 1j * k[0] * coef3[0]
        d[1] = 1j * k[1] * coef3[1]
        d[2] = 1j * k[2] * coef3[2]
        d[3] = 0.5j * (k[0] * coef3[1] + k[1] * coef3[0])
        d[4] = 0.5j * (k[0] * coef3[2] + k[2] * coef3[0])
        d[5] = 0.5j * (k[1] * coef3[2] + k[2] * coef3[1])
        return d

    def leray_project(self, coef3):
        """Remove the gradient part mode-wise and zero the mean."""
        ksq = np.where(self.k_sq == 0.0, 1.0, self.k_sq)
        kdotu = self.k[0] * coef3[0] + self.k[1] * coef3[1] + self.k[2] * coef3[2]
        out = np.stack([coef3[i] - self.k[i] * kdotu / ksq for i in range(3)])
        out[:, 0, 0, 0] = 0.0
        return out

    def truncate(self, coef, mask=None):
        if mask is None:
            mask = self.retained_mask
        return coef * mask

    # symmetry helpers ---------------------------------------------------------
    def _reversed_indices(self):
        return np.ix_(*[(-np.arange(n)) % n for n in self.shape])

    def hermitian_symmetrize(self, coef):
        rev = coef[(Ellipsis,) + self._reversed_indices()]
        return 0.5 * (coef + np.conj(rev))

    def hermitian_defect(self, coef):
        rev = coef[(Ellipsis,) + self._reversed_indices()]
        scale = float(np.max(np.abs(coef))) or 1.0
        return float(np.max(np.abs(coef - np.conj(rev)))) / scale


def make_grid(shape, lengths, oversample: float = 2.0, shell_cut=None) -> SpectralGrid:
    return SpectralGrid(shape, lengths, oversample=oversample, shell_cut=shell_cut)


@dataclass
class ScalarField:
    """Real scalar field as retained spectral coefficients."""

    grid: SpectralGrid
    coef: np.ndarray

    def physical(self):
        return self.grid.to_physical(self.coef)

    def copy(self):
        return ScalarField(self.grid, self.coef.copy())


@dataclass
class VelocityField:
    """Divergence-free mean-zero vector field as retained spectral coefficients."""

    grid: SpectralGrid
    coef: np.ndarray  # shape (3, N1, N2, N3)

    def physical(self):
        return self.grid.to_physical(self.coef)

    def copy(self):
        return VelocityField(self.grid, self.coef.copy())

    def divergence_defect(self) -> float:
        div = self.grid.divergence(self.coef)
        scale = float(np.max(np.abs(self.coef))) or 1.0
        return float(np.max(np.abs(div))) / scale
