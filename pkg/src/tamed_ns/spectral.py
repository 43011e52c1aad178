"""Fourier representation of fields on the periodic box [0, 2*pi)^3.

Coefficients follow the normalization

    u_hat(k) = (2*pi)^-3 * integral u(x) exp(-i k.x) dx,

so that ``integral |u|^2 dx = (2*pi)^3 * sum_k |u_hat(k)|^2``.  On the grid this
is the forward DFT divided by M^3 (``norm="forward"``).

Only the real-to-complex half spectrum (last axis kz = 0..M/2) is stored; the
modes with kz < 0 are implied by Hermitian symmetry.  Nyquist modes are held at
zero so that every stored mode has a well-defined conjugate partner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError

VOLUME = (2.0 * np.pi) ** 3
DIV_TOL = 1e-12
_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class GridSpec:
    """Uniform M^3 grid on [0, 2*pi)^3."""

    size: int

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or isinstance(self.size, bool):
            raise ConfigurationError("grid size must be an integer", key="grid.size")
        if self.size < 8 or self.size % 2:
            raise ConfigurationError(
                f"grid size must be even and >= 8, got {self.size}", key="grid.size"
            )
        object.__setattr__(self, "size", int(self.size))

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / self.size

    @property
    def dealias_bound(self) -> int:
        """Largest retained |k_i| under the 2/3 rule."""
        return self.size // 3

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        M = self.size
        return (M, M, M // 2 + 1)

    @property
    def physical_shape(self) -> tuple[int, int, int]:
        return (self.size,) * 3

    def coords(self):
        """1D grid coordinates x_n = n * dx."""
        return np.arange(self.size) * self.dx

    def mesh(self):
        x = self.coords()
        return np.meshgrid(x, x, x, indexing="ij")

    @property
    def waves(self) -> "Wavenumbers":
        return _wavenumbers(self.size)


@dataclass(frozen=True)
class Wavenumbers:
    kx: np.ndarray
    ky: np.ndarray
    kz: np.ndarray
    ksq: np.ndarray
    inv_ksq: np.ndarray  # 1/|k|^2 with 0 at k = 0
    dealias_mask: np.ndarray
    nyquist_mask: np.ndarray  # False on any Nyquist plane
    weight: np.ndarray  # Hermitian multiplicity of each stored mode

    @property
    def k(self):
        return (self.kx, self.ky, self.kz)


@lru_cache(maxsize=16)
def _wavenumbers(M: int) -> Wavenumbers:
    k_full = np.fft.fftfreq(M, 1.0 / M)
    k_half = np.arange(M // 2 + 1, dtype=float)
    kx = k_full[:, None, None]
    ky = k_full[None, :, None]
    kz = k_half[None, None, :]
    ksq = kx**2 + ky**2 + kz**2
    inv_ksq = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=inv_ksq, where=ksq > 0)
    K = M // 3
    dealias = (np.abs(kx) <= K) & (np.abs(ky) <= K) & (np.abs(kz) <= K)
    half = M // 2
    nyq = (np.abs(kx) != half) & (np.abs(ky) != half) & (kz != half)
    weight = np.where((kz > 0) & (kz < half), 2.0, 1.0) * np.ones_like(ksq)
    arrays = [kx, ky, kz, ksq, inv_ksq, dealias, nyq, weight]
    for a in arrays:
        a.setflags(write=False)
    return Wavenumbers(*arrays)


def forward(phys: np.ndarray) -> np.ndarray:
    """Physical grid values -> half-spectrum coefficients (Nyquist dropped)."""
    M = phys.shape[-1]
    out = sfft.rfftn(phys, axes=_AXES, norm="forward")
    out *= _wavenumbers(M).nyquist_mask
    return out


def inverse(coeffs: np.ndarray, M: int) -> np.ndarray:
    """Half-spectrum coefficients -> physical grid values."""
    return sfft.irfftn(coeffs, s=(M, M, M), axes=_AXES, norm="forward")


def _check_grid(a, b):
    if a.grid != b.grid:
        raise ConfigurationError(
            f"grid mismatch: {a.grid.size}^3 vs {b.grid.size}^3", key="grid.size"
        )


@dataclass(frozen=True, eq=False)
class SpectralVelocity:
    """Three-component velocity field in Fourier space."""

    coeffs: np.ndarray
    grid: GridSpec
    divfree: bool = False

    def __post_init__(self):
        expected = (3,) + self.grid.spectral_shape
        if self.coeffs.shape != expected:
            raise ConfigurationError(
                f"coefficient shape {self.coeffs.shape} does not match grid {expected}",
                key="grid.size",
            )
        c = np.asarray(self.coeffs, dtype=complex)
        if c is self.coeffs:
            c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralVelocity":
        return cls(np.zeros((3,) + grid.spectral_shape, complex), grid, divfree=True)

    @classmethod
    def from_physical(cls, grid: GridSpec, u: np.ndarray, divfree=False):
        u = np.asarray(u, dtype=float)
        if u.shape != (3,) + grid.physical_shape:
            raise ConfigurationError(
                f"physical field shape {u.shape} does not match grid", key="grid.size"
            )
        return cls(forward(u), grid, divfree=divfree)

    def to_physical(self) -> np.ndarray:
        return inverse(self.coeffs, self.grid.size)

    def with_coeffs(self, coeffs, divfree=None) -> "SpectralVelocity":
        return SpectralVelocity(
            coeffs, self.grid, self.divfree if divfree is None else divfree
        )


@dataclass(frozen=True, eq=False)
class ScalarSpectralField:
    """Scalar field (pressure, test quantities) in Fourier space."""

    coeffs: np.ndarray
    grid: GridSpec = field()

    def __post_init__(self):
        if self.coeffs.shape != self.grid.spectral_shape:
            raise ConfigurationError("scalar coefficient shape does not match grid")
        c = np.array(self.coeffs, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_physical(cls, grid: GridSpec, p: np.ndarray):
        return cls(forward(np.asarray(p, dtype=float)), grid)

    def to_physical(self) -> np.ndarray:
        return inverse(self.coeffs, self.grid.size)


# -- operators on raw coefficient arrays (hot path) --------------------------


def project_coeffs(c: np.ndarray, waves: Wavenumbers) -> np.ndarray:
    kx, ky, kz = waves.k
    kdotc = (kx * c[0] + ky * c[1] + kz * c[2]) * waves.inv_ksq
    return np.stack([c[0] - kx * kdotc, c[1] - ky * kdotc, c[2] - kz * kdotc])


def divergence_ratio_coeffs(c: np.ndarray, waves: Wavenumbers) -> float:
    """max_k |k . c(k)| / max_k |c(k)|, 0 for the zero field."""
    kx, ky, kz = waves.k
    top = np.abs(kx * c[0] + ky * c[1] + kz * c[2]).max()
    scale = np.abs(c).max()
    return float(top / scale) if scale > 0 else 0.0


def weighted_sum(values: np.ndarray, waves: Wavenumbers) -> float:
    """Sum over the full spectrum of a Hermitian-even quantity stored on the half."""
    return float(np.sum(values * waves.weight))


# -- public operations --------------------------------------------------------


def leray_project(v: SpectralVelocity) -> SpectralVelocity:
    """Orthogonal projection onto divergence-free fields, mode by mode.

    For k != 0 this is ``v - k (k.v) / |k|^2``; the mean mode passes through.
    """
    return v.with_coeffs(project_coeffs(v.coeffs, v.grid.waves), divfree=True)


def divergence_ratio(v: SpectralVelocity) -> float:
    return divergence_ratio_coeffs(v.coeffs, v.grid.waves)


def is_divergence_free(v: SpectralVelocity, tol=DIV_TOL) -> bool:
    return divergence_ratio(v) <= tol


def sobolev_norm_sq(v: SpectralVelocity, m: int) -> float:
    """(2*pi)^3 * sum_{j,k} (1 + |k|^2)^m |v_j(k)|^2 for m in {0, 1, 2}."""
    if m not in (0, 1, 2):
        raise ConfigurationError(f"Sobolev order must be 0, 1 or 2, got {m}")
    waves = v.grid.waves
    energy = np.sum(np.abs(v.coeffs) ** 2, axis=0)
    return VOLUME * weighted_sum(energy * (1.0 + waves.ksq) ** m, waves)


def gradient_norm_sq(v: SpectralVelocity) -> float:
    waves = v.grid.waves
    energy = np.sum(np.abs(v.coeffs) ** 2, axis=0)
    return VOLUME * weighted_sum(energy * waves.ksq, waves)


def laplacian_norm_sq(v: SpectralVelocity) -> float:
    waves = v.grid.waves
    energy = np.sum(np.abs(v.coeffs) ** 2, axis=0)
    return VOLUME * weighted_sum(energy * waves.ksq**2, waves)


def inner_product(a: SpectralVelocity, b: SpectralVelocity) -> float:
    """L^2 inner product over the box."""
    _check_grid(a, b)
    prod = np.sum(np.real(np.conj(a.coeffs) * b.coeffs), axis=0)
    return VOLUME * weighted_sum(prod, a.grid.waves)


def dealias(v: SpectralVelocity) -> SpectralVelocity:
    """Zero every mode with some |k_i| > floor(M/3)."""
    return v.with_coeffs(v.coeffs * v.grid.waves.dealias_mask)


def sup_norm(v: SpectralVelocity) -> float:
    """Max of |u| over the physical grid points.

    This samples the field, so it can undershoot the true supremum between grid
    points.
    """
    u = v.to_physical()
    return float(np.sqrt(np.max(np.sum(u * u, axis=0))))


def lp_norm(v: SpectralVelocity, p: float) -> float:
    """(integral |u|^p dx)^(1/p) by grid quadrature (exact for band-limited |u|^p)."""
    u = v.to_physical()
    mag = np.sqrt(np.sum(u * u, axis=0))
    return float((VOLUME * np.mean(mag**p)) ** (1.0 / p))


def gradient_physical(v: SpectralVelocity) -> np.ndarray:
    """Array g[i, j] = d_i u_j on the grid, shape (3, 3, M, M, M)."""
    waves = v.grid.waves
    M = v.grid.size
    return np.stack(
        [inverse(1j * ki * v.coeffs, M) for ki in waves.k]
    )


def random_field(grid: GridSpec, seed: int, scale=1.0) -> SpectralVelocity:
    """Real random field with Hermitian-consistent coefficients (not projected)."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((3,) + grid.physical_shape) * scale
    return SpectralVelocity.from_physical(grid, u)
