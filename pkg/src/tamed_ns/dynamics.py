"""Right-hand side of the tamed equation and pressure recovery.

In Fourier space the velocity obeys

    du/dt = nu * Laplacian(u) - P[(u.grad)u] - P[g_N(|u|^2) u] + f,

where P is the Leray projector.  The diffusion term is left to the integrator;
everything here is the explicit part.  Products are formed on the physical grid
and truncated with the 2/3 rule before projection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .spectral import (
    GridSpec,
    ScalarSpectralField,
    SpectralVelocity,
    Wavenumbers,
    forward,
    inverse,
    project_coeffs,
)
from .taming import TamingProfile, eval_g_field

FORCING_KINDS = ("zero", "steady", "time_periodic")


@dataclass(frozen=True)
class ForcingMode:
    """One Fourier mode of the forcing: component ``j`` gets Re(c * exp(i k.x))."""

    k: tuple[int, int, int]
    component: int
    amplitude: complex


@dataclass(frozen=True)
class Forcing:
    """Body force amplitude * s(t) * P[sum of modes], s = 1 or cos(omega t)."""

    kind: str = "zero"
    amplitude: float = 0.0
    modes: tuple[ForcingMode, ...] = ()
    omega: float = 1.0
    mean_free: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.kind not in FORCING_KINDS:
            raise ConfigurationError(
                f"unknown forcing kind {self.kind!r}; expected one of {FORCING_KINDS}",
                key="forcing.kind",
            )
        for m in self.modes:
            if tuple(m.k) == (0, 0, 0):
                raise ConfigurationError("forcing must have zero mean", key="forcing.modes")
            if m.component not in (0, 1, 2):
                raise ConfigurationError("component must be 0, 1 or 2", key="forcing.modes")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0.0 or not self.modes

    def time_factor(self, t: float) -> float:
        if self.is_zero:
            return 0.0
        if self.kind == "steady":
            return self.amplitude
        return self.amplitude * np.cos(self.omega * t)

    def time_factor_derivative(self, t: float) -> float:
        if self.is_zero or self.kind == "steady":
            return 0.0
        return -self.amplitude * self.omega * np.sin(self.omega * t)

    def pattern(self, grid: GridSpec) -> np.ndarray:
        """Projected, unit-amplitude spatial pattern (read-only coefficients)."""
        return _forcing_pattern(self.modes, grid.size)

    def coeffs(self, grid: GridSpec, t: float) -> np.ndarray:
        s = self.time_factor(t)
        if s == 0.0:
            return np.zeros((3,) + grid.spectral_shape, complex)
        return s * self.pattern(grid)

    def at(self, grid: GridSpec, t: float) -> SpectralVelocity:
        return SpectralVelocity(self.coeffs(grid, t), grid, divfree=True)

    def time_derivative(self, grid: GridSpec, t: float) -> SpectralVelocity:
        """Analytic d f / dt."""
        s = self.time_factor_derivative(t)
        c = np.zeros((3,) + grid.spectral_shape, complex) if s == 0.0 else s * self.pattern(grid)
        return SpectralVelocity(c, grid, divfree=True)


@lru_cache(maxsize=32)
def _forcing_pattern(modes, M):
    grid = GridSpec(M)
    K = grid.dealias_bound
    c = np.zeros((3,) + grid.spectral_shape, complex)
    for m in modes:
        kx, ky, kz = (int(v) for v in m.k)
        if max(abs(kx), abs(ky), abs(kz)) > K:
            raise ConfigurationError(
                f"forcing mode {m.k} lies outside the dealiased band |k_i| <= {K}",
                key="forcing.modes",
            )
        amp = complex(m.amplitude)
        # Re(a e^{ikx}) has coefficient a/2 at k and conj(a)/2 at -k.
        if kz < 0 or (kz == 0 and (kx, ky) < (0, 0)):
            kx, ky, kz, amp = -kx, -ky, -kz, amp.conjugate()
        c[m.component, kx % M, ky % M, kz] += amp / 2
        if kz == 0:
            c[m.component, (-kx) % M, (-ky) % M, 0] += amp.conjugate() / 2
    c = project_coeffs(c, grid.waves)
    c.setflags(write=False)
    return c


@dataclass(frozen=True)
class RhsBreakdown:
    """Explicit terms of the equation, each projected and dealiased.

    ``convective`` and ``taming`` hold P[(u.grad)u] and P[g u] as they stand;
    they enter the equation with a minus sign (see ``explicit``).
    """

    convective: SpectralVelocity
    taming: SpectralVelocity
    forcing: SpectralVelocity
    nu: float

    def explicit(self) -> SpectralVelocity:
        c = self.forcing.coeffs - self.convective.coeffs - self.taming.coeffs
        return self.forcing.with_coeffs(c, divfree=True)

    def diffusion_multiplier(self) -> np.ndarray:
        return -self.nu * self.forcing.grid.waves.ksq


def advection_physical(c: np.ndarray, waves: Wavenumbers, M: int, u_phys=None):
    """(u.grad)u on the grid from coefficients ``c``."""
    if u_phys is None:
        u_phys = inverse(c, M)
    out = np.zeros_like(u_phys)
    for i, ki in enumerate(waves.k):
        du = inverse(1j * ki * c, M)  # d_i u_j for all j
        out += u_phys[i] * du
    return out


def taming_physical(u_phys: np.ndarray, profile: TamingProfile) -> np.ndarray:
    """g_N(|u|^2) u on the grid, before any truncation."""
    if not profile.enabled:
        return np.zeros_like(u_phys)
    g = eval_g_field(profile, np.sum(u_phys * u_phys, axis=0))
    return g * u_phys


def _finish(phys, waves):
    return project_coeffs(forward(phys) * waves.dealias_mask, waves)


def convective_term(u: SpectralVelocity) -> SpectralVelocity:
    """P[(u.grad)u], dealiased."""
    waves, M = u.grid.waves, u.grid.size
    return u.with_coeffs(_finish(advection_physical(u.coeffs, waves, M), waves), divfree=True)


def taming_term(u: SpectralVelocity, profile: TamingProfile) -> SpectralVelocity:
    """P[g_N(|u|^2) u], dealiased.  Exactly zero while sup|u|^2 <= N."""
    waves = u.grid.waves
    phys = taming_physical(u.to_physical(), profile)
    if not phys.any():
        return SpectralVelocity.zeros(u.grid)
    return u.with_coeffs(_finish(phys, waves), divfree=True)


def rhs(u: SpectralVelocity, t: float, profile: TamingProfile, f: Forcing) -> RhsBreakdown:
    if not isinstance(u, SpectralVelocity):
        raise ConfigurationError("rhs expects a SpectralVelocity")
    return RhsBreakdown(
        convective=convective_term(u),
        taming=taming_term(u, profile),
        forcing=f.at(u.grid, t),
        nu=profile.nu,
    )


def explicit_rhs_coeffs(c, t, grid: GridSpec, profile: TamingProfile, f: Forcing):
    """Fused forcing - P[(u.grad)u + g u] on raw coefficients (one projection)."""
    waves, M = grid.waves, grid.size
    u_phys = inverse(c, M)
    w = advection_physical(c, waves, M, u_phys)
    if profile.enabled:
        w += taming_physical(u_phys, profile)
    out = -_finish(w, waves)
    if not f.is_zero:
        out += f.coeffs(grid, t)
    return out


def nonlinear_physical(u: SpectralVelocity, profile: TamingProfile) -> np.ndarray:
    """(u.grad)u + g_N(|u|^2) u on the grid, untruncated."""
    u_phys = u.to_physical()
    w = advection_physical(u.coeffs, u.grid.waves, u.grid.size, u_phys)
    return w + taming_physical(u_phys, profile)


def recover_pressure(u: SpectralVelocity, profile: TamingProfile) -> ScalarSpectralField:
    """Solve Laplacian(p) = div((u.grad)u + g_N(|u|^2) u) with zero mean.

    With the sign convention du/dt = ... + grad p used throughout, this is the
    pressure that removes the gradient part of the nonlinear terms.  The source
    is taken before dealiasing so the spectral Poisson identity is exact.
    """
    waves = u.grid.waves
    w_hat = forward(nonlinear_physical(u, profile))
    kx, ky, kz = waves.k
    div_hat = 1j * (kx * w_hat[0] + ky * w_hat[1] + kz * w_hat[2])
    p_hat = -div_hat * waves.inv_ksq
    return ScalarSpectralField(p_hat, u.grid)
