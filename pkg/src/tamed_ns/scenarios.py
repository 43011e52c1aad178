"""Initial conditions and forcings with known analytic properties."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Forcing, ForcingMode
from .errors import ConfigurationError
from .spectral import GridSpec, SpectralVelocity, forward, project_coeffs, sobolev_norm_sq


@dataclass(frozen=True)
class Scenario:
    name: str = "taylor_green"
    amplitude: float = 1.0
    k0: int = 2
    seed: int = 0


def taylor_green(grid: GridSpec, a: float) -> np.ndarray:
    x, y, z = grid.mesh()
    return np.stack(
        [
            a * np.sin(x) * np.cos(y) * np.cos(z),
            -a * np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros_like(x),
        ]
    )


def shear_mode(grid: GridSpec, a: float) -> np.ndarray:
    x, y, z = grid.mesh()
    return np.stack([a * np.sin(y), np.zeros_like(x), np.zeros_like(x)])


def _random_spectrum(grid: GridSpec, target_norm: float, k0: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.uint64(seed))
    noise = rng.standard_normal((3,) + grid.physical_shape)
    c = forward(noise)
    waves = grid.waves
    k = np.sqrt(waves.ksq)
    # Energy shell spectrum k^4 exp(-2k^2/k0^2) spread over a shell of area ~ k^2.
    c *= k * np.exp(-waves.ksq / k0**2)
    c = project_coeffs(c * waves.dealias_mask, waves)
    c[:, 0, 0, 0] = 0.0
    norm = np.sqrt(sobolev_norm_sq(SpectralVelocity(c, grid), 0))
    if norm == 0:
        raise ConfigurationError("random spectrum produced a zero field", key="scenario.k0")
    return c * (target_norm / norm)


def make_initial(scenario: Scenario, grid: GridSpec) -> SpectralVelocity:
    """Divergence-free, dealiased, zero-mean initial velocity.

    For ``random_spectrum`` the amplitude is the requested L^2 norm.
    """
    waves = grid.waves
    if scenario.name == "taylor_green":
        c = forward(taylor_green(grid, scenario.amplitude))
    elif scenario.name == "shear_mode":
        c = forward(shear_mode(grid, scenario.amplitude))
    elif scenario.name == "random_spectrum":
        c = _random_spectrum(grid, scenario.amplitude, scenario.k0, scenario.seed)
    else:
        raise ConfigurationError(f"unknown scenario {scenario.name!r}", key="scenario.name")
    c = project_coeffs(c * waves.dealias_mask, waves)
    return SpectralVelocity(c, grid, divfree=True)


def make_forcing(config) -> Forcing:
    """Forcing described by the ``forcing.*`` keys of a ``SimConfig``.

    Modes are checked against the configured grid's dealiased band.
    """
    modes = tuple(
        ForcingMode(k=(int(m[0]), int(m[1]), int(m[2])), component=int(m[3]), amplitude=complex(m[4], m[5]))
        for m in config.forcing_modes
    )
    f = Forcing(kind=config.forcing_kind, amplitude=float(config.forcing_amplitude), modes=modes, omega=float(config.forcing_omega))
    if f.modes:
        f.pattern(GridSpec(config.grid_size))  # band check
    return f
