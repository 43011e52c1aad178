"""The taming function g_N and its derivative.

g_N vanishes on [0, N], equals (r - N - 1/2)/nu for r >= N + 1, and in between
is the integral of a smooth step:

    g_N(r) = (1/nu) * integral_0^{r-N} theta(s) ds,
    theta(s) = sigma(s) / (sigma(s) + sigma(1 - s)),  sigma(x) = exp(-1/x) (x > 0).

Since theta(s) + theta(1 - s) = 1 the ramp integrates to exactly 1/2 over
[0, 1], so both joins are C-infinity and the slope never leaves [0, 1/nu].
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ConfigurationError

TABLE_POINTS = 4096
# Below this offset the ramp integral is under 1e-48; the cubic table can dip
# slightly below zero there, so the value is pinned to zero instead.
TAIL_CUTOFF = 0.01
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def smooth_step(s):
    """theta(s): 0 for s <= 0, 1 for s >= 1, C-infinity in between."""
    s = np.asarray(s, dtype=float)
    out = np.where(s >= 1.0, 1.0, 0.0)
    inside = (s > 0.0) & (s < 1.0)
    if np.any(inside):
        si = s[inside]
        a = np.exp(-1.0 / si)
        b = np.exp(-1.0 / (1.0 - si))
        out[inside] = a / (a + b)
    return out if out.ndim else float(out)


def ramp_integral(s, panels=32):
    """integral_0^s theta by composite 12-point Gauss-Legendre, s clipped to [0, 1].

    Accurate to ~1e-16 absolute; used to build the interpolation table and as
    the reference value in tests.
    """
    s = np.clip(np.atleast_1d(np.asarray(s, dtype=float)), 0.0, 1.0)
    edges = np.linspace(0.0, 1.0, panels + 1)
    total = np.zeros_like(s)
    for lo, hi in zip(edges[:-1], edges[1:]):
        b = np.clip(s, lo, hi)
        width = b - lo
        active = width > 0
        if not np.any(active):
            continue
        mid = lo + 0.5 * width[active]
        nodes = mid[:, None] + 0.5 * width[active][:, None] * _GL_NODES[None, :]
        total[active] += 0.5 * width[active] * (smooth_step(nodes) @ _GL_WEIGHTS)
    return total


@lru_cache(maxsize=1)
def _blend_spline() -> CubicHermiteSpline:
    s = np.linspace(0.0, 1.0, TABLE_POINTS)
    # Integrate cell by cell and accumulate, so each table entry costs one panel.
    widths = np.diff(s)
    mid = 0.5 * (s[:-1] + s[1:])
    nodes = mid[:, None] + 0.5 * widths[:, None] * _GL_NODES[None, :]
    cells = 0.5 * widths * (smooth_step(nodes) @ _GL_WEIGHTS)
    values = np.concatenate([[0.0], np.cumsum(cells)])
    values[-1] = 0.5
    return CubicHermiteSpline(s, values, smooth_step(s))


@dataclass(frozen=True)
class TamingProfile:
    """Parameters of g_N.  ``enabled=False`` gives the untamed equation."""

    N: float
    nu: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if not np.isfinite(self.N) or self.N < 0:
            raise ConfigurationError(f"must be a finite number >= 0, got {self.N}", key="taming.N")
        if not np.isfinite(self.nu) or self.nu <= 0:
            raise ConfigurationError(f"must be positive, got {self.nu}", key="physics.nu")

    @classmethod
    def disabled(cls, nu=1.0) -> "TamingProfile":
        return cls(N=0.0, nu=nu, enabled=False)

    @property
    def max_slope(self) -> float:
        """The constant C_nu bounding g'_N."""
        return 1.0 / self.nu

    def activation_threshold(self) -> float:
        return self.N if self.enabled else np.inf


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise ConfigurationError("taming function is defined for r >= 0 only")
    return r


def eval_g(profile: TamingProfile, r):
    """g_N(r) for scalar or array r >= 0."""
    r = _check_r(r)
    scalar = r.ndim == 0
    out = _g(profile, np.atleast_1d(r))
    return float(out[0]) if scalar else out


def eval_g_prime(profile: TamingProfile, r):
    """g'_N(r) = theta(r - N) / nu."""
    r = _check_r(r)
    if not profile.enabled:
        return 0.0 if r.ndim == 0 else np.zeros_like(r)
    return smooth_step(r - profile.N) / profile.nu


def eval_g_field(profile: TamingProfile, speed_sq: np.ndarray) -> np.ndarray:
    """Pointwise g_N(|u|^2) on a physical grid; round-off negatives are clamped."""
    r = np.maximum(np.asarray(speed_sq, dtype=float), 0.0)
    return _g(profile, r)


def _g(profile, r):
    out = np.zeros_like(r)
    if not profile.enabled:
        return out
    N, nu = profile.N, profile.nu
    lin = r >= N + 1.0
    out[lin] = (r[lin] - N - 0.5) / nu
    blend = (r > N + TAIL_CUTOFF) & ~lin
    if np.any(blend):
        out[blend] = _blend_spline()(r[blend] - N) / nu
    return out


def check_table(r_min, r_max, count, profile: TamingProfile):
    """Rows (r, g, g', g - (r - N - 1/2)/nu) for the ``check-gn`` command."""
    r = np.linspace(r_min, r_max, count)
    g = eval_g(profile, r)
    gp = eval_g_prime(profile, r)
    slack = g - (r - profile.N - 0.5) / profile.nu
    return np.column_stack([r, g, gp, slack])
