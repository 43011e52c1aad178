import math

import numpy as np
import pytest

from tamed_ns.dynamics import (
    Forcing,
    ForcingMode,
    convective_term,
    explicit_rhs_coeffs,
    nonlinear_physical,
    recover_pressure,
    rhs,
    taming_term,
)
from tamed_ns.errors import ConfigurationError
from tamed_ns.spectral import (
    GridSpec,
    SpectralVelocity,
    inner_product,
    inverse,
    leray_project,
    random_field,
    sobolev_norm_sq,
)
from tamed_ns.taming import TamingProfile, eval_g

from conftest import velocity


def smooth_field(grid, seed=0, scale=1.0):
    """Divergence-free random field inside the dealiased band."""
    v = random_field(grid, seed, scale)
    c = v.coeffs * grid.waves.dealias_mask * np.exp(-grid.waves.ksq / 8.0)
    return leray_project(v.with_coeffs(c))


def _fd4(f, axis, h):
    return (
        -np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis) - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)
    ) / (12 * h)


def test_convective_term_against_finite_differences():
    grid = GridSpec(64)
    x, y, z = grid.mesh()
    u = np.stack([np.sin(x) * np.cos(2 * y), np.cos(z), np.sin(x + y) * 0.5])
    v = SpectralVelocity.from_physical(grid, u)
    adv = np.zeros_like(u)
    for i in range(3):
        for j in range(3):
            adv[j] += u[i] * _fd4(u[j], i, grid.dx)
    ref = leray_project(SpectralVelocity.from_physical(grid, adv))
    ours = convective_term(v)
    diff = ours.with_coeffs(ours.coeffs - ref.coeffs)
    assert math.sqrt(sobolev_norm_sq(diff, 0) / sobolev_norm_sq(ref, 0)) < 1e-4


def test_convective_term_shear_is_zero():
    grid = GridSpec(16)
    v = velocity(grid, lambda x, y, z: (np.sin(y), 0 * x, 0 * x))
    assert np.max(np.abs(convective_term(v).coeffs)) < 1e-15


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_convective_term_is_energy_neutral(seed):
    # with 3K < M every product is alias-free and neutrality holds to round-off
    grid = GridSpec(32)
    v = smooth_field(grid, seed, scale=3.0)
    b = convective_term(v)
    scale = math.sqrt(sobolev_norm_sq(v, 0) * sobolev_norm_sq(b, 0))
    assert abs(inner_product(v, b)) < 1e-13 * scale


@pytest.mark.parametrize("M", [24, 30, 48])
def test_energy_neutrality_when_three_divides_m(M):
    # K = M/3 lets the edge modes alias onto themselves, so only the looser bound applies
    grid = GridSpec(M)
    v = smooth_field(grid, 11, scale=3.0)
    b = convective_term(v)
    assert abs(inner_product(v, b)) <= 1e-8 * sobolev_norm_sq(v, 1) ** 1.5


def test_taming_term_pointwise():
    grid = GridSpec(16)
    a = 2.0
    v = velocity(grid, lambda x, y, z: (a * np.sin(y), 0 * x, 0 * x))
    prof = TamingProfile(1.0)
    out = taming_term(v, prof)
    u = v.to_physical()
    r = u[0] ** 2
    expected = leray_project(
        SpectralVelocity.from_physical(grid, np.stack([eval_g(prof, r) * u[0], 0 * r, 0 * r]))
    ).coeffs * grid.waves.dealias_mask
    assert np.max(np.abs(out.coeffs - expected)) < 1e-14


def test_taming_term_vanishes_below_threshold():
    grid = GridSpec(16)
    v = smooth_field(grid, 3)
    sup2 = float(np.max(np.sum(v.to_physical() ** 2, axis=0)))
    out = taming_term(v, TamingProfile(sup2 * 1.01))
    assert not out.coeffs.any()
    assert not taming_term(v, TamingProfile.disabled()).coeffs.any()


def test_taming_term_dissipates():
    grid = GridSpec(16)
    v = smooth_field(grid, 4, scale=5.0)
    t = taming_term(v, TamingProfile(0.0))
    assert inner_product(v, t) > 0


def test_rhs_breakdown_matches_fused_path():
    grid = GridSpec(16)
    v = smooth_field(grid, 5, 2.0)
    prof = TamingProfile(0.5, 0.8)
    f = Forcing("time_periodic", 0.3, (ForcingMode((1, 0, 0), 1, 1.0 + 0.5j),), omega=2.0)
    b = rhs(v, 0.4, prof, f)
    fused = explicit_rhs_coeffs(v.coeffs, 0.4, grid, prof, f)
    assert np.max(np.abs(b.explicit().coeffs - fused)) < 1e-13
    assert np.array_equal(b.diffusion_multiplier(), -0.8 * grid.waves.ksq)


def test_rhs_rejects_raw_arrays():
    with pytest.raises(ConfigurationError):
        rhs(np.zeros((3, 8, 8, 5)), 0.0, TamingProfile(1.0), Forcing())


def test_forcing_mode_convention():
    grid = GridSpec(16)
    f = Forcing("steady", 2.0, (ForcingMode((0, 1, 0), 0, -1j),))
    x, y, z = grid.mesh()
    # Re(-i e^{iy}) = sin y, scaled by the amplitude
    assert np.max(np.abs(f.at(grid, 0.0).to_physical()[0] - 2 * np.sin(y))) < 1e-14
    g = Forcing("time_periodic", 1.0, f.modes, omega=3.0)
    assert g.time_factor(0.5) == pytest.approx(math.cos(1.5))
    assert g.time_factor_derivative(0.5) == pytest.approx(-3 * math.sin(1.5))
    assert Forcing().is_zero


def test_forcing_validation():
    with pytest.raises(ConfigurationError):
        Forcing("gusty")
    with pytest.raises(ConfigurationError):
        Forcing("steady", 1.0, (ForcingMode((0, 0, 0), 0, 1.0),))
    with pytest.raises(ConfigurationError):
        Forcing("steady", 1.0, (ForcingMode((1, 0, 0), 3, 1.0),))
    with pytest.raises(ConfigurationError):
        Forcing("steady", 1.0, (ForcingMode((9, 0, 0), 1, 1.0),)).pattern(GridSpec(16))


def test_pressure_taylor_green_analytic():
    # for TG (w = 0 component) the pressure is a^2/16 (cos 2x + cos 2y)(cos 2z + 2), sign set by +grad p
    grid = GridSpec(32)
    a = 1.3
    v = velocity(
        grid,
        lambda x, y, z: (a * np.sin(x) * np.cos(y) * np.cos(z), -a * np.cos(x) * np.sin(y) * np.cos(z), 0 * x),
    )
    p = recover_pressure(v, TamingProfile.disabled()).to_physical()
    x, y, z = grid.mesh()
    classic = a**2 / 16 * (np.cos(2 * x) + np.cos(2 * y)) * (np.cos(2 * z) + 2)
    classic -= classic.mean()
    assert np.max(np.abs(p + classic)) < 1e-13


def test_pressure_removes_gradient_part():
    grid = GridSpec(16)
    v = smooth_field(grid, 6, 2.0)
    prof = TamingProfile(0.2)
    w = SpectralVelocity.from_physical(grid, nonlinear_physical(v, prof))
    p = recover_pressure(v, prof)
    grad_p = np.stack([1j * k * p.coeffs for k in grid.waves.k])
    # w - grad p is divergence free, and equals P w
    assert np.max(np.abs(w.coeffs - grad_p - leray_project(w).coeffs)) < 1e-12
    assert abs(p.coeffs[0, 0, 0]) == 0.0


def _fd2_laplacian(p, h):
    return sum(np.roll(p, 1, a) - 2 * p + np.roll(p, -1, a) for a in range(3)) / h**2


def test_pressure_poisson_second_order():
    errs = []
    for M in (32, 64):
        grid = GridSpec(M)
        v = velocity(
            grid,
            lambda x, y, z: (np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), 0 * x),
        )
        prof = TamingProfile(4.0)  # sup|u|^2 = 1, so g vanishes and p is a trig polynomial
        p = recover_pressure(v, prof).to_physical()
        w = SpectralVelocity.from_physical(grid, nonlinear_physical(v, prof))
        div = sum(inverse(1j * k * w.coeffs[i], M) for i, k in enumerate(grid.waves.k))
        errs.append(np.max(np.abs(_fd2_laplacian(p, grid.dx) - div)))
    assert math.log2(errs[0] / errs[1]) >= 1.8
