import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tamed_ns.errors import ConfigurationError
from tamed_ns.spectral import (
    GridSpec,
    ScalarSpectralField,
    SpectralVelocity,
    dealias,
    divergence_ratio,
    gradient_norm_sq,
    gradient_physical,
    inner_product,
    is_divergence_free,
    laplacian_norm_sq,
    leray_project,
    lp_norm,
    random_field,
    sobolev_norm_sq,
    sup_norm,
)

from conftest import velocity

PI3 = math.pi**3


@pytest.mark.parametrize("size", [7, 6, 0, -8, 9])
def test_grid_rejects_bad_sizes(size):
    with pytest.raises(ConfigurationError):
        GridSpec(size)


def test_grid_shapes():
    g = GridSpec(12)
    assert g.spectral_shape == (12, 12, 7)
    assert g.physical_shape == (12, 12, 12)
    assert g.dealias_bound == 4
    assert g.dx == pytest.approx(2 * math.pi / 12)


def test_round_trip_is_exact(grid16):
    v = random_field(grid16, seed=3)
    again = SpectralVelocity.from_physical(grid16, v.to_physical())
    assert np.max(np.abs(again.coeffs - v.coeffs)) < 1e-14


def test_coefficients_are_read_only(grid16):
    v = random_field(grid16, seed=1)
    with pytest.raises(ValueError):
        v.coeffs[0, 0, 0, 0] = 1.0


def test_shape_mismatch_is_a_configuration_error(grid16):
    with pytest.raises(ConfigurationError):
        SpectralVelocity(np.zeros((3, 8, 8, 5), complex), grid16)


def test_leray_removes_pure_gradient(grid16):
    # grad(sin x cos y) has no solenoidal part
    v = velocity(grid16, lambda x, y, z: (np.cos(x) * np.cos(y), -np.sin(x) * np.sin(y), 0 * z))
    assert np.max(np.abs(leray_project(v).coeffs)) < 1e-15


def test_leray_keeps_solenoidal_field(grid16):
    v = velocity(grid16, lambda x, y, z: (np.sin(y), np.cos(z), np.sin(x)))
    assert np.max(np.abs(leray_project(v).coeffs - v.coeffs)) < 1e-15
    assert is_divergence_free(v)


def test_leray_single_mode_example(grid16):
    # u = (cos x, cos x, 0) -> P u = (0, cos x, 0)
    v = velocity(grid16, lambda x, y, z: (np.cos(x), np.cos(x), 0 * z))
    w = leray_project(v).to_physical()
    x, y, z = grid16.mesh()
    assert np.max(np.abs(w[0])) < 1e-14
    assert np.max(np.abs(w[1] - np.cos(x))) < 1e-14


def test_leray_idempotent_and_orthogonal(grid16):
    v = random_field(grid16, seed=7)
    p = leray_project(v)
    pp = leray_project(p)
    assert np.max(np.abs(pp.coeffs - p.coeffs)) < 1e-15
    q = v.with_coeffs(v.coeffs - p.coeffs)
    assert abs(inner_product(p, q)) < 1e-12 * sobolev_norm_sq(v, 0)
    assert divergence_ratio(p) < 1e-14
    assert not is_divergence_free(v)


def test_norms_of_shear_mode(grid16):
    v = velocity(grid16, lambda x, y, z: (np.sin(y), 0 * x, 0 * x))
    # ||sin y||^2 over the box is 4 pi^3; each derivative multiplies by |k|^2 = 1
    assert sobolev_norm_sq(v, 0) == pytest.approx(4 * PI3, rel=1e-14)
    assert sobolev_norm_sq(v, 1) == pytest.approx(8 * PI3, rel=1e-14)
    assert sobolev_norm_sq(v, 2) == pytest.approx(16 * PI3, rel=1e-14)
    assert gradient_norm_sq(v) == pytest.approx(4 * PI3, rel=1e-14)
    assert laplacian_norm_sq(v) == pytest.approx(4 * PI3, rel=1e-14)


def test_norms_of_higher_mode(grid16):
    # cos(2x + 3z) in the second component: |k|^2 = 13
    v = velocity(grid16, lambda x, y, z: (0 * x, np.cos(2 * x + 3 * z), 0 * x))
    assert sobolev_norm_sq(v, 0) == pytest.approx(4 * PI3, rel=1e-14)
    assert sobolev_norm_sq(v, 1) == pytest.approx(4 * PI3 * 14, rel=1e-14)
    assert sobolev_norm_sq(v, 2) == pytest.approx(4 * PI3 * 14**2, rel=1e-14)


def test_l2_norm_matches_grid_quadrature(grid16):
    v = random_field(grid16, seed=2)
    u = v.to_physical()
    quad = (2 * math.pi) ** 3 * np.mean(np.sum(u * u, axis=0))
    assert sobolev_norm_sq(v, 0) == pytest.approx(quad, rel=1e-12)
    assert lp_norm(v, 2) ** 2 == pytest.approx(quad, rel=1e-12)


@pytest.mark.parametrize("m", [-1, 3])
def test_sobolev_order_range(grid16, m):
    with pytest.raises(ConfigurationError):
        sobolev_norm_sq(random_field(grid16, 0), m)


def test_inner_product_rejects_mixed_grids():
    a = random_field(GridSpec(8), 0)
    b = random_field(GridSpec(16), 0)
    with pytest.raises(ConfigurationError):
        inner_product(a, b)


def test_dealias_bound(grid16):
    v = dealias(random_field(grid16, seed=4))
    waves = grid16.waves
    outside = ~waves.dealias_mask
    assert np.all(v.coeffs[:, outside] == 0)
    kept = np.abs(v.coeffs[:, waves.dealias_mask])
    assert np.count_nonzero(kept) > 0


def test_dealias_keeps_band_limited(grid16):
    v = velocity(grid16, lambda x, y, z: (np.sin(5 * y), np.cos(5 * z), 0 * x))
    assert np.max(np.abs(dealias(v).coeffs - v.coeffs)) < 1e-15
    w = velocity(grid16, lambda x, y, z: (np.sin(6 * y), 0 * x, 0 * x))
    assert np.max(np.abs(dealias(w).coeffs)) < 1e-15


def test_sup_norm_taylor_green(grid16):
    a = 1.7
    v = velocity(grid16, lambda x, y, z: (a * np.sin(x) * np.cos(y) * np.cos(z),
                                         -a * np.cos(x) * np.sin(y) * np.cos(z), 0 * x))
    assert sup_norm(v) == pytest.approx(a, rel=1e-14)


def test_gradient_physical(grid16):
    v = velocity(grid16, lambda x, y, z: (np.sin(y), np.cos(2 * z), 0 * x))
    g = gradient_physical(v)
    x, y, z = grid16.mesh()
    assert g.shape == (3, 3) + grid16.physical_shape
    assert np.max(np.abs(g[1, 0] - np.cos(y))) < 1e-13
    assert np.max(np.abs(g[2, 1] + 2 * np.sin(2 * z))) < 1e-13
    assert np.max(np.abs(g[0, 0])) < 1e-13


def test_interpolation_between_grid_points(grid16):
    # a band-limited field evaluated off-grid via its Fourier series
    v = velocity(grid16, lambda x, y, z: (np.sin(x + 2 * y), 0 * x, np.cos(3 * z)))
    c = v.coeffs
    point = np.array([0.3, 1.1, 2.9])
    kx, ky, kz = (np.broadcast_to(k, c.shape[1:]) for k in grid16.waves.k)
    phase = np.exp(1j * (kx * point[0] + ky * point[1] + kz * point[2]))
    w = grid16.waves.weight
    # kz > 0 modes stand in for their conjugates; the kz = 0 plane is complete
    val = [np.sum(w * np.real(c[j] * phase)) for j in range(3)]
    assert val[0] == pytest.approx(math.sin(0.3 + 2.2), abs=1e-13)
    assert val[2] == pytest.approx(math.cos(3 * 2.9), abs=1e-13)


def test_scalar_field_round_trip(grid16):
    x, y, z = grid16.mesh()
    p = np.cos(x) * np.sin(2 * y)
    s = ScalarSpectralField.from_physical(grid16, p)
    assert np.max(np.abs(s.to_physical() - p)) < 1e-14


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_projection_properties(seed, scale):
    grid = GridSpec(8)
    v = random_field(grid, seed, scale)
    p = leray_project(v)
    assert divergence_ratio(p) < 1e-13
    assert sobolev_norm_sq(p, 0) <= sobolev_norm_sq(v, 0) * (1 + 1e-13)
    assert np.max(np.abs(leray_project(p).coeffs - p.coeffs)) <= 1e-14 * np.max(np.abs(p.coeffs))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_norm_ordering(seed):
    v = leray_project(random_field(GridSpec(8), seed))
    h0, h1, h2 = (sobolev_norm_sq(v, m) for m in range(3))
    assert h0 <= h1 <= h2
    assert h1 == pytest.approx(h0 + gradient_norm_sq(v), rel=1e-12)
