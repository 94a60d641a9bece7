import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughpat.errors import DegenerateSurfaceError, InvalidArgument
from roughpat.fdm import build_grid
from roughpat.surface import (
    WaveSurface,
    diffusion_eigensystem,
    eval_surface,
    make_rng,
    make_wave_surface,
    metric_fields,
    sample_wave_coefficients,
    scale_to_amplitude,
)


def brute_height(s, x, y):
    z = 0.0
    for i, m in enumerate(range(-s.M, s.M + 1)):
        for j, n in enumerate(range(-s.N, s.N + 1)):
            z += s.coeffs[i, j] * np.cos(2 * np.pi * (m * x + n * y) + s.phases[i, j])
    return z


def test_rng_is_pcg64_and_streams_differ():
    a = make_rng(7).standard_normal(5)
    b = np.random.Generator(np.random.PCG64(7)).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(make_rng(7, 1).standard_normal(5), a)


def test_coefficient_shapes_and_phase_range():
    pre, ph = sample_wave_coefficients(3, 2, seed=1)
    assert pre.shape == ph.shape == (7, 5)
    assert ph.min() >= 0 and ph.max() < np.pi


def test_decay_zeroes_constant_mode():
    pre, _ = sample_wave_coefficients(2, 2, beta=1.0, seed=1)
    assert pre[2, 2] == 0.0


def test_negative_frequency_rejected():
    with pytest.raises(InvalidArgument):
        sample_wave_coefficients(-1, 2)


def test_height_matches_double_sum():
    grid = build_grid(1.0, 7, 7)
    s = make_wave_surface(2, 3, 0.3, grid, seed=4)
    pts = np.array([[0.1, -0.7], [0.33, 0.5], [-1.0, 1.0]])
    z, _, _ = eval_surface(s, pts)
    expect = [brute_height(s, x, y) for x, y in pts]
    np.testing.assert_allclose(z, expect, atol=1e-13)


def test_gradient_and_hessian_match_finite_differences():
    grid = build_grid(1.0, 11, 11)
    s = make_wave_surface(3, 2, 0.5, grid, seed=2)
    x, y, e = np.array([0.123]), np.array([-0.456]), 1e-6
    zx, zy = s.gradient(x, y)
    assert abs(zx[0] - (s.height(x + e, y) - s.height(x - e, y))[0] / (2 * e)) < 1e-6
    assert abs(zy[0] - (s.height(x, y + e) - s.height(x, y - e))[0] / (2 * e)) < 1e-6
    zxx, zxy, zyy = s.hessian(x, y)
    dx = [(p - q)[0] / (2 * e) for p, q in zip(s.gradient(x + e, y), s.gradient(x - e, y))]
    dy = [(p - q)[0] / (2 * e) for p, q in zip(s.gradient(x, y + e), s.gradient(x, y - e))]
    assert abs(zxx[0] - dx[0]) < 1e-4
    assert abs(zxy[0] - dy[0]) < 1e-4
    assert abs(zyy[0] - dy[1]) < 1e-4


def test_zero_amplitude_is_flat():
    grid = build_grid(1.0, 9, 9)
    s = make_wave_surface(4, 4, 0.0, grid, seed=3)
    assert np.all(s.height(grid.X, grid.Y) == 0)
    zx, zy = s.gradient(grid.X, grid.Y)
    assert np.all(zx == 0) and np.all(zy == 0)


def test_scaling_edge_cases():
    assert scale_to_amplitude(np.zeros(4), 0.0) == 0.0
    with pytest.raises(DegenerateSurfaceError):
        scale_to_amplitude(np.zeros(4), 0.1)
    with pytest.raises(InvalidArgument):
        scale_to_amplitude(np.ones(4), -1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 6), st.integers(0, 6), st.floats(1e-4, 5.0), st.integers(0, 10_000))
def test_amplitude_scaling_property(M, N, delta, seed):
    grid = build_grid(1.0, 13, 13)
    s = make_wave_surface(M, N, delta, grid, seed=seed)
    z = s.height(grid.X, grid.Y)
    assert abs(np.max(np.abs(z)) - delta) <= 1e-12 * delta


def test_periodicity_of_height():
    grid = build_grid(1.0, 17, 17)
    s = make_wave_surface(3, 4, 0.2, grid, seed=9)
    Z = grid.to_2d(s.height(grid.X, grid.Y))
    np.testing.assert_allclose(Z[:, 0], Z[:, -1], atol=1e-13)
    np.testing.assert_allclose(Z[0, :], Z[-1, :], atol=1e-13)


def test_rescaled_keeps_the_draw():
    grid = build_grid(1.0, 15, 15)
    s = make_wave_surface(2, 2, 0.1, grid, seed=5)
    t = s.rescaled(0.2, grid.X, grid.Y)
    np.testing.assert_allclose(t.height(grid.X, grid.Y), 2 * s.height(grid.X, grid.Y), rtol=1e-12, atol=1e-15)
    np.testing.assert_array_equal(t.phases, s.phases)


def test_rescaled_without_pre_coeffs():
    s = WaveSurface(0, 1, np.array([[0.0, 1.0, 0.0]]), np.zeros((1, 3)))
    t = s.rescaled(0.5, np.linspace(-1, 1, 5), np.zeros(5))
    assert t.amplitude == 0.5


def test_metric_flat_is_identity():
    m = metric_fields(np.zeros(4), np.zeros(4))
    assert np.all(m.g == 1) and np.all(m.A1 == 1) and np.all(m.A4 == 1) and np.all(m.A2 == 0)


def _tensor(m, k):
    return np.array([[m.A1[k], m.A2[k]], [m.A2[k], m.A4[k]]])


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_diffusion_tensor_is_sqrt_g_inverse_metric(zx, zy):
    m = metric_fields(np.array([zx]), np.array([zy]))
    G = np.array([[m.g11[0], m.g12[0]], [m.g12[0], m.g22[0]]])
    A = _tensor(m, 0)
    np.testing.assert_allclose(A @ G, np.sqrt(m.g[0]) * np.eye(2), rtol=1e-12, atol=1e-12 * m.g[0])
    assert np.linalg.det(A) == pytest.approx(1.0, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_eigenpairs_against_numeric(zx, zy):
    m = metric_fields(np.array([zx]), np.array([zy]))
    e = diffusion_eigensystem(m, [zx], [zy])
    A = _tensor(m, 0)
    w = np.linalg.eigvalsh(A)
    assert w[1] == pytest.approx(e.lam_max[0], rel=1e-12)
    assert w[0] == pytest.approx(e.lam_min[0], rel=1e-12)
    np.testing.assert_allclose(A @ e.dir_max[0], e.lam_max[0] * e.dir_max[0], atol=1e-11 * e.lam_max[0])
    np.testing.assert_allclose(A @ e.dir_min[0], e.lam_min[0] * e.dir_min[0], atol=1e-11 * e.lam_max[0])
    assert abs(e.dir_max[0] @ e.dir_min[0]) < 1e-12


def test_flat_nodes_flagged_with_axes():
    e = diffusion_eigensystem(metric_fields(np.zeros(2), np.zeros(2)), np.zeros(2), np.zeros(2))
    assert e.flat.all()
    np.testing.assert_array_equal(e.dir_min, [[1, 0], [1, 0]])
    np.testing.assert_array_equal(e.lam_max, [1, 1])
