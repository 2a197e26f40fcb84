import numpy as np
import pytest

from bgkhydro.grid import (
    default_v_max,
    from_spatial_grid,
    integrate_v,
    integrate_x,
    integrate_xv,
    make_grid,
    spectral_derivative,
    to_spatial_grid,
)


def test_small_grid_arithmetic():
    g = make_grid(1, 4, 1.0, 4, 2.0)
    assert g.dx == 0.25 and g.dv == 1.0
    np.testing.assert_allclose(g.v_axis, [-1.5, -0.5, 0.5, 1.5])
    np.testing.assert_allclose(g.x_axis, [0.0, 0.25, 0.5, 0.75])


def test_counts_multiply_in_2d():
    g = make_grid(2, 8, 2 * np.pi, 16, 8.0)
    assert g.n_x == 64 and g.n_v == 256
    assert g.x_nodes.shape == (64, 2) and g.v_nodes.shape == (256, 2)


@pytest.mark.parametrize("dim", [1, 2])
def test_velocity_weights_fill_the_box(dim):
    g = make_grid(dim, 2, 1.0, 2, 1.0)
    assert np.isclose(g.v_weight * g.n_v, 2.0**dim, rtol=0, atol=1e-15)


@pytest.mark.parametrize("args", [(3, 4, 1.0, 4, 1.0), (1, 1, 1.0, 4, 1.0), (1, 4, 0.0, 4, 1.0),
                                  (1, 4, 1.0, 1, 1.0), (1, 4, 1.0, 4, -1.0)])
def test_rejects_bad_sizes(args):
    with pytest.raises(ValueError):
        make_grid(*args)


def test_constant_integrates_to_box_measure():
    g = make_grid(1, 2, 1.0, 64, 2.0)
    assert np.isclose(integrate_v(np.ones(g.n_v), g), 4.0)


def test_gaussian_moments():
    g = make_grid(1, 2, 1.0, 256, 8.0)
    v = g.v_axis
    gauss = np.exp(-0.5 * v**2) / np.sqrt(2 * np.pi)
    assert abs(integrate_v(gauss, g) - 1.0) < 1e-12
    assert abs(integrate_v(v**6 * gauss, g) - 15.0) < 1e-8


def test_integration_is_linear_and_checks_shapes(grid1):
    rng = np.random.default_rng(1)
    a, b = rng.random((grid1.n_x, grid1.n_v)), rng.random((grid1.n_x, grid1.n_v))
    lhs = integrate_xv(2 * a - 3 * b, grid1)
    assert np.isclose(lhs, 2 * integrate_xv(a, grid1) - 3 * integrate_xv(b, grid1), rtol=1e-14)
    with pytest.raises(ValueError):
        integrate_xv(a[:, :-1], grid1)
    with pytest.raises(ValueError):
        integrate_x(np.ones(grid1.n_x + 1), grid1)


def test_spatial_reshape_roundtrip():
    g = make_grid(2, 4, 1.0, 4, 1.0)
    field = np.arange(g.n_x, dtype=float)
    arr = to_spatial_grid(field, g)
    assert arr.shape == (4, 4)
    np.testing.assert_array_equal(from_spatial_grid(arr, g), field)


def test_spectral_derivative_of_sine():
    g = make_grid(1, 64, 1.0, 2, 1.0)
    x = g.x_nodes[:, 0]
    d = spectral_derivative(np.sin(2 * np.pi * x), g, 0)
    assert np.max(np.abs(d - 2 * np.pi * np.cos(2 * np.pi * x))) < 1e-10


def test_spectral_derivative_2d_axis():
    g = make_grid(2, 16, 2.0, 2, 1.0)
    x, y = g.x_nodes[:, 0], g.x_nodes[:, 1]
    field = np.sin(np.pi * x) * np.cos(np.pi * y)
    dy = spectral_derivative(field, g, 1)
    assert np.max(np.abs(dy + np.pi * np.sin(np.pi * x) * np.sin(np.pi * y))) < 1e-11


def test_default_v_max_rule():
    assert default_v_max(1.0, 4.0) == pytest.approx(17.0)
