import numpy as np
import pytest

from bgkhydro.bgk import spectral_shift
from bgkhydro.euler import (
    EulerBlowup,
    EulerError,
    EulerState,
    euler_rhs,
    euler_step,
    gradients,
    primitive,
    read_euler_csv,
    run_euler,
    write_euler_csv,
)
from bgkhydro.fields import MacroFields
from bgkhydro.grid import make_grid


def state1(n=64, rho=None, u=None, theta=None, L=1.0):
    g = make_grid(1, n, L, 2, 1.0)
    x = g.x_nodes[:, 0]
    one = np.ones(n)
    return EulerState(g, MacroFields(one if rho is None else rho(x), 0 * one if u is None else u(x),
                                     one if theta is None else theta(x)))


def test_uniform_state_is_steady():
    s = state1(rho=lambda x: 0 * x + 2.0, u=lambda x: 0 * x + 0.3, theta=lambda x: 0 * x + 1.5)
    assert np.max(np.abs(euler_rhs(s))) < 1e-13
    out = euler_step(s, 1e-2)
    np.testing.assert_allclose(out.conservative, s.conservative, atol=1e-13)


def test_pressure_gradient_drives_momentum():
    s = state1(rho=lambda x: 1 + 0.1 * np.sin(2 * np.pi * x))
    x = s.grid.x_nodes[:, 0]
    rhs = euler_rhs(s)
    assert np.max(np.abs(rhs[:, 1] + 0.2 * np.pi * np.cos(2 * np.pi * x))) < 1e-12
    assert np.max(np.abs(rhs[:, 0])) < 1e-13


def test_sound_speed():
    amp, c = 1e-4, np.sqrt(3.0)
    s = state1(128, rho=lambda x: 1 + amp * np.sin(2 * np.pi * x), u=lambda x: c * amp * np.sin(2 * np.pi * x),
               theta=lambda x: 1 + 2 * amp * np.sin(2 * np.pi * x))
    T, n = 0.1, 200
    end = run_euler(s, T / n, n)[-1]
    mode0 = np.fft.fft(s.macro.rho)[1]
    mode1 = np.fft.fft(end.macro.rho)[1]
    speed = -np.angle(mode1 / mode0) / (2 * np.pi * T)
    assert speed == pytest.approx(c, rel=1e-2)


def test_galilean_boost():
    rho = lambda x: 1 + 0.1 * np.sin(2 * np.pi * x)
    u = lambda x: 0.05 * np.cos(2 * np.pi * x)
    U0, T, n = 0.4, 0.05, 100
    rest = run_euler(state1(rho=rho, u=u), T / n, n)[-1]
    moving = run_euler(state1(rho=rho, u=lambda x: u(x) + U0), T / n, n)[-1]
    g = rest.grid
    shifted = spectral_shift(rest.macro.rho[:, None], g, np.array([[U0 * T]]))[:, 0]
    assert np.max(np.abs(moving.macro.rho - shifted)) < 1e-9


def test_spectral_refinement():
    rho = lambda x: 1 + 0.2 * np.sin(2 * np.pi * x)
    u = lambda x: 0.1 * np.cos(2 * np.pi * x)
    theta = lambda x: 1 + 0.1 * np.sin(4 * np.pi * x)
    T, n = 0.05, 100
    ref = run_euler(state1(512, rho, u, theta), T / n, n)[-1].macro.rho[::8]
    e64 = np.max(np.abs(run_euler(state1(64, rho, u, theta), T / n, n)[-1].macro.rho - ref))
    coarse = run_euler(state1(32, rho, u, theta), T / n, n)[-1].macro.rho
    e32 = np.max(np.abs(coarse - ref[::2]))
    assert e32 / max(e64, 1e-16) > 10


def test_conservation_over_run():
    s = state1(rho=lambda x: 1 + 0.1 * np.sin(2 * np.pi * x), u=lambda x: 0.1 * np.sin(2 * np.pi * x))
    end = run_euler(s, 1e-3, 100)[-1]
    np.testing.assert_allclose(end.totals(), s.totals(), rtol=1e-9, atol=1e-12)


def test_gradient_oracles():
    s = state1(u=lambda x: np.sin(2 * np.pi * x), theta=lambda x: np.exp(0.1 * np.sin(2 * np.pi * x)))
    x = s.grid.x_nodes[:, 0]
    gr = gradients(s)
    assert np.max(np.abs(gr.grad_u[:, 0, 0] - 2 * np.pi * np.cos(2 * np.pi * x))) < 1e-10
    assert np.max(np.abs(gr.grad_logtheta[:, 0] - 0.2 * np.pi * np.cos(2 * np.pi * x))) < 1e-10
    flat = gradients(state1())
    assert flat.sup_grad_u == 0.0 and flat.sup_grad_logtheta == 0.0


def test_gradient_layout_2d():
    g = make_grid(2, 16, 1.0, 2, 1.0)
    x, y = g.x_nodes[:, 0], g.x_nodes[:, 1]
    u = np.stack([np.sin(2 * np.pi * y), np.zeros_like(x)], axis=1)
    s = EulerState(g, MacroFields(np.ones(g.n_x), u, np.ones(g.n_x)))
    gr = gradients(s)
    # grad_u[:, i, j] = d_i u_j
    assert np.max(np.abs(gr.grad_u[:, 1, 0] - 2 * np.pi * np.cos(2 * np.pi * y))) < 1e-10
    assert np.max(np.abs(gr.grad_u[:, 0, 0])) < 1e-12


def test_blowup_guard_reports_time():
    s = state1(rho=lambda x: 1 + 0.5 * np.sin(2 * np.pi * x), u=lambda x: 0.5 * np.sin(2 * np.pi * x))
    with pytest.raises(EulerBlowup) as info:
        run_euler(s, 1e-3, 1000, blowup_factor=2.0)
    assert 0 < info.value.time < 1.0


def test_positivity_loss_is_an_error():
    U = np.array([[1.0, 0.0, -1.0]])
    with pytest.raises(EulerError):
        primitive(U, 1)


@pytest.mark.parametrize("dim", [1, 2])
def test_csv_roundtrip(tmp_path, dim):
    g = make_grid(dim, 8, 2.0, 2, 1.0)
    x = g.x_nodes[:, 0]
    m = MacroFields(1 + 0.1 * np.sin(np.pi * x), np.tile(0.1 * np.cos(np.pi * x)[:, None], (1, dim)),
                    1 + 0.05 * np.cos(np.pi * x))
    s = EulerState(g, m, 0.25)
    write_euler_csv([s, euler_step(s, 1e-3)], tmp_path / "e.csv")
    back = read_euler_csv(tmp_path / "e.csv")
    assert back.time == 0.25 and back.grid.x_count == 8 and back.grid.x_length == pytest.approx(2.0)
    np.testing.assert_array_equal(back.macro.rho, m.rho)
    np.testing.assert_array_equal(back.macro.u, m.u)


def test_csv_missing_columns(tmp_path):
    (tmp_path / "bad.csv").write_text("t,x,rho\n0,0,1\n")
    with pytest.raises(ValueError):
        read_euler_csv(tmp_path / "bad.csv")
