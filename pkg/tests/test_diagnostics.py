import numpy as np
import pytest

from bgkhydro.bgk import SolverAbort
from bgkhydro.diagnostics import (
    REPORT_COLUMNS,
    ckp_chain,
    dlogM_material_derivative,
    fit_gronwall,
    macro_error_terms,
    monitor_assumptions,
    read_report_csv,
    rei_terms,
    sample_phase_points,
    traceless_strain,
    verify_dlogM,
    verify_rei_over_run,
    write_report_csv,
)
from bgkhydro.euler import EulerState, Gradients
from bgkhydro.fields import KineticState, MacroFields, eval_maxwellian, maxwellian_values
from bgkhydro.grid import make_grid
from bgkhydro.harness import RunConfig, run_coupled


def unit(n, d=1, u=0.0, theta=1.0):
    return MacroFields(np.ones(n), np.full((n, d), u), np.full(n, theta))


def wavy_euler(grid):
    x = grid.x_nodes[:, 0]
    m = MacroFields(1 + 0.1 * np.sin(2 * np.pi * x), 0.2 * np.cos(2 * np.pi * x), 1 + 0.1 * np.sin(2 * np.pi * x))
    return EulerState(grid, m)


def test_dlogM_vanishes_on_global_maxwellian():
    g = make_grid(1, 16, 1.0, 32, 8.0)
    e = EulerState(g, unit(16, u=0.3, theta=1.4))
    vals = dlogM_material_derivative(e, np.arange(16), np.linspace(-5, 5, 16)[:, None])
    assert np.max(np.abs(vals)) < 1e-13


def test_dlogM_2d_contraction():
    g = make_grid(2, 4, 1.0, 2, 1.0)
    e = EulerState(g, unit(g.n_x, d=2))
    gval = 0.7
    grad_u = np.zeros((g.n_x, 2, 2))
    grad_u[:, 0, 0] = gval
    grads = Gradients(grad_u, np.zeros((g.n_x, 2)), 0.0, gval, 0.0)
    out = dlogM_material_derivative(e, np.array([0]), np.array([[1.0, 0.0]]), grads)
    assert out[0] == pytest.approx(gval / 2)


def test_traceless_strain_vanishes_in_1d():
    assert np.all(traceless_strain(np.random.default_rng(0).random((5, 1, 1))) == 0)


def test_verify_dlogM_uniform_and_tail():
    g = make_grid(1, 32, 1.0, 64, 8.0)
    e = EulerState(g, unit(32))
    pts = sample_phase_points(g, 100, np.random.default_rng(0))
    assert verify_dlogM(e, 1e-3, pts).max_residual < 1e-12
    wavy = wavy_euler(make_grid(1, 64, 1.0, 64, 8.0))
    bulk = sample_phase_points(wavy.grid, 200, np.random.default_rng(1))
    tail = (bulk[0], np.full_like(bulk[1], wavy.grid.v_max))
    for pts in (bulk, tail):
        coarse = verify_dlogM(wavy, 2e-4, pts).max_residual
        fine = verify_dlogM(wavy, 1e-4, pts).max_residual
        assert fine < 1e-5 and 3.0 < coarse / fine < 5.0


def test_rei_terms_at_target_vanish():
    g = make_grid(1, 32, 1.0, 64, 8.0)
    e = wavy_euler(g)
    f = eval_maxwellian(e.macro, g)
    rep = rei_terms(f, e, 1e-2)
    for name in ("H", "H_f_Mf", "H_Mf_M", "D_eps", "R_u", "R_theta", "R_theta_max", "R_theta_extra"):
        assert abs(getattr(rep, name)) < 1e-10, name


def offset_state(g, e):
    m = e.macro.copy()
    m.u = m.u + 0.1
    m.theta = m.theta * 1.2
    f = maxwellian_values(m, g) * (1 + 0.1 * np.tanh(g.v_nodes[:, 0]))[None, :]
    return KineticState(g, f / (f.sum() * g.x_weight * g.v_weight))


def test_rei_terms_consistency_1d():
    g = make_grid(1, 32, 1.0, 128, 9.0)
    e = wavy_euler(g)
    rep = rei_terms(offset_state(g, e), e, 1e-2)
    assert rep.R_u == rep.R_u_max == rep.R_u_extra == 0.0
    assert abs(rep.H - rep.H_f_Mf - rep.H_Mf_M) < 1e-8
    assert rep.maxwellian_part_mismatch < 1e-8
    assert rep.R_theta == pytest.approx(rep.R_theta_max + rep.R_theta_extra, abs=1e-13)
    assert rep.dHdt_id == pytest.approx(-rep.D_eps / 1e-2 + rep.R_u + rep.R_theta)
    assert rep.D_eps >= 0 and rep.step1_ok and rep.step2_ok and rep.phi_growth_ratio <= 1
    assert rep.H_Mf_M == pytest.approx(rep.macro_total, rel=1e-6)
    assert all(link.ok for link in ckp_chain(rep))


def test_rei_terms_2d_stress_active():
    g = make_grid(2, 8, 1.0, 24, 8.0)
    x, y = g.x_nodes[:, 0], g.x_nodes[:, 1]
    e = EulerState(g, MacroFields(np.ones(g.n_x), np.stack([0.1 * np.sin(2 * np.pi * y), 0 * x], 1), np.ones(g.n_x)))
    m = e.macro.copy()
    m.u = m.u + np.array([0.1, -0.05])
    vx, vy = g.v_nodes[:, 0], g.v_nodes[:, 1]
    shear = np.cos(2 * np.pi * y)[:, None]
    f = maxwellian_values(m, g) * (1 + 0.2 * shear * (vx * vy * np.exp(-g.v_sq / 8))[None, :])
    f = KineticState(g, f / (f.sum() * g.x_weight * g.v_weight))
    rep = rei_terms(f, e, 1e-2)
    assert abs(rep.R_u) > 1e-6
    assert rep.maxwellian_part_mismatch < 1e-8
    assert rep.step1_ok and rep.step2_ok


def test_time_mismatch_rejected():
    g = make_grid(1, 8, 1.0, 32, 8.0)
    e = EulerState(g, unit(8), time=1.0)
    with pytest.raises(ValueError):
        rei_terms(eval_maxwellian(unit(8), g), e, 1e-2, time_tol=1e-3)


def test_assumption_monitor():
    g = make_grid(1, 8, 1.0, 256, 8.0)
    e = EulerState(g, unit(8))
    rec = monitor_assumptions(eval_maxwellian(unit(8), g), e)
    assert rec.m6 == pytest.approx(15.0, abs=1e-6)
    assert rec.sup_grad_u == 0 and rec.sup_grad_logtheta == 0 and rec.sup_u == 0


def test_macro_error_examples():
    g = make_grid(1, 8, 1.0, 2, 1.0)
    base = unit(8)
    assert macro_error_terms(base, base, g) == (0.0,) * 6
    moved = macro_error_terms(unit(8, u=0.2), base, g)
    assert moved.velocity_term == pytest.approx(0.02) and moved.l1_mom == pytest.approx(0.2)
    hot = macro_error_terms(unit(8, theta=2.0), base, g)
    assert hot.temperature_term == pytest.approx(0.153426, abs=1e-6)


def test_rei_residual_requires_three_uniform_snapshots():
    with pytest.raises(ValueError):
        verify_rei_over_run([])


def test_equilibrium_run_identity_trivial():
    r = run_coupled(RunConfig(scenario="equilibrium", x_count=16, v_count=48, t_final=0.01, observe_stride=1))
    res = verify_rei_over_run(r.reports)
    assert np.max(np.abs(res.dHdt_fd)) < 1e-10 and np.max(np.abs(res.dHdt_identity)) < 1e-10
    assert max(abs(h) for h in r.series("H")) < 1e-10


def test_residual_converges_with_dt():
    cfg = dict(x_count=32, v_count=32, t_final=0.02, observe_stride=1)
    coarse = verify_rei_over_run(run_coupled(RunConfig(dt=4e-4, **cfg)).reports).max_rel
    fine = verify_rei_over_run(run_coupled(RunConfig(dt=2e-4, **cfg)).reports).max_rel
    assert 3.0 < coarse / fine < 5.0


def test_sampled_projection_loses_mass_on_coarse_grid():
    cfg = dict(x_count=32, v_count=16, t_final=0.02, dt=4e-4, observe_stride=10)
    run_coupled(RunConfig(projection_mode="conservative", **cfg))
    with pytest.raises(SolverAbort):
        run_coupled(RunConfig(projection_mode="sampled", **cfg))


def test_gronwall_fit():
    t = np.linspace(0, 1, 11)
    H = 0.01 * (np.exp(t) - 1)
    fit = fit_gronwall(t, H, 0.01 * np.exp(t), 0.01, h0=0.0)
    assert fit.c_fit == pytest.approx(1.0, rel=1e-12)
    assert fit.holds and fit.bound == pytest.approx(np.e * 0.01)


def test_report_csv_roundtrip(tmp_path):
    g = make_grid(1, 16, 1.0, 64, 8.0)
    e = wavy_euler(g)
    rep = rei_terms(offset_state(g, e), e, 1e-2)
    write_report_csv([rep, rep], tmp_path / "r.csv")
    rows = read_report_csv(tmp_path / "r.csv")
    assert list(rows[0]) == REPORT_COLUMNS
    assert rows[1]["H"] == rep.H
