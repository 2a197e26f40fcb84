"""Acceptance criteria 1-8 at their stated tolerances.

Each test appends one ``criterion N: PASS|FAIL ...`` line, printed in the
terminal summary. Run standalone with ``python tests/test_acceptance.py``.
"""
import functools
import sys
import time

import numpy as np
import pytest

from bgkhydro.diagnostics import ckp_chain, sample_phase_points, verify_dlogM, verify_rei_over_run
from bgkhydro.euler import EulerState, euler_step
from bgkhydro.harness import RunConfig, initial_states, run_coupled, run_sweep
from bgkhydro.verification import run_verification
from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

SWEEP = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]


def record(n, ok, detail, seconds=None):
    extra = f" [{seconds:.1f} s]" if seconds is not None else ""
    ACCEPTANCE_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}{extra}")
    return ok


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


@functools.cache
def verify_checks():
    return timed(run_verification, 0)


@functools.cache
def rei_run(dt):
    return timed(run_coupled, RunConfig(epsilon=1e-2, x_count=256, v_count=256, t_final=0.1, dt=dt, observe_stride=1))


@functools.cache
def sweep():
    return timed(run_sweep, RunConfig(observe_stride=10), SWEEP)


@functools.cache
def run_2d():
    cfg = RunConfig(scenario="default2d", dim=2, x_count=32, v_count=24, epsilon=1e-2, t_final=0.02, observe_stride=50)
    return timed(run_coupled, cfg)


def test_criterion_1_lemma_suite():
    checks, sec = verify_checks()
    by = {c.name: c for c in checks}
    wanted = ["tri_point", "psi_quadratic", "maxwellian_closed_form", "pythagoras", "ckp_pairs"]
    ok = all(by[n].passed for n in wanted) and sec < 60
    detail = ", ".join(f"{n}={by[n].measured:.2e}" for n in wanted)
    assert record(1, ok, detail, sec), detail


def test_criterion_2_material_derivative_fd():
    t0 = time.perf_counter()
    _, e = initial_states(RunConfig())
    for _ in range(200):
        e = euler_step(e, 1e-4)
    e = EulerState(e.grid, e.macro, 0.0)
    pts = sample_phase_points(e.grid, 1000, np.random.default_rng(0))
    coarse = verify_dlogM(e, 1e-4, pts).max_residual
    fine = verify_dlogM(e, 5e-5, pts).max_residual
    sec = time.perf_counter() - t0
    ratio = coarse / fine
    ok = coarse < 1e-6 and 3.0 <= ratio <= 5.0 and sec < 30
    assert record(2, ok, f"residual={coarse:.3e} halving ratio={ratio:.2f}", sec)


def test_criterion_3_moment_formulas():
    checks, _ = verify_checks()
    by = {c.name: c for c in checks}
    names = ["maxmom_stress_d1", "maxmom_heat_d1", "maxmom_stress_d2", "maxmom_heat_d2", "stress_vanishes_d1"]
    ok = all(by[n].passed for n in names)
    detail = ", ".join(f"{n}={by[n].measured:.2e}" for n in names)
    assert record(3, ok, detail), detail


def test_criterion_4_rei_residual():
    (r1, s1), (r2, s2) = rei_run(1e-4), rei_run(5e-5)
    m1 = verify_rei_over_run(r1.reports).max_rel
    m2 = verify_rei_over_run(r2.reports).max_rel
    ok = m1 < 5e-3 and m1 / m2 >= 3 and max(s1, s2) < 300
    assert record(4, ok, f"max rel mismatch {m1:.3e} (dt=1e-4), {m2:.3e} (dt=5e-5), ratio {m1 / m2:.2f}", s1 + s2)


def test_criterion_5_epsilon_scaling():
    res, sec = sweep()
    sup_h = [r.sup_H for r in res.records]
    decreasing = len(sup_h) == len(SWEEP) and all(a > b for a, b in zip(sup_h, sup_h[1:]))
    quantities = ["sup_l1_f_M", "sup_l1_Mf_M", "sup_l1_rho", "sup_l1_mom", "sup_l1_rhotheta"]
    monotone = all(
        all(getattr(a, q) > getattr(b, q) for a, b in zip(res.records, res.records[1:])) for q in quantities
    )
    chain = all(r.ckp_ok for r in res.records)
    slope_ok = res.slope is not None and 0.7 <= res.slope <= 1.3
    ok = decreasing and monotone and chain and slope_ok and sec < 1200
    slope = "none" if res.slope is None else f"{res.slope:.3f}"
    detail = (f"slope={slope} (need [0.7, 1.3]) floor={res.floor:.2e} decreasing={decreasing} "
              f"L1 monotone={monotone} CKP chain={chain}")
    assert record(5, ok, detail, sec), detail


def test_criterion_6_invariants():
    runs = [rei_run(1e-4)[0], rei_run(5e-5)[0], *sweep()[0].runs.values(), run_2d()[0]]
    inv = [r.invariants() for r in runs]
    mass = max(i.mass_drift for i in inv)
    energy = max(i.energy_drift for i in inv)
    d_min = min(i.min_dissipation for i in inv)
    clip = max(i.clipped_mass for i in inv)
    ok = mass < 1e-10 and energy < 1e-8 and d_min >= 0 and clip < 1e-8
    assert record(6, ok, f"{len(runs)} runs: mass {mass:.1e} energy {energy:.1e} min D {d_min:.1e} clip {clip:.1e}")


def test_criterion_7_bound_monitors():
    run, _ = rei_run(1e-4)
    s1 = all(r.step1_ok for r in run.reports)
    s2 = all(r.step2_ok for r in run.reports)
    growth = max(r.phi_growth_ratio for r in run.reports)
    ok = s1 and s2 and growth <= 1.0
    assert record(7, ok, f"step1={s1} step2={s2} max phi growth ratio={growth:.3f} over {len(run.reports)} obs")


def test_criterion_8_two_dimensional():
    run, sec = run_2d()
    checks, _ = verify_checks()
    stress2 = next(c for c in checks if c.name == "maxmom_stress_d2")
    r_u = max(abs(r.R_u) for r in run.reports)
    inv = run.invariants()
    ok = (r_u > 0 and inv.mass_drift < 1e-10 and inv.energy_drift < 1e-8 and inv.min_dissipation >= 0
          and inv.clipped_mass < 1e-8 and stress2.passed and all(all(l.ok for l in ckp_chain(r)) for r in run.reports))
    assert record(8, ok, f"max |R_u|={r_u:.2e} mass {inv.mass_drift:.1e} energy {inv.energy_drift:.1e} "
                         f"d2 stress err {stress2.measured:.1e}", sec)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
