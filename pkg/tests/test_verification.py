import numpy as np
import pytest

from bgkhydro.verification import (
    TOLERANCES,
    VerifyCounts,
    check_maxwellian_pairs,
    check_psi_quadratic,
    check_tri_point,
    lemma_moment_errors,
    run_verification,
    summary,
    write_summary,
)

SMALL = VerifyCounts(inequality_samples=2000, maxwellian_pairs=10, projection_states=3,
                     moment_samples_d1=20, moment_side_d2=3, dlogM_points=100)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_full_suite_passes(seed):
    checks = run_verification(seed)
    assert sorted(c.name for c in checks) == sorted(TOLERANCES)
    failed = [(c.name, c.measured) for c in checks if not c.passed]
    assert not failed


def test_inequalities_never_violated():
    rng = np.random.default_rng(7)
    assert check_tri_point(rng, 10_000)[0] <= 0
    assert check_psi_quadratic(rng, 10_000)[0] <= 0


def test_pair_checks_accurate():
    err, ckp, n = check_maxwellian_pairs(np.random.default_rng(3), 10)
    assert n == 10 and err < 1e-7 and ckp <= 0


def test_stress_is_exactly_zero_in_1d():
    stress, heat, stress_abs, gauss = lemma_moment_errors(np.random.default_rng(0), 1, 16, 256)
    assert stress_abs == 0.0 and heat < 1e-7 and gauss < 1e-8


def test_corrupted_tolerance_is_the_only_failure():
    checks = run_verification(0, SMALL, {"maxwellian_closed_form": 1e-30})
    assert [c.name for c in checks if not c.passed] == ["maxwellian_closed_form"]


def test_unknown_tolerance_rejected():
    with pytest.raises(KeyError):
        run_verification(0, SMALL, {"nonsense": 1.0})


def test_order_check_uses_lower_bound():
    checks = {c.name: c for c in run_verification(1, SMALL)}
    order = checks["dlogM_fd_order"]
    assert order.sense == "min" and 3.0 < order.measured < 5.0 and order.slack > 0


def test_summary_json(tmp_path):
    checks = run_verification(0, SMALL)
    rep = summary(checks, 0)
    assert rep["passed"] and len(rep["checks"]) == len(TOLERANCES)
    write_summary(checks, 0, tmp_path / "s.json")
    assert (tmp_path / "s.json").stat().st_size > 0
