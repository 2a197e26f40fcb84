"""Command line entry point: ``bgkhydro {verify,run,sweep,euler}``.

Exit codes: 0 success, 2 verification failure, 3 solver abort, 4 config error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bgk import SolverAbort
from .euler import EulerError, run_euler, write_euler_csv
from .harness import (
    SCENARIO_NOTE,
    ConfigError,
    RunConfig,
    initial_states,
    load_config,
    run_coupled,
    run_sweep,
    solver_config,
    write_plot_script,
    write_run_outputs,
    write_sweep_csv,
)
from .diagnostics import write_report_csv
from .verification import VerifyCounts, run_verification, summary

EXIT_OK, EXIT_VERIFY, EXIT_ABORT, EXIT_CONFIG = 0, 2, 3, 4
DEFAULT_SWEEP = "1e-1,3e-2,1e-2,3e-3,1e-3"


def _epsilons(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as err:
        raise ConfigError(f"bad epsilon list {text!r}") from err
    if not vals or any(v <= 0 for v in vals):
        raise ConfigError("epsilon values must be positive")
    return vals


def _tolerance(text: str) -> tuple[str, float]:
    name, _, val = text.partition("=")
    try:
        return name.strip(), float(val)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}") from err


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bgkhydro", description="BGK hydrodynamic-limit runs and relative entropy checks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, eps_help):
        sp.add_argument("--config", type=Path, help="INI file; keys are RunConfig fields")
        sp.add_argument("--epsilon", help=eps_help)
        sp.add_argument("--out", type=Path, help="output directory")
        sp.add_argument("--dim", type=int, choices=(1, 2))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--scenario")

    v = sub.add_parser("verify", help="randomized lemma suite")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", type=Path)
    v.add_argument("--tolerance", type=_tolerance, action="append", default=[],
                   metavar="NAME=VALUE", help="override one check tolerance")

    r = sub.add_parser("run", help="coupled kinetic/Euler run with entropy report")
    common(r, "relaxation parameter")
    r.add_argument("--snapshots", action="store_true", help="write binary snapshots of f")

    s = sub.add_parser("sweep", help="one coupled run per epsilon plus slope fit")
    common(s, f"comma separated list (default {DEFAULT_SWEEP})")
    s.add_argument("--snapshots", action="store_true")

    e = sub.add_parser("euler", help="Euler-only reference run")
    common(e, "ignored")
    return p


def _config(args, epsilon=None) -> RunConfig:
    overrides = {
        "dim": args.dim,
        "seed": args.seed,
        "scenario": args.scenario,
        "epsilon": epsilon,
        "out_dir": str(args.out) if args.out else None,
        "snapshots": True if getattr(args, "snapshots", False) else None,
    }
    return load_config(args.config, overrides)


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"cannot create output directory {out}: {err}") from err
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _run_info(out: Path, cfg: RunConfig, **extra) -> None:
    info = {"config": vars(cfg), **extra}
    if cfg.initial_file is None:
        info["scenario_note"] = SCENARIO_NOTE
    (out / "run_info.json").write_text(json.dumps(info, indent=2, default=str))


def cmd_verify(args) -> int:
    counts = VerifyCounts()
    try:
        checks = run_verification(args.seed, counts, dict(args.tolerance))
    except KeyError as err:
        raise ConfigError(f"unknown tolerance override {err}") from err
    report = summary(checks, args.seed)
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        print(f"{mark} {c.name:26s} measured={c.measured:.3e} tol={c.tolerance:g} n={c.samples}")
    if args.out:
        out = _out_dir(args.out)
        (out / "verify_summary.json").write_text(json.dumps(report, indent=2))
    print(json.dumps({"passed": report["passed"], "failed": [c.name for c in checks if not c.passed]}))
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_run(args) -> int:
    eps = _epsilons(args.epsilon)[0] if args.epsilon else None
    cfg = _config(args, eps)
    out = _out_dir(cfg.out_dir)
    snap = out / "snapshots" if cfg.snapshots else None
    if snap is not None:
        snap.mkdir(exist_ok=True)
    result = run_coupled(cfg, snapshot_dir=snap)
    paths = write_run_outputs(result, out)
    inv = result.invariants()
    _run_info(out, cfg, invariants=vars(inv), wall_time=result.wall_time, dt=result.solver.dt)
    print(f"wrote {paths['report']} ({len(result.reports)} rows); sup H = {max(r.H for r in result.reports):.4e}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    eps = _epsilons(args.epsilon or DEFAULT_SWEEP)
    out = _out_dir(cfg.out_dir)
    result = run_sweep(cfg, eps)
    for e, run in result.runs.items():
        write_report_csv(run.reports, out / f"report_eps{e:.0e}.csv")
    write_sweep_csv(result, out / "sweep.csv")
    write_plot_script(out, ["sweep.csv"])
    _run_info(out, cfg, slope=result.slope, floor=result.floor, fit_epsilons=result.fit_epsilons,
              failures=result.failures)
    for r in result.records:
        print(f"eps={r.epsilon:.1e} sup_H={r.sup_H:.4e} l1(f,M)={r.l1_f_M:.3e} C_fit={r.c_fit:.3g}")
    print("slope:", "absent" if result.slope is None else f"{result.slope:.3f}",
          "| floor:", "n/a" if result.floor is None else f"{result.floor:.3e}")
    if result.failures:
        for e, msg in result.failures.items():
            print(f"eps={e:.1e} failed: {msg}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_euler(args) -> int:
    cfg = _config(args)
    out = _out_dir(cfg.out_dir)
    _, e = initial_states(cfg)
    sc = solver_config(cfg, e.grid)
    states = run_euler(e, sc.dt, sc.n_steps, stride=cfg.observe_stride)
    write_euler_csv(states, out / "euler.csv")
    _run_info(out, cfg, dt=sc.dt, steps=sc.n_steps)
    print(f"wrote {out / 'euler.csv'} ({len(states)} times)")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "run": cmd_run, "sweep": cmd_sweep, "euler": cmd_euler}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverAbort, EulerError) as err:
        print(f"solver abort: {err}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
