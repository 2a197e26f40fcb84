"""Scenarios, coupled kinetic/Euler runs and epsilon sweeps."""
from __future__ import annotations

import configparser
import logging
import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .bgk import SolverAbort, SolverConfig, bgk_step, default_dt
from .diagnostics import (
    MONITOR_COLUMNS,
    EntropyReport,
    ckp_chain,
    fit_gronwall,
    rei_terms,
    write_report_csv,
)
from .euler import EulerError, EulerState, euler_step, read_euler_csv, write_euler_csv
from .fields import KineticState, MacroFields, eval_maxwellian, write_snapshot
from .grid import PhaseGrid, default_v_max, make_grid

log = logging.getLogger(__name__)

WORKERS_ENV = "BGKHYDRO_WORKERS"
SCENARIOS = ("default", "equilibrium", "default2d", "acoustic")
SCENARIO_NOTE = "default scenario is an implementation choice, not taken from the literature"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str = "default"
    initial_file: str | None = None
    dim: int = 1
    x_count: int = 256
    x_length: float = 1.0
    v_count: int = 256
    v_max: float | None = None
    epsilon: float = 1e-2
    dt: float | None = None
    t_final: float = 0.1
    splitting: str = "strang"
    transport: str = "spectral_shift"
    projection_mode: str = "conservative"
    cfl_guard: float = 1.0
    observe_stride: int = 10
    out_dir: str = "out"
    snapshots: bool = False
    seed: int = 0
    theta_offset: float = 0.0
    floor_epsilon: float = 1e-6

    def validate(self) -> "RunConfig":
        if self.initial_file is None and self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.initial_file is not None and not Path(self.initial_file).exists():
            raise ConfigError(f"initial data file {self.initial_file} does not exist")
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.epsilon <= 0 or self.t_final < 0 or self.observe_stride < 1:
            raise ConfigError("need epsilon > 0, t_final >= 0, observe_stride >= 1")
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = str(_TYPES[name])
    if raw.strip().lower() in ("", "none") and "None" in kind:
        return None
    if kind.startswith("bool"):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw.strip()


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read an INI file (any section names; keys are RunConfig fields) and apply overrides."""
    values = {}
    if path is not None:
        if not Path(path).exists():
            raise ConfigError(f"config file {path} does not exist")
        parser = configparser.ConfigParser()
        parser.read(path)
        for section in parser.sections():
            for key, raw in parser.items(section):
                if key not in _TYPES:
                    raise ConfigError(f"unknown config key {key!r} in [{section}]")
                try:
                    values[key] = _coerce(key, raw)
                except ValueError as err:
                    raise ConfigError(f"bad value for {key}: {raw!r}") from err
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    cfg = RunConfig(**values)
    if cfg.scenario == "default2d" and "dim" not in values:
        cfg.dim = 2
    return cfg.validate()


# -- scenarios ---------------------------------------------------------------

def scenario_macro(name: str, grid: PhaseGrid) -> MacroFields:
    """Initial Euler data on the spatial cells of ``grid`` (unit total mass)."""
    X = grid.x_nodes
    L = grid.x_length
    k = 2.0 * np.pi / L
    n = grid.n_x
    d = grid.dim
    if name == "default":
        rho = 1.0 + 0.1 * np.sin(k * X[:, 0])
        u = np.zeros((n, d))
        theta = np.ones(n)
    elif name == "equilibrium":
        rho = np.ones(n)
        u = np.zeros((n, d))
        theta = np.ones(n)
    elif name == "default2d":
        if d != 2:
            raise ConfigError("default2d needs dim = 2")
        x, y = X[:, 0], X[:, 1]
        rho = 1.0 + 0.1 * np.sin(k * x) * np.cos(k * y)
        u = 0.1 * np.stack([np.sin(k * y), -np.sin(k * x)], axis=1)
        theta = 1.0 + 0.05 * np.cos(k * (x + y))
    elif name == "acoustic":
        amp, c = 1e-2, math.sqrt((d + 2) / d)
        s = np.sin(k * X[:, 0])
        rho = 1.0 + amp * s
        u = np.zeros((n, d))
        u[:, 0] = c * amp * s
        theta = 1.0 + (2.0 / d) * amp * s
    else:
        raise ConfigError(f"unknown scenario {name!r}")
    rho = rho / (np.sum(rho) * grid.x_weight)
    return MacroFields(rho, u, theta)


def build_grid(cfg: RunConfig, macro: MacroFields | None = None) -> PhaseGrid:
    v_max = cfg.v_max
    if v_max is None:
        if macro is None:
            probe = make_grid(cfg.dim, cfg.x_count, cfg.x_length, 2, 1.0)
            macro = initial_macro(cfg, probe)
        theta_max = float(np.max(macro.theta)) + max(cfg.theta_offset, 0.0)
        v_max = default_v_max(float(np.max(np.linalg.norm(macro.u, axis=1))), theta_max)
    return make_grid(cfg.dim, cfg.x_count, cfg.x_length, cfg.v_count, v_max)


def initial_macro(cfg: RunConfig, grid: PhaseGrid) -> MacroFields:
    if cfg.initial_file is not None:
        try:
            st = read_euler_csv(cfg.initial_file)
        except (ValueError, KeyError) as err:
            raise ConfigError(f"unreadable initial data: {err}") from err
        if (st.grid.dim, st.grid.x_count) != (grid.dim, grid.x_count) or not math.isclose(
            st.grid.x_length, grid.x_length, rel_tol=1e-9
        ):
            raise ConfigError("initial data file does not match the configured spatial grid")
        return st.macro
    return scenario_macro(cfg.scenario, grid)


def initial_states(cfg: RunConfig) -> tuple[KineticState, EulerState]:
    probe = make_grid(cfg.dim, cfg.x_count, cfg.x_length, 2, 1.0)
    macro = initial_macro(cfg, probe)
    grid = build_grid(cfg, macro)
    euler0 = EulerState(grid, macro.copy(), 0.0)
    kin = macro.copy()
    kin.theta = kin.theta + cfg.theta_offset
    f0 = eval_maxwellian(kin, grid, 0.0)
    return f0, euler0


def solver_config(cfg: RunConfig, grid: PhaseGrid, epsilon: float | None = None) -> SolverConfig:
    dt = cfg.dt if cfg.dt is not None else default_dt(grid, cfg.t_final)
    if cfg.t_final > 0:
        n = max(1, math.ceil(cfg.t_final / dt - 1e-9))
        dt = cfg.t_final / n
    return SolverConfig(
        epsilon=cfg.epsilon if epsilon is None else epsilon,
        dt=dt,
        t_final=cfg.t_final,
        splitting=cfg.splitting,
        transport=cfg.transport,
        projection_mode=cfg.projection_mode,
        cfl_guard=cfg.cfl_guard,
    )


# -- coupled runs --------------------------------------------------------------

@dataclass
class Invariants:
    mass_drift: float
    momentum_drift: float
    energy_drift: float
    clipped_mass: float
    min_dissipation: float
    min_f: float


@dataclass
class RunResult:
    config: RunConfig
    solver: SolverConfig
    grid: PhaseGrid
    reports: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    momenta: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    clipped_mass: float = 0.0
    min_f: float = 0.0
    wall_time: float = 0.0
    final_state: KineticState | None = None
    final_euler: EulerState | None = None
    aborted: str | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.reports])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.reports])

    def invariants(self) -> Invariants:
        m = np.array(self.masses)
        e = np.array(self.energies)
        p = np.array(self.momenta)
        pscale = max(float(np.max(np.abs(p))), float(e[0]) ** 0.5 * float(m[0]) ** 0.5)
        return Invariants(
            mass_drift=float(np.max(np.abs(m - m[0])) / abs(m[0])),
            momentum_drift=float(np.max(np.abs(p - p[0])) / pscale),
            energy_drift=float(np.max(np.abs(e - e[0])) / abs(e[0])),
            clipped_mass=self.clipped_mass,
            min_dissipation=float(np.min(self.series("D_eps"))),
            min_f=self.min_f,
        )

    def gronwall(self):
        from .diagnostics import verify_rei_over_run

        if len(self.reports) < 3:
            return None
        res = verify_rei_over_run(self.reports)
        H = self.series("H")
        return fit_gronwall(self.times, H[1:-1], res.dHdt_fd, self.solver.epsilon, h0=float(H[0]))


def run_coupled(cfg: RunConfig, epsilon: float | None = None, observer=None, snapshot_dir=None) -> RunResult:
    """Advance BGK and Euler with the same step and evaluate the entropy report at every observation."""
    f, e = initial_states(cfg)
    grid = f.grid
    sc = solver_config(cfg, grid, epsilon)
    out = RunResult(cfg, sc, grid)
    t0 = _time.perf_counter()
    n_steps = sc.n_steps
    mass0 = f.mass()

    def observe(step, f, e):
        rep = rei_terms(f, e, sc.epsilon, sc.projection_mode, time_tol=0.5 * sc.dt)
        out.reports.append(rep)
        out.masses.append(f.mass())
        out.momenta.append(f.momentum())
        out.energies.append(f.energy())
        out.min_f = min(out.min_f, float(np.min(f.f)))
        if snapshot_dir is not None:
            write_snapshot(f, Path(snapshot_dir) / f"f_{step:06d}.bgkf")
        if observer is not None:
            observer(step, f, e, rep)

    observe(0, f, e)
    for n in range(1, n_steps + 1):
        try:
            f, info = bgk_step(f, sc)
            e = euler_step(e, sc.dt)
        except (SolverAbort, EulerError) as err:
            out.aborted = f"{err} (last good t={out.reports[-1].t:.6g})"
            log.error("run aborted: %s", out.aborted)
            raise SolverAbort(out.aborted, f.time) from err
        f.time = n * sc.dt
        e.time = n * sc.dt
        out.clipped_mass += info.clipped_mass
        drift = abs(f.mass() - mass0) / mass0
        if drift > 1e-8:
            raise SolverAbort(f"mass drift {drift:.3e} (last good t={out.reports[-1].t:.6g})", f.time)
        if n % cfg.observe_stride == 0 or n == n_steps:
            observe(n, f, e)
    out.final_state, out.final_euler = f, e
    out.wall_time = _time.perf_counter() - t0
    return out


def write_run_outputs(result: RunResult, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.csv",
        "monitors": out / "monitors.csv",
        "euler": out / "euler_final.csv",
    }
    write_report_csv(result.reports, paths["report"])
    write_report_csv(result.reports, paths["monitors"], MONITOR_COLUMNS)
    if result.final_euler is not None:
        write_euler_csv(result.final_euler, paths["euler"])
    paths["plot"] = write_plot_script(out, ["report.csv"])
    return paths


# -- sweeps -------------------------------------------------------------------

@dataclass
class SweepRecord:
    epsilon: float
    sup_H: float
    l1_f_M: float
    l1_Mf_M: float
    l1_rho: float
    l1_mom: float
    l1_rhotheta: float
    sup_l1_f_M: float
    sup_l1_Mf_M: float
    sup_l1_rho: float
    sup_l1_mom: float
    sup_l1_rhotheta: float
    c_fit: float
    wall_time: float
    ckp_ok: bool = True


SWEEP_COLUMNS = [f.name for f in fields(SweepRecord)]


@dataclass
class SweepResult:
    records: list
    slope: float | None
    intercept: float | None
    floor: float | None
    fit_epsilons: list
    failures: dict = field(default_factory=dict)
    runs: dict = field(default_factory=dict)


def ckp_chain_holds(rep: EntropyReport) -> bool:
    return all(link.ok for link in ckp_chain(rep))


def sweep_record(eps: float, run: RunResult) -> SweepRecord:
    last = run.reports[-1]
    g = run.gronwall()
    return SweepRecord(
        epsilon=eps,
        sup_H=float(np.max(run.series("H"))),
        l1_f_M=last.l1_f_M,
        l1_Mf_M=last.l1_Mf_M,
        l1_rho=last.l1_rho,
        l1_mom=last.l1_mom,
        l1_rhotheta=last.l1_rhotheta,
        sup_l1_f_M=float(np.max(run.series("l1_f_M"))),
        sup_l1_Mf_M=float(np.max(run.series("l1_Mf_M"))),
        sup_l1_rho=float(np.max(run.series("l1_rho"))),
        sup_l1_mom=float(np.max(run.series("l1_mom"))),
        sup_l1_rhotheta=float(np.max(run.series("l1_rhotheta"))),
        c_fit=g.c_fit if g is not None else float("nan"),
        wall_time=run.wall_time,
        ckp_ok=all(ckp_chain_holds(r) for r in run.reports),
    )


def fit_slope(epsilons, sup_h, floor: float | None = None, floor_factor: float = 10.0):
    """Least-squares slope of log sup H against log eps, over points well above the floor."""
    eps = np.asarray(epsilons, dtype=float)
    h = np.asarray(sup_h, dtype=float)
    keep = h > 0
    if floor is not None:
        keep &= h > floor_factor * floor
    if np.count_nonzero(keep) < 2:
        return None, None, list(eps[keep])
    slope, intercept = np.polyfit(np.log(eps[keep]), np.log(h[keep]), 1)
    return float(slope), float(intercept), list(eps[keep])


def _sweep_one(args):
    cfg, eps = args
    run = run_coupled(cfg, eps)
    run.final_state = None
    return eps, run


def run_sweep(cfg: RunConfig, epsilons, with_floor: bool = True, workers: int | None = None) -> SweepResult:
    """One coupled run per epsilon on identical grids, then the log-log slope above the scheme floor."""
    epsilons = [float(e) for e in epsilons]
    if any(e <= 0 for e in epsilons):
        raise ConfigError("epsilons must be positive")
    workers = workers or int(os.environ.get(WORKERS_ENV, "1"))
    jobs = [(cfg, e) for e in epsilons]
    if with_floor and len(epsilons) > 1:
        jobs.append((cfg, cfg.floor_epsilon))
    runs, failures = {}, {}
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = {pool.submit(_sweep_one, j): j[1] for j in jobs}
            for fut, eps in futures.items():
                try:
                    runs[eps] = fut.result()[1]
                except (SolverAbort, EulerError) as err:
                    failures[eps] = str(err)
    else:
        for j in jobs:
            try:
                runs[j[1]] = _sweep_one(j)[1]
            except (SolverAbort, EulerError) as err:
                failures[j[1]] = str(err)
    records = [sweep_record(e, runs[e]) for e in epsilons if e in runs]
    floor = None
    if with_floor and cfg.floor_epsilon in runs and len(epsilons) > 1:
        floor = float(np.max(runs[cfg.floor_epsilon].series("H")))
    if len(records) >= 2:
        slope, intercept, used = fit_slope([r.epsilon for r in records], [r.sup_H for r in records], floor)
    else:
        slope, intercept, used = None, None, []
    return SweepResult(records, slope, intercept, floor, used, failures, runs)


def write_sweep_csv(result: SweepResult, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in result.records:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in asdict(r).values()])


def write_plot_script(out_dir, csv_names) -> Path:
    """Emit a standalone matplotlib script that plots the given CSVs."""
    path = Path(out_dir) / "plot_results.py"
    names = ", ".join(repr(n) for n in csv_names)
    path.write_text(
        f'''"""Plot entropy diagnostics written by bgkhydro. Run: python plot_results.py"""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).parent


def load(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}}


for name in [{names}]:
    data = load(name)
    fig, ax = plt.subplots()
    if "epsilon" in data:
        ax.loglog(data["epsilon"], data["sup_H"], "o-", label="sup_t H")
        ax.set_xlabel("epsilon")
    else:
        for key in ("H", "H_f_Mf", "H_Mf_M"):
            ax.semilogy(data["t"], [max(v, 1e-300) for v in data[key]], label=key)
        ax.set_xlabel("t")
    ax.legend()
    fig.savefig(HERE / (Path(name).stem + ".png"), dpi=120)
'''
    )
    return path
