"""Nonisothermal BGK toward smooth Euler flow: solvers and relative entropy diagnostics."""
from .bgk import SolverAbort, SolverConfig, bgk_step, run_bgk
from .diagnostics import EntropyReport, ckp_chain, rei_terms, verify_dlogM, verify_rei_over_run
from .entropy import (
    ckp_check,
    entropy_split,
    maxwellian_relative_entropy,
    relative_entropy,
    symmetrized_dissipation,
)
from .euler import EulerState, euler_step, gradients, run_euler
from .fields import KineticState, MacroFields, compute_moments, eval_maxwellian, project
from .grid import PhaseGrid, make_grid
from .harness import RunConfig, load_config, run_coupled, run_sweep

__version__ = "0.1.0"

__all__ = [
    "PhaseGrid", "make_grid",
    "KineticState", "MacroFields", "compute_moments", "eval_maxwellian", "project",
    "relative_entropy", "maxwellian_relative_entropy", "entropy_split", "symmetrized_dissipation", "ckp_check",
    "SolverConfig", "SolverAbort", "bgk_step", "run_bgk",
    "EulerState", "euler_step", "run_euler", "gradients",
    "EntropyReport", "rei_terms", "verify_rei_over_run", "verify_dlogM", "ckp_chain",
    "RunConfig", "load_config", "run_coupled", "run_sweep",
]
