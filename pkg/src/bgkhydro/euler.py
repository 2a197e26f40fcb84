"""Smooth compressible Euler flow with pressure rho*theta on the periodic box.

Pseudo-spectral fluxes (2/3-rule dealiasing) and classical RK4 in time.
Conservative variables are stored as ``U = (rho, rho u_1..rho u_d, E)``
with ``E = rho|u|^2/2 + d rho theta/2``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fields import MacroFields
from .grid import PhaseGrid, integrate_x, make_grid, spectral_derivative

BLOWUP_FACTOR = 20.0


class EulerError(RuntimeError):
    pass


class EulerBlowup(EulerError):
    """Gradient growth past the smoothness guard; ``time`` is the hit time."""

    def __init__(self, time: float, grad: float, limit: float):
        self.time = time
        self.grad = grad
        super().__init__(f"smoothness guard tripped at t={time:.6g}: max|grad u|={grad:.4g} > {limit:.4g}")


class Gradients(NamedTuple):
    grad_u: np.ndarray  # (n_x, d, d), grad_u[:, i, j] = d_i u_j
    grad_logtheta: np.ndarray  # (n_x, d)
    sup_u: float
    sup_grad_u: float  # sup over x of the Frobenius norm
    sup_grad_logtheta: float


@dataclass
class EulerState:
    grid: PhaseGrid
    macro: MacroFields
    time: float = 0.0
    grad_baseline: float | None = None

    def __post_init__(self):
        if self.grad_baseline is None:
            g = gradients(self)
            # a vanishing initial gradient would make the guard fire at once
            natural = np.sqrt(np.max(self.macro.theta)) / self.grid.x_length
            self.grad_baseline = max(g.sup_grad_u, natural)

    @property
    def conservative(self) -> np.ndarray:
        m = self.macro
        return np.concatenate([m.rho[:, None], m.momentum, m.energy[:, None]], axis=1)

    def totals(self) -> np.ndarray:
        return integrate_x(self.conservative, self.grid)


def primitive(U: np.ndarray, dim: int) -> MacroFields:
    rho = U[:, 0]
    if np.any(rho <= 0):
        raise EulerError(f"density lost positivity (min {rho.min():.3e})")
    u = U[:, 1 : 1 + dim] / rho[:, None]
    theta = (U[:, -1] - 0.5 * rho * np.sum(u**2, axis=1)) * 2.0 / (dim * rho)
    if np.any(theta <= 0):
        raise EulerError(f"temperature lost positivity (min {theta.min():.3e})")
    return MacroFields(rho, u, theta)


def _tendency(U: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    d = grid.dim
    m = primitive(U, d)
    p = m.rho * m.theta
    flux = np.empty((grid.n_x, d + 2, d))
    flux[:, 0, :] = U[:, 1 : 1 + d]
    flux[:, 1 : 1 + d, :] = m.rho[:, None, None] * m.u[:, :, None] * m.u[:, None, :]
    for i in range(d):
        flux[:, 1 + i, i] += p
    flux[:, -1, :] = m.u * (U[:, -1] + p)[:, None]
    out = np.zeros_like(U)
    for axis in range(d):
        out -= spectral_derivative(flux[:, :, axis], grid, axis, dealias=True)
    return out


def euler_rhs(state: EulerState) -> np.ndarray:
    """Tendencies of (rho, rho u, E), shape ``(n_x, d + 2)``."""
    return _tendency(state.conservative, state.grid)


def euler_step(state: EulerState, dt: float, blowup_factor: float = BLOWUP_FACTOR) -> EulerState:
    """One classical RK4 step; ``dt`` may be negative for backward advances."""
    grid = state.grid
    U = state.conservative
    k1 = _tendency(U, grid)
    k2 = _tendency(U + 0.5 * dt * k1, grid)
    k3 = _tendency(U + 0.5 * dt * k2, grid)
    k4 = _tendency(U + dt * k3, grid)
    U_new = U + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    new = EulerState(grid, primitive(U_new, grid.dim), state.time + dt, state.grad_baseline)
    gr = gradients(new)
    limit = blowup_factor * state.grad_baseline
    if gr.sup_grad_u > limit:
        raise EulerBlowup(new.time, gr.sup_grad_u, limit)
    return new


def gradients(state: EulerState) -> Gradients:
    grid = state.grid
    m = state.macro
    d = grid.dim
    grad_u = np.empty((grid.n_x, d, d))
    grad_lt = np.empty((grid.n_x, d))
    log_theta = np.log(m.theta)
    for i in range(d):
        grad_u[:, i, :] = spectral_derivative(m.u, grid, i)
        grad_lt[:, i] = spectral_derivative(log_theta, grid, i)
    return Gradients(
        grad_u,
        grad_lt,
        float(np.max(np.linalg.norm(m.u, axis=1))),
        float(np.max(np.linalg.norm(grad_u, axis=(1, 2)))),
        float(np.max(np.linalg.norm(grad_lt, axis=1))),
    )


def run_euler(state: EulerState, dt: float, n_steps: int, stride: int = 1, blowup_factor: float = BLOWUP_FACTOR):
    """Advance ``n_steps`` and return the states at every ``stride``-th step (initial included)."""
    out = [state]
    for n in range(1, n_steps + 1):
        state = euler_step(state, dt, blowup_factor)
        if n % stride == 0 or n == n_steps:
            out.append(state)
    return out


# -- CSV exchange -----------------------------------------------------------

def csv_columns(dim: int) -> list[str]:
    if dim == 1:
        return ["t", "x", "rho", "u", "theta", "E"]
    return ["t", "x", "y", "rho", "u_x", "u_y", "theta", "E"]


def write_euler_csv(states, path) -> None:
    states = [states] if isinstance(states, EulerState) else list(states)
    d = states[0].grid.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(csv_columns(d))
        for s in states:
            m = s.macro
            E = m.energy
            for i in range(s.grid.n_x):
                vals = [s.time, *s.grid.x_nodes[i], m.rho[i], *m.u[i], m.theta[i], E[i]]
                w.writerow([repr(float(v)) for v in vals])


def read_euler_csv(path, time: float | None = None) -> EulerState:
    """Initial data from CSV; uses the earliest time (or ``time``) in the file.

    The grid is inferred from the node coordinates, which must be uniform
    and start at 0.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    cols = rows[0].keys()
    dim = 2 if "y" in cols else 1
    need = set(csv_columns(dim)) - {"E", "t"}
    missing = need - set(cols)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    if "t" in cols:
        times = sorted({float(r["t"]) for r in rows})
        t0 = times[0] if time is None else time
        rows = [r for r in rows if float(r["t"]) == t0]
    else:
        t0 = 0.0 if time is None else time
    xs = np.array(sorted({float(r["x"]) for r in rows}))
    n = xs.size
    if n < 2:
        raise ValueError(f"{path}: need at least two x nodes")
    dx = xs[1] - xs[0]
    grid = make_grid(dim, n, n * dx, 2, 1.0)
    keys = ["x"] if dim == 1 else ["x", "y"]
    ucols = ["u"] if dim == 1 else ["u_x", "u_y"]
    lookup = {}
    for r in rows:
        idx = tuple(int(round(float(r[k]) / dx)) for k in keys)
        lookup[idx] = r
    rho = np.empty(grid.n_x)
    theta = np.empty(grid.n_x)
    u = np.empty((grid.n_x, dim))
    for i, node in enumerate(grid.x_nodes):
        idx = tuple(int(round(c / dx)) for c in node)
        if idx not in lookup:
            raise ValueError(f"{path}: no row for node {tuple(node)}")
        r = lookup[idx]
        rho[i] = float(r["rho"])
        theta[i] = float(r["theta"])
        u[i] = [float(r[c]) for c in ucols]
    return EulerState(grid, MacroFields(rho, u, theta), t0)
