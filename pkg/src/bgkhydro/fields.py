"""Velocity moments, Maxwellians and the conservative discrete projection."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import PhaseGrid, integrate_v, integrate_xv, make_grid

DENSITY_FLOOR = 1e-12
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
MAX_HALVINGS = 20


class ProjectionError(RuntimeError):
    """Newton iteration for the discrete Maxwellian did not converge."""

    def __init__(self, cell: int, residual: float, message: str = ""):
        self.cell = int(cell)
        self.residual = float(residual)
        super().__init__(message or f"conservative projection failed at x-cell {cell} (relative residual {residual:.3e})")


@dataclass
class KineticState:
    grid: PhaseGrid
    f: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        if self.f.shape != (self.grid.n_x, self.grid.n_v):
            raise ValueError(f"f has shape {self.f.shape}, grid expects {(self.grid.n_x, self.grid.n_v)}")

    def mass(self) -> float:
        return integrate_xv(self.f, self.grid)

    def momentum(self) -> np.ndarray:
        g = self.grid
        return np.sum(self.f @ g.v_nodes, axis=0) * (g.x_weight * g.v_weight)

    def energy(self) -> float:
        """Total kinetic energy, half the second moment."""
        return 0.5 * integrate_xv(self.f * self.grid.v_sq, self.grid)

    def with_f(self, f: np.ndarray, time: float | None = None) -> "KineticState":
        return KineticState(self.grid, f, self.time if time is None else time)


@dataclass
class MacroFields:
    """Density, bulk velocity and temperature on the spatial cells."""

    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        self.u = u
        if not (self.rho.shape == self.theta.shape == self.u.shape[:1]):
            raise ValueError("rho, u, theta must share the spatial dimension")

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    @property
    def energy(self) -> np.ndarray:
        return 0.5 * self.rho * np.sum(self.u**2, axis=1) + 0.5 * self.dim * self.rho * self.theta

    @property
    def momentum(self) -> np.ndarray:
        return self.rho[:, None] * self.u

    def copy(self) -> "MacroFields":
        return MacroFields(self.rho.copy(), self.u.copy(), self.theta.copy())


@dataclass
class MaxwellianSpec:
    """A Maxwellian field, either sampled from (rho, u, theta) or conservative.

    In conservative mode ``multipliers[i] = (a, b_1..b_d, c)`` with the cell
    distribution ``exp(a + b.v + c|v|^2)``; floor cells hold NaN.
    """

    macro: MacroFields
    mode: str
    multipliers: np.ndarray | None = None
    iterations: int = 0
    residual: float = 0.0
    values: np.ndarray | None = field(default=None, repr=False)

    def evaluate(self, grid: PhaseGrid) -> np.ndarray:
        if self.values is not None:
            return self.values
        if self.mode == "sampled":
            return maxwellian_values(self.macro, grid)
        if self.mode != "conservative":
            raise ValueError(f"unknown projection mode {self.mode!r}")
        lam = self.multipliers
        live = np.isfinite(lam[:, 0])
        out = np.zeros((grid.n_x, grid.n_v))
        v = grid.v_nodes
        expo = lam[live, :1] + lam[live, 1:-1] @ v.T + lam[live, -1:] * grid.v_sq[None, :]
        out[live] = np.exp(expo)
        return out


def compute_moments(state: KineticState, floor: float = DENSITY_FLOOR) -> MacroFields:
    """Density, mean velocity and temperature per cell.

    Cells with density below ``floor`` report ``rho = 0, u = 0, theta = 1``.
    """
    g = state.grid
    f = state.f
    rho = integrate_v(f, g)
    live = rho >= floor
    u = np.zeros((g.n_x, g.dim))
    theta = np.ones(g.n_x)
    if np.any(live):
        fl = f[live]
        rl = rho[live]
        u[live] = (fl @ g.v_nodes) * g.v_weight / rl[:, None]
        c2 = np.sum((g.v_nodes[None, :, :] - u[live][:, None, :]) ** 2, axis=2)
        theta[live] = np.sum(c2 * fl, axis=1) * g.v_weight / (g.dim * rl)
    rho = np.where(live, rho, 0.0)
    return MacroFields(rho, u, theta)


def maxwellian_values(macro: MacroFields, grid: PhaseGrid) -> np.ndarray:
    rho, u, theta = macro.rho, macro.u, macro.theta
    if rho.shape != (grid.n_x,) or u.shape[1] != grid.dim:
        raise ValueError("macro fields do not match the grid")
    live = rho > 0
    if np.any(theta[live] <= 0):
        bad = int(np.flatnonzero(live & (theta <= 0))[0])
        raise ValueError(f"non-positive temperature {theta[bad]} at cell {bad} with positive density")
    out = np.zeros((grid.n_x, grid.n_v))
    if not np.any(live):
        return out
    th = theta[live][:, None]
    c2 = np.sum((grid.v_nodes[None, :, :] - u[live][:, None, :]) ** 2, axis=2)
    out[live] = rho[live][:, None] * (2.0 * np.pi * th) ** (-0.5 * grid.dim) * np.exp(-c2 / (2.0 * th))
    return out


def eval_maxwellian(macro: MacroFields, grid: PhaseGrid, time: float = 0.0) -> KineticState:
    return KineticState(grid, maxwellian_values(macro, grid), time)


def log_maxwellian(rho, u, theta, v, dim: int) -> np.ndarray:
    """Pointwise log M for broadcastable (rho, theta) and vectors ``u``, ``v`` (last axis = dim)."""
    c2 = np.sum((v - u) ** 2, axis=-1)
    return np.log(rho) - 0.5 * dim * np.log(2.0 * np.pi * theta) - c2 / (2.0 * theta)


def project_sampled(state: KineticState, floor: float = DENSITY_FLOOR) -> MaxwellianSpec:
    return MaxwellianSpec(compute_moments(state, floor), "sampled")


def project_maxwellian_conservative(
    state: KineticState,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
    floor: float = DENSITY_FLOOR,
) -> MaxwellianSpec:
    """Discrete Maxwellian ``exp(a + b.v + c|v|^2)`` with the same quadrature
    moments (mass, momentum, energy) as ``state`` in every cell.

    Damped Newton in the cell-local variables ``xi = (v - u)/sqrt(theta)``,
    started from the analytic Maxwellian of the discrete moments.
    """
    g = state.grid
    d = g.dim
    macro = compute_moments(state, floor)
    live = np.flatnonzero(macro.rho >= floor)
    lam_out = np.full((g.n_x, d + 2), np.nan)
    if live.size == 0:
        return MaxwellianSpec(macro, "conservative", lam_out)

    f = state.f[live]
    u0 = macro.u[live]
    th0 = macro.theta[live]
    if np.any(th0 <= 0):
        bad = live[int(np.argmax(th0 <= 0))]
        raise ProjectionError(bad, np.inf, f"inadmissible moments (theta <= 0) at x-cell {bad}")
    s = np.sqrt(th0)
    xi = (g.v_nodes[None, :, :] - u0[:, None, :]) / s[:, None, None]
    basis = np.concatenate([np.ones(xi.shape[:2] + (1,)), xi, np.sum(xi**2, axis=2, keepdims=True)], axis=2)
    w = g.v_weight
    target = np.einsum("xv,xvk->xk", f, basis) * w
    scale = np.linalg.norm(target, axis=1)

    alpha = np.zeros((live.size, d + 2))
    alpha[:, 0] = np.log(macro.rho[live]) - 0.5 * d * np.log(2.0 * np.pi * th0)
    alpha[:, -1] = -0.5

    def residual(al):
        gv = np.exp(np.einsum("xvk,xk->xv", basis, al))
        r = np.einsum("xv,xvk->xk", gv, basis) * w - target
        return gv, r, np.linalg.norm(r, axis=1) / scale

    gv, r, res = residual(alpha)
    it = 0
    while np.max(res) > tol and it < max_iter:
        it += 1
        jac = np.einsum("xv,xvi,xvj->xij", gv, basis, basis) * w
        step = np.linalg.solve(jac, -r[:, :, None])[:, :, 0]
        t = np.ones(live.size)
        active = res > tol
        trial = alpha + t[:, None] * step
        gv_t, r_t, res_t = residual(trial)
        for _ in range(MAX_HALVINGS):
            worse = active & ~(res_t < res)
            if not np.any(worse):
                break
            t[worse] *= 0.5
            trial = alpha + t[:, None] * step
            gv_t, r_t, res_t = residual(trial)
        accept = active & (res_t < res)
        if not np.any(accept):
            break
        alpha[accept] = trial[accept]
        gv[accept], r[accept], res[accept] = gv_t[accept], r_t[accept], res_t[accept]

    if np.max(res) > tol:
        k = int(np.argmax(res))
        raise ProjectionError(live[k], res[k])

    # one undamped polishing step; conservation errors accumulate over long runs
    jac = np.einsum("xv,xvi,xvj->xij", gv, basis, basis) * w
    trial = alpha + np.linalg.solve(jac, -r[:, :, None])[:, :, 0]
    gv_t, r_t, res_t = residual(trial)
    better = res_t < res
    alpha[better], gv[better], res[better] = trial[better], gv_t[better], res_t[better]

    # back to exp(a + b.v + c|v|^2) in absolute velocity
    beta = alpha[:, 1:-1]
    gam = alpha[:, -1]
    c = gam / th0
    b = beta / s[:, None] - 2.0 * gam[:, None] * u0 / th0[:, None]
    a = alpha[:, 0] - np.sum(beta * u0, axis=1) / s + gam * np.sum(u0**2, axis=1) / th0
    lam_out[live, 0] = a
    lam_out[live, 1:-1] = b
    lam_out[live, -1] = c
    # values from the local variables are better conditioned than re-expanding a + b.v + c|v|^2
    vals = np.zeros((g.n_x, g.n_v))
    vals[live] = gv
    return MaxwellianSpec(macro, "conservative", lam_out, iterations=it, residual=float(np.max(res)), values=vals)


def project(state: KineticState, mode: str = "conservative", **kw) -> tuple[MaxwellianSpec, np.ndarray]:
    """Maxwellian projection of ``state`` and its values on the grid."""
    if mode == "conservative":
        spec = project_maxwellian_conservative(state, **kw)
    elif mode == "sampled":
        spec = project_sampled(state, **{k: v for k, v in kw.items() if k == "floor"})
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    return spec, spec.evaluate(state.grid)


def moment_vector(f: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Per-cell discrete (mass, momentum, |v|^2) moments, shape ``(n_x, d + 2)``."""
    w = grid.v_weight
    return np.concatenate(
        [
            (np.sum(f, axis=1) * w)[:, None],
            (f @ grid.v_nodes) * w,
            ((f @ grid.v_sq) * w)[:, None],
        ],
        axis=1,
    )


# -- binary snapshots -------------------------------------------------------

MAGIC = b"BGKF"
VERSION = 1
_HEADER = struct.Struct("<4sIIII3d")


def write_snapshot(state: KineticState, path) -> None:
    """Write ``state`` as BGKF: header then f as little-endian float64, x-major."""
    g = state.grid
    head = _HEADER.pack(MAGIC, VERSION, g.dim, g.x_count, g.v_count, g.x_length, g.v_max, state.time)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(state.f, dtype="<f8").tobytes())


def read_snapshot(path) -> KineticState:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, dim, xc, vc, xl, vm, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = make_grid(dim, xc, xl, vc, vm)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != grid.n_x * grid.n_v:
        raise ValueError(f"snapshot body has {body.size} values, expected {grid.n_x * grid.n_v}")
    return KineticState(grid, body.reshape(grid.n_x, grid.n_v).astype(float), t)
