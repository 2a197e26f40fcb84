"""Relative entropy identity terms, proof-step bound monitors and assumption records.

Every inequality is checked with constants assembled from sup-norms measured
on the current snapshot, so each monitor reports ``lhs``, ``rhs`` and a slack.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .entropy import maxwellian_relative_entropy, relative_entropy, symmetrized_dissipation, l1_distance
from .euler import EulerState, Gradients, euler_step, gradients
from .fields import KineticState, MacroFields, log_maxwellian, maxwellian_values, project
from .grid import PhaseGrid, spectral_derivative

REPORT_COLUMNS = [
    "t", "H", "H_f_Mf", "H_Mf_M", "D_eps",
    "R_u", "R_u_max", "R_u_extra", "R_theta", "R_theta_max", "R_theta_extra",
    "dHdt_id", "m6", "sup_ueps", "min_theta_eps", "max_theta_eps",
    "err_mass", "err_vel", "err_temp", "l1_rho", "l1_mom", "l1_rhotheta",
]

MONITOR_COLUMNS = [
    "t", "l1_f_M", "l1_Mf_M", "chi_h", "maxwellian_part_mismatch",
    "step1_lhs", "step1_rhs", "step2_lhs", "step2_rhs", "phi_growth_ratio",
    "sup_u", "sup_grad_u", "sup_grad_logtheta", "min_theta", "max_theta",
]

BOUND_ATOL = 1e-13


class MacroErrors(NamedTuple):
    mass_term: float
    velocity_term: float
    temperature_term: float
    l1_rho: float
    l1_mom: float
    l1_rhotheta: float


@dataclass
class AssumptionRecord:
    sup_ueps: float
    min_theta_eps: float
    max_theta_eps: float
    m6: float
    mass_euler: float
    min_rho: float
    min_theta: float
    max_theta: float
    sup_u: float
    sup_grad_u: float
    sup_grad_logtheta: float


@dataclass
class EntropyReport:
    t: float
    H: float
    H_f_Mf: float
    H_Mf_M: float
    D_eps: float
    R_u: float
    R_u_max: float
    R_u_extra: float
    R_theta: float
    R_theta_max: float
    R_theta_extra: float
    dHdt_id: float
    m6: float
    sup_ueps: float
    min_theta_eps: float
    max_theta_eps: float
    err_mass: float
    err_vel: float
    err_temp: float
    l1_rho: float
    l1_mom: float
    l1_rhotheta: float
    # not part of the fixed report CSV
    epsilon: float = 0.0
    l1_f_M: float = 0.0
    l1_Mf_M: float = 0.0
    chi_h: float = 0.0
    R_u_max_closed: float = 0.0
    R_theta_max_closed: float = 0.0
    maxwellian_part_mismatch: float = 0.0
    step1_lhs: float = 0.0
    step1_rhs: float = 0.0
    step2_lhs: float = 0.0
    step2_rhs: float = 0.0
    phi_growth_ratio: float = 0.0
    sup_u: float = 0.0
    sup_grad_u: float = 0.0
    sup_grad_logtheta: float = 0.0
    min_theta: float = 0.0
    max_theta: float = 0.0
    mass_f: float = 1.0
    dim: int = 1

    @property
    def macro_total(self) -> float:
        return self.err_mass + self.err_vel + self.err_temp

    @property
    def step1_ok(self) -> bool:
        return self.step1_lhs <= self.step1_rhs + BOUND_ATOL

    @property
    def step2_ok(self) -> bool:
        return self.step2_lhs <= self.step2_rhs + BOUND_ATOL

    def row(self, columns=REPORT_COLUMNS) -> list[float]:
        return [getattr(self, c) for c in columns]


def _same_space(f_grid: PhaseGrid, e_grid: PhaseGrid):
    if (f_grid.dim, f_grid.x_count, f_grid.x_length) != (e_grid.dim, e_grid.x_count, e_grid.x_length):
        raise ValueError("kinetic and Euler states live on different spatial grids")


def traceless_strain(grad_u: np.ndarray) -> np.ndarray:
    """Symmetric traceless part of the velocity gradient, per cell."""
    d = grad_u.shape[-1]
    sym = 0.5 * (grad_u + np.swapaxes(grad_u, -1, -2))
    tr = np.trace(grad_u, axis1=-2, axis2=-1)
    return sym - (tr / d)[..., None, None] * np.eye(d)


def _phi(c: np.ndarray, theta: np.ndarray, strain0: np.ndarray, grad_lt: np.ndarray):
    """Weights of the stress and heat-flux remainders; ``c`` has shape (n_x, m, d)."""
    d = c.shape[-1]
    th = theta[:, None]
    phi_u = np.einsum("xvi,xij,xvj->xv", c, strain0, c) / th
    c2 = np.sum(c**2, axis=-1)
    phi_t = 0.5 * np.einsum("xvi,xi->xv", c, grad_lt) * (c2 / th - (d + 2))
    return phi_u, phi_t


def dlogM_material_derivative(euler_state: EulerState, x_cell, v, grads: Gradients | None = None) -> np.ndarray:
    """Closed-form ``(d_t + v.grad_x) log M`` at spatial cells ``x_cell`` and velocities ``v``.

    ``x_cell`` has shape (m,), ``v`` shape (m, d).
    """
    grads = gradients(euler_state) if grads is None else grads
    m = euler_state.macro
    x_cell = np.atleast_1d(np.asarray(x_cell, dtype=int))
    v = np.asarray(v, dtype=float).reshape(x_cell.size, -1)
    c = (v - m.u[x_cell])[:, None, :]
    phi_u, phi_t = _phi(c, m.theta[x_cell], traceless_strain(grads.grad_u[x_cell]), grads.grad_logtheta[x_cell])
    return (phi_u + phi_t)[:, 0]


class DlogMCheck(NamedTuple):
    max_residual: float
    residuals: np.ndarray
    x_cell: np.ndarray
    v: np.ndarray


def sample_phase_points(grid: PhaseGrid, n: int, rng: np.random.Generator, v_max: float | None = None):
    v_max = grid.v_max if v_max is None else v_max
    x_cell = rng.integers(0, grid.n_x, size=n)
    v = rng.uniform(-v_max, v_max, size=(n, grid.dim))
    return x_cell, v


def verify_dlogM(euler_state: EulerState, dt_fd: float, sample_points) -> DlogMCheck:
    """Compare a centred time difference plus spectral x-derivatives of log M with the closed form.

    ``sample_points = (x_cell, v)``. The time difference uses Euler advances
    of ``+dt_fd/2`` and ``-dt_fd/2``.
    """
    x_cell, v = sample_points
    x_cell = np.asarray(x_cell, dtype=int)
    v = np.asarray(v, dtype=float).reshape(x_cell.size, -1)
    grid = euler_state.grid
    d = grid.dim
    plus = euler_step(euler_state, 0.5 * dt_fd, blowup_factor=np.inf)
    minus = euler_step(euler_state, -0.5 * dt_fd, blowup_factor=np.inf)

    def logm(st):
        m = st.macro
        return log_maxwellian(m.rho[x_cell], m.u[x_cell], m.theta[x_cell], v, d)

    dt_part = (logm(plus) - logm(minus)) / dt_fd

    m = euler_state.macro
    th = m.theta[x_cell]
    c = v - m.u[x_cell]
    c2 = np.sum(c**2, axis=1)
    log_rho = np.log(m.rho)
    log_th = np.log(m.theta)
    grad_x = np.zeros_like(v)
    for k in range(d):
        dlr = spectral_derivative(log_rho, grid, k)[x_cell]
        dlt = spectral_derivative(log_th, grid, k)[x_cell]
        du = spectral_derivative(m.u, grid, k)[x_cell]
        grad_x[:, k] = dlr - 0.5 * d * dlt + np.sum(c * du, axis=1) / th + c2 / (2.0 * th) * dlt
    lhs = dt_part + np.sum(v * grad_x, axis=1)
    rhs = dlogM_material_derivative(euler_state, x_cell, v)
    res = np.abs(lhs - rhs)
    return DlogMCheck(float(np.max(res)), res, x_cell, v)


def macro_error_terms(f_moments: MacroFields, euler_macro: MacroFields, grid: PhaseGrid) -> MacroErrors:
    """Entropy split of H(M(f)|M) plus the L1 errors of density, momentum and pressure."""
    terms = maxwellian_relative_entropy(f_moments, euler_macro, grid)
    # equal-mass density term in the form that survives rho_eps ~ rho
    terms = terms._replace(mass_term=relative_entropy(f_moments.rho, euler_macro.rho, grid, bregman=True))
    w = grid.x_weight
    l1_rho = float(np.sum(np.abs(f_moments.rho - euler_macro.rho)) * w)
    dmom = f_moments.momentum - euler_macro.momentum
    l1_mom = float(np.sum(np.linalg.norm(dmom, axis=1)) * w)
    l1_rt = float(np.sum(np.abs(f_moments.rho * f_moments.theta - euler_macro.rho * euler_macro.theta)) * w)
    return MacroErrors(terms.mass_term, terms.velocity_term, terms.temperature_term, l1_rho, l1_mom, l1_rt)


def monitor_assumptions(f_state: KineticState, euler_state: EulerState, f_moments: MacroFields | None = None,
                        grads: Gradients | None = None) -> AssumptionRecord:
    from .fields import compute_moments

    g = f_state.grid
    mom = compute_moments(f_state) if f_moments is None else f_moments
    grads = gradients(euler_state) if grads is None else grads
    live = mom.rho > 0
    em = euler_state.macro
    return AssumptionRecord(
        sup_ueps=float(np.max(np.linalg.norm(mom.u[live], axis=1))),
        min_theta_eps=float(np.min(mom.theta[live])),
        max_theta_eps=float(np.max(mom.theta[live])),
        m6=float(np.sum(f_state.f @ g.v_sq**3) * g.x_weight * g.v_weight),
        mass_euler=float(np.sum(em.rho) * g.x_weight),
        min_rho=float(np.min(em.rho)),
        min_theta=float(np.min(em.theta)),
        max_theta=float(np.max(em.theta)),
        sup_u=grads.sup_u,
        sup_grad_u=grads.sup_grad_u,
        sup_grad_logtheta=grads.sup_grad_logtheta,
    )


def step1_constant(d: int, theta_min: float, theta_max: float, sup_grad_u: float, sup_grad_logtheta: float,
                   u_bar: float, sup_u: float, theta_bar_eps: float) -> float:
    """Constant C with |R_u^M| + |R_theta^M| <= C H(M(f)|M), traced through the Step-1 chain."""
    c_u = (2.0 / theta_min) * sup_grad_u * 2.0 * theta_max
    r_bar = theta_bar_eps / theta_min
    c_quad = 2.0 * max(1.0, r_bar)
    c_t = 0.5 * sup_grad_logtheta * (
        ((d + 2) / 2.0 + (u_bar + sup_u) / theta_min) * 2.0 * theta_max
        + (d + 2) / 2.0 * c_quad * 2.0 / d
    )
    return c_u + c_t


def phi_growth_constant(d: int, theta_min: float, sup_u: float, sup_grad_u: float, sup_grad_logtheta: float) -> float:
    """Constant C with Phi_u^2 + Phi_theta^2 <= C (1 + |v|^6) from the measured sup-norms."""
    a = sup_grad_u / theta_min
    b = 0.5 * sup_grad_logtheta
    U = sup_u
    cu = 8.0 * a**2 * (1.0 + U**4)
    ct = b**2 * 2.0 * (32.0 * (1.0 + U**6) / theta_min**2 + 2.0 * (d + 2) ** 2 * (1.0 + U**2))
    return cu + ct


def rei_terms(f_state: KineticState, euler_state: EulerState, epsilon: float, mode: str = "conservative",
              time_tol: float | None = None) -> EntropyReport:
    """All terms of the relative entropy identity and the proof monitors at one time."""
    grid = f_state.grid
    _same_space(grid, euler_state.grid)
    if time_tol is not None and abs(f_state.time - euler_state.time) > time_tol:
        raise ValueError(f"time mismatch: kinetic t={f_state.time}, Euler t={euler_state.time}")
    d = grid.dim
    f = f_state.f
    spec, G = project(f_state, mode)
    mom = spec.macro
    em = euler_state.macro
    M = maxwellian_values(em, grid)
    grads = gradients(euler_state)

    H = relative_entropy(f, M, grid, bregman=True)
    H_fG = relative_entropy(f, G, grid, bregman=True)
    H_GM = relative_entropy(G, M, grid, bregman=True)
    D, chi = symmetrized_dissipation(f, G, grid)

    wxv = grid.x_weight * grid.v_weight
    wx = grid.x_weight
    c = grid.v_nodes[None, :, :] - em.u[:, None, :]
    strain0 = traceless_strain(grads.grad_u)
    phi_u, phi_t = _phi(c, em.theta, strain0, grads.grad_logtheta)
    h = f - G
    R_u_max = -float(np.sum(phi_u * G) * wxv)
    R_u_extra = -float(np.sum(phi_u * h) * wxv)
    R_t_max = -float(np.sum(phi_t * G) * wxv)
    R_t_extra = -float(np.sum(phi_t * h) * wxv)
    R_u = -float(np.sum(phi_u * f) * wxv)
    R_t = -float(np.sum(phi_t * f) * wxv)

    du = mom.u - em.u
    du2 = np.sum(du**2, axis=1)
    rho_e = mom.rho
    R_u_closed = -float(np.sum(rho_e / em.theta * np.einsum("xi,xij,xj->x", du, strain0, du)) * wx)
    heat = (d + 2) * (mom.theta / em.theta - 1.0) + du2 / em.theta
    R_t_closed = -0.5 * float(np.sum(rho_e * np.sum(du * grads.grad_logtheta, axis=1) * heat) * wx)

    errs = macro_error_terms(mom, em, grid)
    rec = monitor_assumptions(f_state, euler_state, mom, grads)

    # Step 1: Maxwellian parts against H(M(f)|M), closed forms throughout
    c1 = step1_constant(d, rec.min_theta, rec.max_theta, grads.sup_grad_u, grads.sup_grad_logtheta,
                        rec.sup_ueps, grads.sup_u, rec.max_theta_eps)
    h_gm_closed = errs.mass_term + errs.velocity_term + errs.temperature_term
    step1_lhs = abs(R_u_closed) + abs(R_t_closed)
    step1_rhs = c1 * h_gm_closed

    # Step 2: Cauchy-Schwarz on each extra term separately
    fg = f + G
    a_u = float(np.sum(phi_u**2 * fg) * wxv)
    a_t = float(np.sum(phi_t**2 * fg) * wxv)
    step2_lhs = abs(R_u_extra) + abs(R_t_extra)
    step2_rhs = (np.sqrt(a_u) + np.sqrt(a_t)) * np.sqrt(max(D, 0.0) / 2.0)

    cphi = phi_growth_constant(d, rec.min_theta, grads.sup_u, grads.sup_grad_u, grads.sup_grad_logtheta)
    if cphi > 0:
        growth = float(np.max((phi_u**2 + phi_t**2) / (cphi * (1.0 + grid.v_sq[None, :] ** 3))))
    else:
        growth = 0.0 if not np.any(phi_u**2 + phi_t**2) else np.inf

    return EntropyReport(
        t=f_state.time, H=H, H_f_Mf=H_fG, H_Mf_M=H_GM, D_eps=D,
        R_u=R_u, R_u_max=R_u_max, R_u_extra=R_u_extra,
        R_theta=R_t, R_theta_max=R_t_max, R_theta_extra=R_t_extra,
        dHdt_id=-D / epsilon + R_u + R_t,
        m6=rec.m6, sup_ueps=rec.sup_ueps, min_theta_eps=rec.min_theta_eps, max_theta_eps=rec.max_theta_eps,
        err_mass=errs.mass_term, err_vel=errs.velocity_term, err_temp=errs.temperature_term,
        l1_rho=errs.l1_rho, l1_mom=errs.l1_mom, l1_rhotheta=errs.l1_rhotheta,
        epsilon=epsilon,
        l1_f_M=l1_distance(f, M, grid), l1_Mf_M=l1_distance(G, M, grid), chi_h=chi,
        R_u_max_closed=R_u_closed, R_theta_max_closed=R_t_closed,
        maxwellian_part_mismatch=abs(R_u_max - R_u_closed) + abs(R_t_max - R_t_closed),
        step1_lhs=step1_lhs, step1_rhs=step1_rhs, step2_lhs=step2_lhs, step2_rhs=float(step2_rhs),
        phi_growth_ratio=growth,
        sup_u=grads.sup_u, sup_grad_u=grads.sup_grad_u, sup_grad_logtheta=grads.sup_grad_logtheta,
        min_theta=rec.min_theta, max_theta=rec.max_theta,
        mass_f=f_state.mass(),
        dim=d,
    )


class ChainLink(NamedTuple):
    name: str
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs


def ckp_chain(rep: EntropyReport, atol: float = 1e-10) -> list[ChainLink]:
    """L1 errors of one report against their bounds derived from H through CKP.

    The momentum and pressure links use Cauchy-Schwarz with the measured
    sup-norms; every right-hand side is itself bounded by a function of H
    since each entropy term is at most H(M(f)|M) <= H.
    """
    pos = lambda a: max(a, 0.0)
    root_h = np.sqrt(2.0 * pos(rep.H))
    tbar = rep.max_theta
    l1_rho_bound = np.sqrt(2.0 * pos(rep.err_mass))
    mom = np.sqrt(pos(rep.mass_f)) * np.sqrt(2.0 * tbar * pos(rep.err_vel)) + rep.sup_u * rep.l1_rho
    c_quad = 2.0 * max(1.0, rep.max_theta_eps / rep.min_theta)
    temp = np.sqrt(pos(rep.mass_f)) * tbar * np.sqrt(c_quad * 2.0 / rep.dim * pos(rep.err_temp)) + tbar * rep.l1_rho
    links = [
        ChainLink("l1_f_M", rep.l1_f_M, root_h),
        ChainLink("l1_Mf_M", rep.l1_Mf_M, np.sqrt(2.0 * pos(rep.H_Mf_M))),
        ChainLink("H_Mf_M<=H", rep.H_Mf_M, rep.H),
        ChainLink("l1_rho", rep.l1_rho, l1_rho_bound),
        ChainLink("l1_mom", rep.l1_mom, mom),
        ChainLink("l1_rhotheta", rep.l1_rhotheta, temp),
    ]
    return [ChainLink(k.name, float(k.lhs), float(k.rhs) + atol) for k in links]


class ReiResidual(NamedTuple):
    times: np.ndarray
    dHdt_fd: np.ndarray
    dHdt_identity: np.ndarray
    abs_residual: np.ndarray
    rel_residual: np.ndarray
    scale: float

    @property
    def max_rel(self) -> float:
        return float(np.max(self.rel_residual))


def verify_rei_over_run(reports, rtol_spacing: float = 1e-6) -> ReiResidual:
    """Centred difference of H over uniformly spaced reports against the identity.

    Residuals are relative to ``max |dH/dt|`` from the identity over the run.
    """
    if len(reports) < 3:
        raise ValueError("need at least 3 snapshots")
    t = np.array([r.t for r in reports])
    H = np.array([r.H for r in reports])
    ident = np.array([r.dHdt_id for r in reports])
    steps = np.diff(t)
    if np.max(np.abs(steps - steps[0])) > rtol_spacing * steps[0]:
        raise ValueError("snapshots are not uniformly spaced")
    fd = (H[2:] - H[:-2]) / (t[2:] - t[:-2])
    idc = ident[1:-1]
    res = np.abs(fd - idc)
    scale = float(np.max(np.abs(ident)))
    rel = res / scale if scale > 0 else res
    return ReiResidual(t[1:-1], fd, idc, res, rel, scale)


class GronwallFit(NamedTuple):
    c_fit: float
    c_lsq: float
    sup_h: float
    bound: float
    holds: bool


def fit_gronwall(times, H, dHdt, epsilon: float, h0: float | None = None, tol: float = 1e-12) -> GronwallFit:
    """Smallest C with dH/dt <= C (H + eps) on the samples, a least-squares C, and the integrated bound."""
    times = np.asarray(times, dtype=float)
    H = np.asarray(H, dtype=float)
    dHdt = np.asarray(dHdt, dtype=float)
    base = H[: dHdt.size] if H.size != dHdt.size else H
    denom = base + epsilon
    c_fit = max(0.0, float(np.max(dHdt / denom)))
    c_lsq = float(np.dot(denom, dHdt) / np.dot(denom, denom))
    h0 = float(H[0]) if h0 is None else h0
    T = float(times[-1] - times[0])
    bound = np.exp(c_fit * T) * (h0 + epsilon)
    sup_h = float(np.max(H))
    return GronwallFit(c_fit, c_lsq, sup_h, float(bound), sup_h <= bound + tol)


def write_report_csv(reports, path, columns=REPORT_COLUMNS) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in reports:
            w.writerow([repr(float(v)) for v in r.row(columns)])


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def report_dict(report: EntropyReport) -> dict:
    return asdict(report)
