"""Relative entropy functionals and the pointwise inequalities they rely on."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fields import KineticState, MacroFields, maxwellian_values, project
from .grid import PhaseGrid

VALUE_FLOOR = 1e-300
MASS_TOL = 1e-10


class SupportError(ValueError):
    """The first argument charges a point where the reference vanishes."""

    def __init__(self, index, f_value: float, g_value: float):
        self.index = index
        super().__init__(f"support violation at cell {index}: f={f_value:.3e} but reference={g_value:.3e}")


class MaxwellianEntropy(NamedTuple):
    total: float
    mass_term: float
    velocity_term: float
    temperature_term: float


class EntropySplit(NamedTuple):
    h_total: float
    h_to_own_maxwellian: float
    h_maxwellian_to_target: float
    residual: float


@dataclass
class EntropyBreakdown:
    h_f_given_g: float
    h_g_given_f: float | None
    symmetrized: float | None
    l1_distance: float
    ckp_bound: float


def _arrays(f):
    return f.f if isinstance(f, KineticState) else np.asarray(f, dtype=float)


def _weight(arr: np.ndarray, grid: PhaseGrid) -> float:
    if arr.shape == (grid.n_x, grid.n_v):
        return grid.x_weight * grid.v_weight
    if arr.shape == (grid.n_x,):
        return grid.x_weight
    raise ValueError(f"array of shape {arr.shape} does not live on the grid")


SERIES_CUTOFF = 1e-3


def _near_one(delta: np.ndarray, exact: np.ndarray, coeff) -> np.ndarray:
    """Replace ``exact`` by the Taylor series sum_k coeff(k) delta^k (k = 2..7) where |delta| is small."""
    small = np.abs(delta) < SERIES_CUTOFF
    if not np.any(small):
        return exact
    d = delta[small]
    series = sum(coeff(k) * d**k for k in range(2, 8))
    out = np.array(exact, dtype=float, copy=True)
    out[small] = series
    return out


def _witness(mask: np.ndarray):
    idx = np.unravel_index(int(np.flatnonzero(mask)[0]), mask.shape)
    return tuple(int(i) for i in idx)


def relative_entropy(f, g, grid: PhaseGrid, floor: float = VALUE_FLOOR, bregman: bool = False) -> float:
    """Quadrature of ``f log(f/g)``; entries with ``f < floor`` contribute 0.

    Works on phase-space arrays and on spatial densities alike. With
    ``bregman=True`` the integrand is ``f log(f/g) - f + g``, which is
    pointwise nonnegative, agrees with the plain form for equal masses and
    stays accurate when ``f`` and ``g`` are nearly equal.
    """
    f, g = _arrays(f), _arrays(g)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    w = _weight(f, grid)
    if np.any(f < 0):
        raise ValueError("relative_entropy: first argument has negative entries")
    live = f >= floor
    bad = live & (g < floor)
    if np.any(bad):
        idx = _witness(bad)
        raise SupportError(idx, f[idx], g[idx])
    fl, gl = f[live], g[live]
    if not bregman:
        return float(np.sum(fl * (np.log(fl) - np.log(gl))) * w)
    delta = (fl - gl) / gl
    # g * phi(1 + delta) with phi(r) = r log r - r + 1
    phi = _near_one(delta, (1.0 + delta) * np.log1p(delta) - delta, lambda k: (-1) ** k / (k * (k - 1)))
    core = gl * phi
    return float((np.sum(core) + np.sum(g[~live])) * w)


def maxwellian_relative_entropy(m1: MacroFields, m2: MacroFields, grid: PhaseGrid) -> MaxwellianEntropy:
    """Closed form of H(M1|M2) split into density, velocity and temperature parts."""
    rho1, rho2 = m1.rho, m2.rho
    sup = rho1 > 0
    if np.any(rho2[sup] <= 0) or np.any(m1.theta[sup] <= 0) or np.any(m2.theta[sup] <= 0):
        raise ValueError("maxwellian_relative_entropy: need rho2 > 0 and positive temperatures on supp(rho1)")
    d = m1.dim
    w = grid.x_weight
    r1 = rho1[sup]
    ratio = m1.theta[sup] / m2.theta[sup]
    du2 = np.sum((m1.u[sup] - m2.u[sup]) ** 2, axis=1)
    mass = float(np.sum(r1 * np.log(r1 / rho2[sup])) * w)
    vel = float(0.5 * np.sum(r1 * du2 / m2.theta[sup]) * w)
    temp = float(0.5 * d * np.sum(r1 * psi(ratio)) * w)
    return MaxwellianEntropy(mass + vel + temp, mass, vel, temp)


def entropy_split(state: KineticState, target: MacroFields, mode: str = "conservative") -> EntropySplit:
    """Entropy Pythagoras: H(f|M) against H(f|M(f)) + H(M(f)|M), each by quadrature."""
    grid = state.grid
    _, own = project(state, mode)
    tgt = maxwellian_values(target, grid)
    h_total = relative_entropy(state.f, tgt, grid)
    h_own = relative_entropy(state.f, own, grid)
    h_mm = relative_entropy(own, tgt, grid)
    return EntropySplit(h_total, h_own, h_mm, h_total - h_own - h_mm)


def symmetrized_dissipation(f, g, grid: PhaseGrid, floor: float = VALUE_FLOOR) -> tuple[float, float]:
    """Return ``(sum (f-g) log(f/g), sum (f-g)^2/(f+g))`` by quadrature."""
    f, g = _arrays(f), _arrays(g)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {g.shape}")
    w = _weight(f, grid)
    fpos, gpos = f >= floor, g >= floor
    bad = fpos ^ gpos
    if np.any(bad):
        idx = _witness(bad)
        raise SupportError(idx, f[idx], g[idx])
    fl, gl = f[fpos], g[fpos]
    diff = fl - gl
    dis = float(np.sum(diff * (np.log(fl) - np.log(gl))) * w)
    chi = float(np.sum(diff**2 / (fl + gl)) * w)
    return dis, chi


def log_mean_inequality(a, b):
    """Both sides of ``2(a-b)^2/(a+b) <= (a-b) log(a/b)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("log_mean_inequality needs a, b > 0")
    diff = a - b
    lhs = 2.0 * diff**2 / (a + b)
    rhs = diff * (np.log(a) - np.log(b))
    return lhs, rhs


def psi(r):
    """``r - 1 - log r``, with a series branch so it stays accurate near r = 1."""
    delta = np.atleast_1d(np.asarray(r, dtype=float) - 1.0)
    out = _near_one(delta, delta - np.log1p(delta), lambda k: (-1) ** k / k)
    return out if np.ndim(r) else float(out[0])


def psi_quadratic_bound(r, r_bar):
    """``(r-1)^2 <= C (r - 1 - log r)`` on (0, r_bar] with ``C = 2 max(1, r_bar)``.

    ``r_bar`` may be an array broadcasting against ``r``.
    """
    r = np.asarray(r, dtype=float)
    r_bar = np.asarray(r_bar, dtype=float)
    if np.any(r_bar <= 0):
        raise ValueError("r_bar must be positive")
    if np.any(r <= 0) or np.any(r > r_bar):
        raise ValueError("r must lie in (0, r_bar]")
    const = 2.0 * np.maximum(1.0, r_bar)
    if const.ndim == 0:
        const = float(const)
    return (r - 1.0) ** 2, const * psi(r), const


def l1_distance(f, g, grid: PhaseGrid) -> float:
    f, g = _arrays(f), _arrays(g)
    return float(np.sum(np.abs(f - g)) * _weight(f, grid))


def ckp_check(f, g, grid: PhaseGrid, mass_tol: float = MASS_TOL) -> tuple[float, float]:
    """``(||f-g||_1^2, 2 H(f|g))`` for equal-mass arguments."""
    f, g = _arrays(f), _arrays(g)
    w = _weight(f, grid)
    mf, mg = np.sum(f) * w, np.sum(g) * w
    if abs(mf - mg) > mass_tol * max(abs(mf), abs(mg), 1.0):
        raise ValueError(f"ckp_check: masses differ ({mf!r} vs {mg!r})")
    return l1_distance(f, g, grid) ** 2, 2.0 * relative_entropy(f, g, grid)


def entropy_breakdown(f, g, grid: PhaseGrid, both: bool = True) -> EntropyBreakdown:
    h_fg = relative_entropy(f, g, grid)
    h_gf = relative_entropy(g, f, grid) if both else None
    return EntropyBreakdown(
        h_f_given_g=h_fg,
        h_g_given_f=h_gf,
        symmetrized=None if h_gf is None else h_fg + h_gf,
        l1_distance=l1_distance(f, g, grid),
        ckp_bound=float(np.sqrt(2.0 * max(h_fg, 0.0))),
    )
