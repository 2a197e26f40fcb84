"""Truncated periodic phase space and its midpoint quadrature.

Arrays living on a grid use a flattened layout: spatial fields have shape
``(n_x,)`` (or ``(n_x, ...)``), phase-space fields have shape ``(n_x, n_v)``.
Both spatial and velocity cells are ordered row-major over their axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid on the torus [0, L)^d times the box [-v_max, v_max]^d."""

    dim: int
    x_count: int
    x_length: float
    v_count: int
    v_max: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.x_count < 1 or self.v_count < 1:
            raise ValueError("cell counts must be >= 1")
        if not self.x_length > 0 or not self.v_max > 0:
            raise ValueError("x_length and v_max must be positive")

    @property
    def dx(self) -> float:
        return self.x_length / self.x_count

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.v_count

    @property
    def x_shape(self) -> tuple[int, ...]:
        return (self.x_count,) * self.dim

    @property
    def v_shape(self) -> tuple[int, ...]:
        return (self.v_count,) * self.dim

    @property
    def n_x(self) -> int:
        return self.x_count**self.dim

    @property
    def n_v(self) -> int:
        return self.v_count**self.dim

    @property
    def x_weight(self) -> float:
        return self.dx**self.dim

    @property
    def v_weight(self) -> float:
        return self.dv**self.dim

    @cached_property
    def x_axis(self) -> np.ndarray:
        return np.arange(self.x_count) * self.dx

    @cached_property
    def v_axis(self) -> np.ndarray:
        return -self.v_max + (np.arange(self.v_count) + 0.5) * self.dv

    @cached_property
    def x_nodes(self) -> np.ndarray:
        """Spatial node coordinates, shape ``(n_x, dim)``."""
        return _tensor_nodes(self.x_axis, self.dim)

    @cached_property
    def v_nodes(self) -> np.ndarray:
        """Velocity node coordinates, shape ``(n_v, dim)``."""
        return _tensor_nodes(self.v_axis, self.dim)

    @cached_property
    def v_sq(self) -> np.ndarray:
        return np.sum(self.v_nodes**2, axis=1)

    @cached_property
    def wavenumbers(self) -> list[np.ndarray]:
        """Angular wavenumbers per axis, broadcastable against ``x_shape``."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.x_count, d=self.dx)
        out = []
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.x_count
            out.append(k.reshape(shape))
        return out


def _tensor_nodes(axis: np.ndarray, dim: int) -> np.ndarray:
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def make_grid(dim: int, x_count: int, x_length: float, v_count: int, v_max: float) -> PhaseGrid:
    """Build a PhaseGrid, rejecting degenerate sizes.

    >>> g = make_grid(1, 4, 1.0, 4, 2.0)
    >>> g.dx, g.dv, list(g.v_axis)
    (0.25, 1.0, [-1.5, -0.5, 0.5, 1.5])
    """
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if int(x_count) != x_count or int(v_count) != v_count:
        raise ValueError("cell counts must be integers")
    if x_count < 2 or v_count < 2:
        raise ValueError("cell counts must be >= 2")
    if not (x_length > 0 and v_max > 0):
        raise ValueError("x_length and v_max must be positive")
    return PhaseGrid(int(dim), int(x_count), float(x_length), int(v_count), float(v_max))


def default_v_max(u_sup: float, theta_max: float, widths: float = 8.0) -> float:
    """Velocity truncation covering ``widths`` thermal speeds past the bulk flow."""
    return float(u_sup + widths * np.sqrt(theta_max))


def _check_last(field: np.ndarray, size: int, what: str):
    if field.ndim == 0 or field.shape[-1] != size:
        raise ValueError(f"{what}: expected trailing axis of length {size}, got shape {field.shape}")


def integrate_v(field, grid: PhaseGrid):
    """Midpoint rule over velocity (the trailing axis)."""
    field = np.asarray(field)
    _check_last(field, grid.n_v, "integrate_v")
    return np.sum(field, axis=-1) * grid.v_weight


def integrate_x(field, grid: PhaseGrid):
    """Midpoint rule over the torus (the leading axis)."""
    field = np.asarray(field)
    if field.ndim == 0 or field.shape[0] != grid.n_x:
        raise ValueError(f"integrate_x: expected leading axis of length {grid.n_x}, got shape {field.shape}")
    return np.sum(field, axis=0) * grid.x_weight


def integrate_xv(field, grid: PhaseGrid) -> float:
    field = np.asarray(field)
    if field.shape != (grid.n_x, grid.n_v):
        raise ValueError(f"integrate_xv: expected shape {(grid.n_x, grid.n_v)}, got {field.shape}")
    return float(np.sum(field) * (grid.x_weight * grid.v_weight))


def to_spatial_grid(field: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Reshape a flattened spatial field ``(n_x, ...)`` to ``(*x_shape, ...)``."""
    return field.reshape(grid.x_shape + field.shape[1:])


def from_spatial_grid(field: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    return field.reshape((grid.n_x,) + field.shape[grid.dim:])


def spectral_derivative(field: np.ndarray, grid: PhaseGrid, axis: int, dealias: bool = False) -> np.ndarray:
    """Fourier derivative along spatial ``axis`` of a flattened field ``(n_x, ...)``.

    The Nyquist mode is dropped (its derivative is not representable as a
    real field). With ``dealias`` the 2/3 rule is applied on every axis.
    """
    f = to_spatial_grid(np.asarray(field, dtype=float), grid)
    axes = tuple(range(grid.dim))
    fh = np.fft.fftn(f, axes=axes)
    k = _expand(grid.wavenumbers[axis], f.ndim)
    mult = 1j * k * _expand(spectral_mask(grid, dealias), f.ndim)
    out = np.fft.ifftn(fh * mult, axes=axes).real
    return from_spatial_grid(out, grid)


def spectral_mask(grid: PhaseGrid, dealias: bool) -> np.ndarray:
    n = grid.x_count
    idx = np.fft.fftfreq(n, d=1.0 / n)
    keep = np.ones(n, dtype=bool)
    if n % 2 == 0:
        keep[n // 2] = False
    if dealias:
        keep &= np.abs(idx) < n / 3.0
    m = np.ones(grid.x_shape)
    for axis in range(grid.dim):
        shape = [1] * grid.dim
        shape[axis] = n
        m = m * keep.reshape(shape)
    return m


def _expand(arr: np.ndarray, ndim: int) -> np.ndarray:
    return arr.reshape(arr.shape + (1,) * (ndim - arr.ndim))
