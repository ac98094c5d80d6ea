"""Uniform configuration-space grid for two particles, with derivatives and quadrature.

Fields are plain numpy arrays of shape ``grid.shape`` (particle-1 axes first).
Vector fields are stacked along a leading axis of length ``grid.naxes``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

# Centered stencils, offsets -m..m.
FIRST_DERIVATIVE = {
    2: (-1 / 2, 0.0, 1 / 2),
    4: (1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12),
    6: (-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60),
    8: (1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280),
    10: (-1 / 1260, 5 / 504, -5 / 84, 5 / 21, -5 / 6, 0.0, 5 / 6, -5 / 21, 5 / 84, -5 / 504, 1 / 1260),
    12: (1 / 5544, -1 / 385, 1 / 56, -5 / 63, 15 / 56, -6 / 7, 0.0,
         6 / 7, -15 / 56, 5 / 63, -1 / 56, 1 / 385, -1 / 5544),
}
SECOND_DERIVATIVE = {
    2: (1.0, -2.0, 1.0),
    4: (-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12),
    6: (1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90),
    8: (-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560),
    10: (1 / 3150, -5 / 1008, 5 / 126, -5 / 21, 5 / 3, -5269 / 1800, 5 / 3, -5 / 21, 5 / 126, -5 / 1008, 1 / 3150),
    12: (-1 / 16632, 2 / 1925, -1 / 112, 10 / 189, -15 / 56, 12 / 7, -5369 / 1800,
         12 / 7, -15 / 56, 10 / 189, -1 / 112, 2 / 1925, -1 / 16632),
}

BACKENDS = ("fd", "spectral")
DECAY_THRESHOLD = 1e-12


class BoundaryDecayWarning(UserWarning):
    """Integrand has not decayed at the boundary shell; quadrature may be truncated."""


@dataclass(frozen=True)
class Grid:
    dims_per_particle: int
    points_per_axis: int
    half_extent: float
    backend: str = "fd"
    fd_order: int = 8

    @property
    def d(self) -> int:
        return self.dims_per_particle

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def L(self) -> float:
        return self.half_extent

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_axis

    h = spacing

    @property
    def naxes(self) -> int:
        return 2 * self.dims_per_particle

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.naxes

    @property
    def npoints(self) -> int:
        return self.points_per_axis**self.naxes

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.naxes

    @cached_property
    def axis_coordinates(self) -> np.ndarray:
        return -self.half_extent + self.spacing * np.arange(self.points_per_axis)

    def coordinate(self, axis: int) -> np.ndarray:
        """Coordinate of ``axis`` shaped to broadcast against a field."""
        self._check_axis(axis)
        shape = [1] * self.naxes
        shape[axis] = self.points_per_axis
        return self.axis_coordinates.reshape(shape)

    def particle_axes(self, particle: int) -> tuple[int, ...]:
        start = 0 if particle == 1 else self.dims_per_particle
        return tuple(range(start, start + self.dims_per_particle))

    @property
    def stencil_halfwidth(self) -> int:
        if self.backend == "spectral":
            return self.points_per_axis // 2
        return self.fd_order // 2

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    def max_laplacian_eigenvalue(self) -> float:
        """Largest magnitude of the discrete Laplacian's symbol."""
        if self.backend == "spectral":
            per_axis = (np.pi / self.spacing) ** 2
        else:
            w = np.asarray(SECOND_DERIVATIVE[self.fd_order])
            m = len(w) // 2
            theta = np.linspace(0.0, np.pi, 2049)
            symbol = w[m] + 2.0 * sum(w[m + k] * np.cos(k * theta) for k in range(1, m + 1))
            per_axis = np.abs(symbol).max() / self.spacing**2
        return self.naxes * per_axis

    def check_field(self, f: np.ndarray) -> None:
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid shape {self.shape}")

    def _check_axis(self, axis: int) -> None:
        if not 0 <= axis < self.naxes:
            raise ValueError(f"axis {axis} out of range for {self.naxes} axes")


def build_grid(d: int, n: int, L: float, backend: str = "fd", fd_order: int = 8) -> Grid:
    if d < 1:
        raise ValueError(f"dims per particle must be >= 1, got {d}")
    if n < 8 or n % 2:
        raise ValueError(f"points per axis must be even and >= 8, got {n}")
    if not L > 0:
        raise ValueError(f"half extent must be positive, got {L}")
    if backend not in BACKENDS:
        raise ValueError(f"unknown derivative backend {backend!r}")
    if backend == "fd" and fd_order not in FIRST_DERIVATIVE:
        raise ValueError(f"fd_order must be one of {sorted(FIRST_DERIVATIVE)}, got {fd_order}")
    return Grid(int(d), int(n), float(L), backend, int(fd_order))


def _spectral(grid: Grid, f: np.ndarray, axis: int, power: int) -> np.ndarray:
    k = grid.wavenumbers.copy()
    if power == 1:
        k[grid.n // 2] = 0.0
        mult = 1j * k
    else:
        mult = -(k**2)
    shape = [1] * grid.naxes
    shape[axis] = grid.n
    out = np.fft.ifft(np.fft.fft(f, axis=axis) * mult.reshape(shape), axis=axis)
    return out.real if np.isrealobj(f) else out


def diff(grid: Grid, f: np.ndarray, axis: int) -> np.ndarray:
    """Partial derivative of ``f`` along ``axis``.

    The finite-difference backend treats the field as zero outside the grid,
    so it is only accurate for fields decayed at the boundary.
    """
    grid._check_axis(axis)
    if grid.backend == "spectral":
        return _spectral(grid, f, axis, 1)
    w = np.asarray(FIRST_DERIVATIVE[grid.fd_order]) / grid.spacing
    return ndimage.correlate1d(f, w, axis=axis, mode="constant", cval=0.0)


def second_diff(grid: Grid, f: np.ndarray, axis: int) -> np.ndarray:
    grid._check_axis(axis)
    if grid.backend == "spectral":
        return _spectral(grid, f, axis, 2)
    w = np.asarray(SECOND_DERIVATIVE[grid.fd_order]) / grid.spacing**2
    return ndimage.correlate1d(f, w, axis=axis, mode="constant", cval=0.0)


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    out = second_diff(grid, f, 0)
    for axis in range(1, grid.naxes):
        out += second_diff(grid, f, axis)
    return out


def gradient(grid: Grid, f: np.ndarray) -> np.ndarray:
    return np.stack([diff(grid, f, axis) for axis in range(grid.naxes)])


def divergence(grid: Grid, v: np.ndarray) -> np.ndarray:
    out = diff(grid, v[0], 0)
    for axis in range(1, grid.naxes):
        out += diff(grid, v[axis], axis)
    return out


def boundary_shell_max(grid: Grid, f: np.ndarray, width: int = 1) -> float:
    """Largest |f| within ``width`` cells of any face of the domain."""
    width = max(1, width)
    worst = 0.0
    for axis in range(f.ndim):
        lo = np.take(f, range(width), axis=axis)
        hi = np.take(f, range(f.shape[axis] - width, f.shape[axis]), axis=axis)
        worst = max(worst, float(np.abs(lo).max()), float(np.abs(hi).max()))
    return worst


def integrate(grid: Grid, f: np.ndarray, check: bool = True) -> float:
    """Riemann sum of ``f`` over the full configuration space.

    Emits :class:`BoundaryDecayWarning` when ``f`` has not decayed below
    ``DECAY_THRESHOLD`` on the outermost cells.
    """
    grid.check_field(f)
    if check and boundary_shell_max(grid, f) > DECAY_THRESHOLD:
        warnings.warn(
            "integrand exceeds the decay threshold on the boundary shell",
            BoundaryDecayWarning,
            stacklevel=2,
        )
    return float(np.sum(f)) * grid.cell_volume


def marginalize_particle2(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Integrate out the particle-2 coordinates, leaving a field over particle 1."""
    grid.check_field(f)
    return np.sum(f, axis=grid.particle_axes(2)) * grid.spacing**grid.d
