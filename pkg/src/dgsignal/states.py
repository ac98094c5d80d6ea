"""Initial states: Gaussian-type densities with a smooth phase, normalized on the grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, integrate

# (a11, a22, a12, m1, m2): rho0 = exp(-(a11 u^2 + a22 v^2 + a12 u v)), u = x_1^1 - m1, v = x_2^1 - m2
PAPER_EXAMPLE = (1.0, 1.0, 1.0, 0.0, 0.0)


@dataclass(frozen=True)
class StateSpec:
    """How to build psi0 = sqrt(rho0) exp(i S0).

    rho0: ``paper_example``, ``gaussian`` (params a11, a22, a12[, m1, m2])
    or ``tabulated`` (``rho0_path`` to a .npy array).
    phase: ``zero``, ``bilinear`` (S0 = a x_1^1 x_2^1) or ``tabulated``.
    """

    rho0: str = "paper_example"
    rho0_params: tuple = ()
    rho0_path: str | None = None
    phase: str = "bilinear"
    phase_a: float = 1.0
    phase_path: str | None = None


def gaussian_density(grid: Grid, a11: float, a22: float, a12: float, m1: float = 0.0, m2: float = 0.0) -> np.ndarray:
    """Unnormalized correlated Gaussian in the first axis of each particle.

    Remaining axes (d > 1) carry an independent exp(-x^2) factor.
    """
    if 4 * a11 * a22 - a12**2 <= 0 or a11 <= 0:
        raise ValueError("quadratic form of the Gaussian is not positive definite")
    u = grid.coordinate(0) - m1
    v = grid.coordinate(grid.d) - m2
    q = a11 * u**2 + a22 * v**2 + a12 * u * v
    for axis in range(grid.naxes):
        if axis not in (0, grid.d):
            q = q + grid.coordinate(axis) ** 2
    return np.broadcast_to(np.exp(-q), grid.shape).copy()


def bilinear_phase(grid: Grid, a: float) -> np.ndarray:
    return np.broadcast_to(a * grid.coordinate(0) * grid.coordinate(grid.d), grid.shape).copy()


def _load(path: str, grid: Grid) -> np.ndarray:
    arr = np.load(path)
    if arr.shape != grid.shape:
        raise ValueError(f"tabulated array {path} has shape {arr.shape}, expected {grid.shape}")
    return np.asarray(arr, dtype=float)


def initial_density(grid: Grid, spec: StateSpec) -> np.ndarray:
    if spec.rho0 == "paper_example":
        return gaussian_density(grid, *PAPER_EXAMPLE)
    if spec.rho0 == "gaussian":
        return gaussian_density(grid, *spec.rho0_params)
    if spec.rho0 == "tabulated":
        rho = _load(spec.rho0_path, grid)
        if (rho < 0).any():
            raise ValueError("tabulated density has negative samples")
        return rho
    raise ValueError(f"unknown rho0 kind {spec.rho0!r}")


def initial_phase(grid: Grid, spec: StateSpec) -> np.ndarray:
    if spec.phase == "zero":
        return np.zeros(grid.shape)
    if spec.phase == "bilinear":
        return bilinear_phase(grid, spec.phase_a)
    if spec.phase == "tabulated":
        return _load(spec.phase_path, grid)
    raise ValueError(f"unknown phase kind {spec.phase!r}")


def psi_from(rho: np.ndarray, phase: np.ndarray) -> np.ndarray:
    return np.sqrt(rho) * np.exp(1j * phase)


def normalize(grid: Grid, psi: np.ndarray) -> tuple[np.ndarray, float]:
    """Return the normalized state and the factor applied to its density."""
    norm2 = integrate(grid, np.abs(psi) ** 2)
    if not norm2 > 0:
        raise ValueError("state has zero norm")
    return psi / np.sqrt(norm2), 1.0 / norm2


def build_state(grid: Grid, spec: StateSpec) -> tuple[np.ndarray, float]:
    """Normalized psi0 and the density normalization factor."""
    return normalize(grid, psi_from(initial_density(grid, spec), initial_phase(grid, spec)))
