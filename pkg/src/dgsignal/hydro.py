"""Density, current and the Doebner-Goldin nonlinearity R[psi].

R[psi] = c1 R1 + c2 R2 + c3 R3 + c4 R4 + c5 R5 with

    R1 = div j / rho        R2 = lap rho / rho      R3 = j.j / rho^2
    R4 = j.grad rho / rho^2 R5 = grad rho . grad rho / rho^2

Every division by rho is regularized as division by rho + rho_floor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid, divergence, gradient, laplacian

CLASSIFY_TOL = 1e-12


class CoefficientClass(str, enum.Enum):
    LINEAR = "linear"
    GISIN_FREE = "gisin_free"
    WERNER_SATISFIED_SIGNALING = "werner_satisfied_signaling"
    WERNER_VIOLATING = "werner_violating"


@dataclass(frozen=True)
class DGCoefficients:
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    c5: float = 0.0
    rho_floor: float = 1e-30

    def __post_init__(self):
        if not self.rho_floor > 0:
            raise ValueError("rho_floor must be positive")

    @classmethod
    def from_sequence(cls, values, rho_floor: float = 1e-30) -> DGCoefficients:
        values = [float(v) for v in values]
        if len(values) != 5:
            raise ValueError(f"expected 5 coefficients, got {len(values)}")
        return cls(*values, rho_floor=rho_floor)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.c1, self.c2, self.c3, self.c4, self.c5)

    def scaled(self, s: float) -> DGCoefficients:
        return replace(self, **{f"c{i + 1}": s * c for i, c in enumerate(self.as_tuple())})

    def only(self, index: int) -> DGCoefficients:
        """Copy keeping just coefficient ``index`` (1..5)."""
        values = [0.0] * 5
        values[index - 1] = self.as_tuple()[index - 1]
        return DGCoefficients(*values, rho_floor=self.rho_floor)

    @property
    def is_linear(self) -> bool:
        return all(abs(c) <= CLASSIFY_TOL for c in self.as_tuple())

    @property
    def werner_satisfied(self) -> bool:
        return abs(self.c3) <= CLASSIFY_TOL and abs(self.c1 + self.c4) <= CLASSIFY_TOL

    @property
    def gisin_free(self) -> bool:
        return (
            abs(self.c1) <= CLASSIFY_TOL
            and abs(self.c3) <= CLASSIFY_TOL
            and abs(self.c4) <= CLASSIFY_TOL
            and abs(self.c2 + 2 * self.c5) <= CLASSIFY_TOL
        )


def classify(coeffs: DGCoefficients) -> CoefficientClass:
    if coeffs.is_linear:
        return CoefficientClass.LINEAR
    if coeffs.gisin_free:
        return CoefficientClass.GISIN_FREE
    if coeffs.werner_satisfied:
        return CoefficientClass.WERNER_SATISFIED_SIGNALING
    return CoefficientClass.WERNER_VIOLATING


def density(psi: np.ndarray) -> np.ndarray:
    return psi.real**2 + psi.imag**2


def current(grid: Grid, psi: np.ndarray) -> np.ndarray:
    """j = Im(conj(psi) grad psi), stacked by axis."""
    return np.stack([np.imag(np.conj(psi) * g) for g in gradient(grid, psi)])


def grad_phase(grid: Grid, psi: np.ndarray, coeffs: DGCoefficients) -> np.ndarray:
    # j / rho avoids unwrapping arg(psi)
    return current(grid, psi) / (density(psi) + coeffs.rho_floor)


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("i...,i...->...", a, b)


def r_term(grid: Grid, psi: np.ndarray, index: int, coeffs: DGCoefficients) -> np.ndarray:
    """The single functional R_index[psi] (unweighted by its coefficient)."""
    if index not in (1, 2, 3, 4, 5):
        raise ValueError(f"R-term index must be 1..5, got {index}")
    rho = density(psi)
    inv = 1.0 / (rho + coeffs.rho_floor)
    if index == 2:
        return laplacian(grid, rho) * inv
    if index == 5:
        g = gradient(grid, rho)
        return _dot(g, g) * inv**2
    j = current(grid, psi)
    if index == 1:
        return divergence(grid, j) * inv
    if index == 3:
        return _dot(j, j) * inv**2
    return _dot(j, gradient(grid, rho)) * inv**2


def r_total(grid: Grid, psi: np.ndarray, coeffs: DGCoefficients) -> np.ndarray:
    """R[psi] = sum_v c_v R_v[psi]; terms with zero coefficient are skipped."""
    c1, c2, c3, c4, c5 = coeffs.as_tuple()
    out = np.zeros(grid.shape)
    if coeffs.is_linear:
        return out
    rho = density(psi)
    inv = 1.0 / (rho + coeffs.rho_floor)
    j = current(grid, psi) if (c1 or c3 or c4) else None
    grad_rho = gradient(grid, rho) if (c4 or c5) else None
    if c1:
        out += c1 * divergence(grid, j) * inv
    if c2:
        out += c2 * laplacian(grid, rho) * inv
    inv2 = inv * inv
    if c3:
        out += c3 * _dot(j, j) * inv2
    if c4:
        out += c4 * _dot(j, grad_rho) * inv2
    if c5:
        out += c5 * _dot(grad_rho, grad_rho) * inv2
    return out


def gauge_transform(psi: np.ndarray, lam: float, floor: float = 1e-30) -> np.ndarray:
    """psi -> exp(i lam ln|psi|) psi; the factor is 1 where |psi| <= floor."""
    modulus = np.abs(psi)
    safe = modulus > floor
    phase = np.zeros(psi.shape)
    phase[safe] = lam * np.log(modulus[safe])
    return np.exp(1j * phase) * psi
