"""Closed-form V-dependent parts ("ess") of the time derivatives of <x_1^1> at t = 0.

Everything here uses only the initial data psi0 and the potential V; nothing
is time-stepped. Order 3 goes through a numerical Gateaux derivative of R
along the instantaneous potential kick d psi = -i V psi0; order 4 (under the
Werner condition c3 = 0, c1 + c4 = 0) through the two commutator formulas.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import Grid, diff, divergence, gradient, integrate, laplacian
from .hydro import CLASSIFY_TOL, CoefficientClass, DGCoefficients, classify, density, grad_phase, r_total

BLOCKS = ("c1_block", "c2_block", "c3", "c4", "c5_block")
RICHARDSON_TOL = 1e-7
ALGEBRA_RTOL = 1e-6
# absolute slack for forms that vanish analytically (ess_4 is O(1) for O(1) potentials)
ALGEBRA_ATOL = 1e-12


class OracleError(RuntimeError):
    pass


class AlgebraRegressionError(OracleError):
    """The simplified and the unsimplified forms of an ess_4 formula disagree."""


class OutOfScopeError(OracleError):
    pass


@dataclass
class EssPrediction:
    order: int
    value: float
    decomposition: dict
    method: str
    grid: dict = field(default_factory=dict)
    normalization_factor: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


def _grid_info(grid: Grid) -> dict:
    return {"d": grid.d, "n": grid.n, "L": grid.L}


def check_particle2_only(grid: Grid, V: np.ndarray, rtol: float = 1e-12) -> None:
    """Reject potentials that vary along a particle-1 axis."""
    grid.check_field(V)
    scale = max(1.0, float(np.abs(V).max()))
    for axis in grid.particle_axes(1):
        if np.abs(np.diff(V, axis=axis)).max() > rtol * scale:
            raise ValueError("potential depends on particle-1 coordinates")


def ess_div_j_dot(grid: Grid, rho0: np.ndarray, V: np.ndarray) -> np.ndarray:
    """V-dependent part of d/dt div j at t = 0: -div(rho0 grad V)."""
    check_particle2_only(grid, V)
    return -divergence(grid, rho0 * gradient(grid, V))


def _bulk_weight(rho0: np.ndarray) -> np.ndarray:
    return rho0 / rho0.max()


def ess_dt_r(grid: Grid, psi0: np.ndarray, V: np.ndarray, coeffs: DGCoefficients,
             eps0: float | None = None, max_halvings: int = 12) -> np.ndarray:
    """V-dependent part of dR/dt at t = 0.

    Central difference of R along the phase kick psi0 exp(-i eps V),
    halving eps until successive Richardson-extrapolated estimates agree
    (density-weighted) to RICHARDSON_TOL.
    """
    check_particle2_only(grid, V)
    if coeffs.is_linear or not np.any(V - V.flat[0]):
        return np.zeros(grid.shape)
    weight = _bulk_weight(density(psi0))
    if eps0 is None:
        v_bulk = float(np.abs(V[weight > 1e-12]).max())
        # one radian of kick over the bulk: truncation is negligible there, round-off grows as 1/eps
        eps0 = 1.0 / max(1.0, v_bulk)

    def central(eps):
        plus = r_total(grid, psi0 * np.exp(-1j * eps * V), coeffs)
        minus = r_total(grid, psi0 * np.exp(1j * eps * V), coeffs)
        return (plus - minus) / (2 * eps)

    eps = eps0
    d_prev = central(eps)
    best_prev = None
    for _ in range(max_halvings):
        eps *= 0.5
        d_next = central(eps)
        best = (4 * d_next - d_prev) / 3
        if best_prev is not None:
            scale = max(1.0, float(np.abs(best * weight).max()))
            if float(np.abs((best - best_prev) * weight).max()) <= RICHARDSON_TOL * scale:
                return best
        best_prev, d_prev = best, d_next
    raise OracleError("Richardson step halving for the Gateaux derivative did not converge")


def ess3_moment(grid: Grid, psi0: np.ndarray, V: np.ndarray, coeffs: DGCoefficients) -> EssPrediction:
    """V-dependent part of (d/dt)^3 <x_1^1> at t = 0: -int rho0 d_1 ess(dR/dt)."""
    rho0 = density(psi0)
    parts = {}
    for index, key in enumerate(BLOCKS, start=1):
        single = coeffs.only(index)
        if single.is_linear:
            parts[key] = 0.0
            continue
        dr = ess_dt_r(grid, psi0, V, single)
        parts[key] = -integrate(grid, rho0 * diff(grid, dr, 0), check=False)
    return EssPrediction(3, float(sum(parts.values())), parts, "gateaux", _grid_info(grid))


def commutator_laplacian(grid: Grid, f: np.ndarray, u: np.ndarray) -> np.ndarray:
    """[lap, f] u = lap(f u) - f lap(u)."""
    return laplacian(grid, f * u) - f * laplacian(grid, u)


def ess4_case1_forms(grid: Grid, psi0: np.ndarray, V: np.ndarray, floor: float = 1e-30) -> tuple[float, float]:
    """(commutator form, two-integral form) of ess_4 for R = Delta arg(psi), c1 = 1."""
    check_particle2_only(grid, V)
    if not np.ptp(V):
        return 0.0, 0.0
    rho0 = density(psi0)
    grad_s = grad_phase(grid, psi0, DGCoefficients(rho_floor=floor))
    grad_v = gradient(grid, V)
    u = np.stack([diff(grid, g, 0) for g in grad_s])  # grad d_1 arg psi0

    integrand = sum(commutator_laplacian(grid, grad_v[i], u[i]) for i in range(grid.naxes))
    simplified = -integrate(grid, rho0 * integrand, check=False)

    div_rho_grad_v = divergence(grid, rho0 * grad_v)
    first = -integrate(grid, div_rho_grad_v * laplacian(grid, grad_s[0]), check=False)
    v_dot_s = np.einsum("i...,i...->...", grad_v, grad_s)
    second = -integrate(grid, rho0 * diff(grid, laplacian(grid, v_dot_s), 0), check=False)
    return simplified, first + second


def ess4_case2_forms(grid: Grid, rho0: np.ndarray, V: np.ndarray, floor: float = 1e-30) -> tuple[float, float]:
    """(commutator form, two-integral form) of ess_4 for R = lap(rho)/rho, c2 = 1."""
    check_particle2_only(grid, V)
    if not np.ptp(V):
        return 0.0, 0.0
    inv = 1.0 / (rho0 + floor)
    D = divergence(grid, rho0 * gradient(grid, V))
    d1rho = diff(grid, rho0, 0)

    comm = laplacian(grid, d1rho * inv) - laplacian(grid, d1rho) * inv
    simplified = integrate(grid, comm * D, check=False)

    lap_rho = laplacian(grid, rho0)
    first = -integrate(grid, D * diff(grid, lap_rho * inv, 0), check=False)
    bracket = lap_rho * inv * inv * D - laplacian(grid, D) * inv
    second = integrate(grid, rho0 * diff(grid, bracket, 0), check=False)
    return simplified, first + second


def forms_agree(simplified: float, unsimplified: float, rtol: float = ALGEBRA_RTOL) -> bool:
    return abs(simplified - unsimplified) <= rtol * max(abs(simplified), abs(unsimplified)) + ALGEBRA_ATOL


def _check_forms(name: str, simplified: float, unsimplified: float, rtol: float) -> None:
    if not forms_agree(simplified, unsimplified, rtol):
        raise AlgebraRegressionError(
            f"{name}: commutator form {simplified!r} disagrees with two-integral form {unsimplified!r}"
        )


def ess4_case1(grid: Grid, psi0: np.ndarray, V: np.ndarray, rtol: float = ALGEBRA_RTOL) -> float:
    simplified, unsimplified = ess4_case1_forms(grid, psi0, V)
    _check_forms("ess4_case1", simplified, unsimplified, rtol)
    return simplified


def ess4_case2(grid: Grid, rho0: np.ndarray, V: np.ndarray, rtol: float = ALGEBRA_RTOL) -> float:
    simplified, unsimplified = ess4_case2_forms(grid, rho0, V)
    _check_forms("ess4_case2", simplified, unsimplified, rtol)
    return simplified


def ess4_werner(grid: Grid, psi0: np.ndarray, V: np.ndarray, coeffs: DGCoefficients,
                rtol: float = ALGEBRA_RTOL) -> EssPrediction:
    """ess_4 = c1 ess4_case1 + (c2 + 2 c5) ess4_case2 for Werner-satisfying coefficients."""
    cls = classify(coeffs)
    if cls == CoefficientClass.WERNER_VIOLATING:
        raise OutOfScopeError(
            "fourth-order prediction needs c3 = 0 and c1 + c4 = 0; use the third-order prediction"
        )
    w1 = coeffs.c1 if abs(coeffs.c1) > CLASSIFY_TOL else 0.0
    w2 = coeffs.c2 + 2 * coeffs.c5
    w2 = w2 if abs(w2) > CLASSIFY_TOL else 0.0
    parts = dict.fromkeys(BLOCKS, 0.0)
    if w1:
        parts["c1_block"] = w1 * ess4_case1(grid, psi0, V, rtol)
    if w2:
        parts["c2_block"] = w2 * ess4_case2(grid, density(psi0), V, rtol)
    return EssPrediction(4, float(sum(parts.values())), parts, "closed_form", _grid_info(grid))


def predict(grid: Grid, psi0: np.ndarray, V: np.ndarray, coeffs: DGCoefficients) -> EssPrediction | None:
    """Leading-order oracle for ``coeffs``: none for linear, ess_3 if Werner fails, else ess_4."""
    cls = classify(coeffs)
    if cls == CoefficientClass.LINEAR:
        return None
    if cls == CoefficientClass.WERNER_VIOLATING:
        return ess3_moment(grid, psi0, V, coeffs)
    return ess4_werner(grid, psi0, V, coeffs)
