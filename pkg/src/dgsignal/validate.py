"""Fast invariant suite: conservation laws, Ehrenfest relations, locality, oracle algebra."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import oracle
from .oracle import ALGEBRA_RTOL
from .evolution import PotentialSpec, SolverError, check_stability, step
from .grid import Grid, build_grid, divergence, gradient, integrate, laplacian
from .hydro import DGCoefficients, current, density, r_total
from .observables import ehrenfest_rate, moment_x1, second_rate
from .states import StateSpec, build_state, gaussian_density, normalize, psi_from


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


def _check(name, value, threshold, detail=""):
    return Check(name, float(value), float(threshold), bool(value < threshold), detail)


def _signed(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi))


def random_smooth_pair(grid: Grid, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A random correlated-Gaussian psi0 with quadratic phase, and a random windowed cubic V(x2).

    The x1 x2 phase term and the cubic term of V are kept away from zero so
    that both ess_4 values are O(1) and a relative comparison is meaningful.
    """
    a11, a22 = rng.uniform(0.8, 1.4, size=2)
    a12 = rng.uniform(-0.8, 0.8) * np.sqrt(a11 * a22)
    m1, m2 = rng.uniform(-0.3, 0.3, size=2)
    rho = gaussian_density(grid, a11, a22, a12, m1, m2)
    x, y = grid.coordinate(0), grid.coordinate(grid.d)
    b1, b2 = rng.uniform(-0.5, 0.5, size=2)
    phase = _signed(rng, 0.3, 1.0) * x * y + b1 * x**2 + b2 * y**2
    psi, _ = normalize(grid, psi_from(rho, np.broadcast_to(phase, grid.shape)))
    params = (0.0, *rng.uniform(-1.0, 1.0, size=2), _signed(rng, 0.5, 1.0))
    V = PotentialSpec("polynomial_in_x2", params).field(grid)
    return psi, V


def random_werner_coeffs(rng: np.random.Generator) -> DGCoefficients:
    c1, c2, c5 = rng.uniform(-0.1, 0.1, size=3)
    return DGCoefficients(c1, c2, 0.0, -c1, c5)


def _interior(grid: Grid, width: int) -> tuple[slice, ...]:
    return (slice(width, grid.n - width),) * grid.naxes


def dynamics_checks(grid: Grid, psi0: np.ndarray, V: np.ndarray, coeffs: DGCoefficients,
                    dt: float, nsteps: int) -> list[Check]:
    check_stability(grid, psi0, V, coeffs, dt, "rk4_full")
    k = nsteps // 2
    psi = psi0
    moments, norms, saved = [], [], {}
    for i in range(nsteps + 1):
        if i:
            psi = step(grid, psi, V, coeffs, dt)
        moments.append(moment_x1(grid, psi))
        norms.append(integrate(grid, density(psi), check=False))
        if k - 1 <= i <= k + 1:
            saved[i] = psi

    checks = [_check("norm conservation", np.abs(np.asarray(norms) - 1.0).max(), 1e-5)]

    rho_dot = (density(saved[k + 1]) - density(saved[k - 1])) / (2 * dt)
    residual = rho_dot + divergence(grid, current(grid, saved[k]))
    inner = _interior(grid, 2 * grid.stencil_halfwidth)
    checks.append(_check("continuity residual", np.abs(residual[inner]).max(), 1e-4))

    m = moments
    rate_fd = (m[k + 1] - m[k - 1]) / (2 * dt)
    checks.append(_check("Ehrenfest 1", abs(rate_fd - ehrenfest_rate(grid, saved[k])), 1e-5))
    accel_fd = (m[k + 1] - 2 * m[k] + m[k - 1]) / dt**2
    checks.append(_check("Ehrenfest 2", abs(accel_fd - second_rate(grid, saved[k], coeffs)), 1e-4))
    return checks


def locality_check(grid: Grid, psi: np.ndarray, coeffs: DGCoefficients, rng: np.random.Generator) -> Check:
    """R[psi] and R[phi] agree where psi = phi, away from the edge of the region by the stencil reach."""
    box = tuple(slice(grid.n // 4, 3 * grid.n // 4) for _ in range(grid.naxes))
    phi = psi * (1.0 + 0.5 * rng.standard_normal(grid.shape)) + 1e-3 * rng.standard_normal(grid.shape)
    phi[box] = psi[box]
    reach = 2 * grid.stencil_halfwidth
    inner = tuple(slice(s.start + reach, s.stop - reach) for s in box)
    a, b = r_total(grid, psi, coeffs)[inner], r_total(grid, phi, coeffs)[inner]
    scale = max(1.0, float(np.abs(a).max()))
    return _check("locality of R", float(np.abs(a - b).max()) / scale, 1e-12)


def ess3_werner_check(grid: Grid, rng: np.random.Generator, points: int = 10) -> Check:
    worst = 0.0
    for _ in range(points):
        psi0, V = random_smooth_pair(grid, rng)
        coeffs = random_werner_coeffs(rng)
        # size of a generic third-order signal for these coefficients and this V
        dv = np.abs(gradient(grid, V)).sum(axis=0) + np.abs(laplacian(grid, V))
        scale = sum(abs(c) for c in coeffs.as_tuple()) * integrate(grid, density(psi0) * dv, check=False)
        value = oracle.ess3_moment(grid, psi0, V, coeffs).value
        worst = max(worst, abs(value) / scale)
    return _check("ess3 = 0 under Werner condition", worst, 1e-7, f"{points} random points")


def algebra_check(grid: Grid, rng: np.random.Generator, points: int = 9) -> Check:
    """Both ess_4 formulas on the reference pair plus ``points`` random pairs."""
    worst = 0.0
    pairs = [(build_state(grid, StateSpec())[0], PotentialSpec("polynomial_in_x2", (0, 0, 0, 1)).field(grid))]
    pairs += [random_smooth_pair(grid, rng) for _ in range(points)]
    for psi0, V in pairs:
        for simplified, unsimplified in (
            oracle.ess4_case1_forms(grid, psi0, V),
            oracle.ess4_case2_forms(grid, density(psi0), V),
        ):
            rel = abs(simplified - unsimplified) / max(abs(simplified), abs(unsimplified))
            worst = max(worst, rel)
    return _check("ess4 commutator vs two-integral forms", worst, ALGEBRA_RTOL, f"{len(pairs)} (psi0, V) pairs")


def run_validation(n: int = 128, L: float = 8.0, dt: float = 1e-4, nsteps: int = 200, seed: int = 0,
                   identity_fd_order: int = 12) -> list[Check]:
    """Run every invariant check; solver failures become failed checks.

    Dynamics and locality use the default stencil. The two static identity
    checks (ess_4 forms, Werner cancellation of ess_3) use a higher-order
    stencil on the same grid: with order 8 at h = L/64 the discrete product
    rule alone leaves residues of a few 1e-7 relative, above their bounds.
    """
    rng = np.random.default_rng(seed)
    grid = build_grid(1, n, L)
    psi0, _ = build_state(grid, StateSpec())
    V = PotentialSpec("polynomial_in_x2", (0, 0, 0, 1)).field(grid)
    coeffs = DGCoefficients(0.03, 0.05, 0.02, -0.01, 0.02)

    checks = []
    t0 = time.perf_counter()
    try:
        checks += dynamics_checks(grid, psi0, V, coeffs, dt, nsteps)
    except SolverError as exc:
        checks.append(Check("time integration", float("nan"), float("nan"), False, str(exc)))
    checks.append(locality_check(grid, psi0, coeffs, rng))

    fine = build_grid(1, n, L, fd_order=identity_fd_order)
    checks.append(ess3_werner_check(fine, rng))
    try:
        checks.append(algebra_check(fine, rng))
    except oracle.OracleError as exc:
        checks.append(Check("ess4 commutator vs two-integral forms", float("nan"), ALGEBRA_RTOL, False, str(exc)))
    elapsed = time.perf_counter() - t0
    checks.append(Check("runtime [s]", elapsed, 60.0, elapsed < 60.0))
    return checks
