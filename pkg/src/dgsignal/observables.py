"""Particle-1 observables and extraction of Taylor coefficients at t = 0."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, diff, integrate, marginalize_particle2
from .hydro import DGCoefficients, density, r_total

MAX_CONDITION = 1e12


class IllConditionedFit(ValueError):
    pass


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if len(t) and t[0] != 0.0:
            raise ValueError("time series must start at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.isfinite(v).all():
            raise ValueError("time series contains non-finite values")

    def __len__(self):
        return len(self.times)

    def __sub__(self, other: TimeSeries) -> TimeSeries:
        if not np.array_equal(self.times, other.times):
            raise ValueError("cannot subtract series sampled at different times")
        return TimeSeries(self.times, self.values - other.values)

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "value"])
            for t, v in zip(self.times, self.values):
                writer.writerow([f"{t:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path) -> TimeSeries:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
        data = np.array(rows[1:], dtype=float).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1])


def marginal_rho1(grid: Grid, psi: np.ndarray) -> np.ndarray:
    """Position density of particle 1 (particle 2 integrated out)."""
    return marginalize_particle2(grid, density(psi))


def moment_x1(grid: Grid, psi: np.ndarray) -> float:
    """<x_1^1> = integral of x_1^1 rho."""
    return integrate(grid, grid.coordinate(0) * density(psi), check=False)


def ehrenfest_rate(grid: Grid, psi: np.ndarray) -> float:
    """Im integral of conj(psi) d_1 psi, the rate of change of <x_1^1>."""
    return integrate(grid, np.imag(np.conj(psi) * diff(grid, psi, 0)), check=False)


def second_rate(grid: Grid, psi: np.ndarray, coeffs: DGCoefficients) -> float:
    """-integral of rho d_1 R[psi], the second time derivative of <x_1^1>."""
    if coeffs.is_linear:
        return 0.0
    return -integrate(grid, density(psi) * diff(grid, r_total(grid, psi, coeffs), 0), check=False)


@dataclass(frozen=True)
class TaylorFit:
    """Polynomial fit a_0 + a_1 t + ... of a series near t = 0.

    ``uncertainty[k]`` is for ``coefficients[k]``; derivative estimates are
    k! a_k with k! times the uncertainty.
    """

    coefficients: np.ndarray
    uncertainty: np.ndarray
    half_window_coefficients: np.ndarray
    condition: float
    window: float
    residual_rms: float

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def derivatives(self) -> np.ndarray:
        return self.coefficients * _factorials(self.order)

    @property
    def derivative_uncertainty(self) -> np.ndarray:
        return self.uncertainty * _factorials(self.order)


def _factorials(order: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(order + 1)], dtype=float)


def _lstsq(t: np.ndarray, y: np.ndarray, order: int, window: float):
    # fit in tau = t / window for conditioning, then rescale
    tau = t / window
    A = np.vander(tau, order + 1, increasing=True)
    cond = float(np.linalg.cond(A))
    if not cond <= MAX_CONDITION:
        raise IllConditionedFit(f"Vandermonde condition number {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    b, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ b
    dof = len(t) - (order + 1)
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.inv(A.T @ A)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    else:
        se = np.zeros(order + 1)
    scale = window ** -np.arange(order + 1, dtype=float)
    return b * scale, se * scale, cond, float(np.sqrt(np.mean(resid**2)))


def fit_taylor(series: TimeSeries, order: int, window: float) -> TaylorFit:
    """Least-squares Taylor coefficients of ``series`` on [0, window].

    The uncertainty combines the standard error of the fit with the
    discrepancy between fits over the full and the half window.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    t, y = series.times, series.values
    sel = t <= window * (1 + 1e-12)
    if sel.sum() < 3 * (order + 1):
        raise ValueError(f"need at least {3 * (order + 1)} samples in [0, {window}], have {int(sel.sum())}")
    coef, se, cond, rms = _lstsq(t[sel], y[sel], order, window)

    half = t <= 0.5 * window * (1 + 1e-12)
    if half.sum() >= order + 2:
        coef_half, _, _, _ = _lstsq(t[half], y[half], order, 0.5 * window)
    else:
        coef_half = coef
    spread = np.abs(coef - coef_half)
    return TaylorFit(coef, np.hypot(spread, se), coef_half, cond, window, rms)
