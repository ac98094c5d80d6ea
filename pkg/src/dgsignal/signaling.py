"""Twin-run protocol: evolve one initial state with and without the particle-2 potential.

The difference of the particle-1 observables isolates the V-dependent signal;
its leading Taylor order at t = 0 is compared against the t = 0 oracle.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .evolution import IntegratorConfig, PotentialSpec, SolverError, evolve
from .grid import Grid, build_grid
from .hydro import CoefficientClass, DGCoefficients, classify
from .observables import TaylorFit, TimeSeries, fit_taylor, marginal_rho1, moment_x1
from .oracle import EssPrediction, predict
from .states import StateSpec, build_state

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitConfig:
    max_order: int = 4
    window: float = 0.1
    significance: float = 5.0
    # smallest signal (in moment units over the window) treated as real
    noise_floor: float = 1e-10
    guard_terms: int = 5


@dataclass(frozen=True)
class Scenario:
    grid: Grid = field(default_factory=lambda: build_grid(1, 256, 8.0))
    state: StateSpec = field(default_factory=StateSpec)
    potential: PotentialSpec = field(default_factory=lambda: PotentialSpec("polynomial_in_x2", (0.0, 0.0, 0.0, 1.0)))
    coeffs: DGCoefficients = field(default_factory=DGCoefficients)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    fit: FitConfig = field(default_factory=FitConfig)

    def with_coeffs(self, coeffs: DGCoefficients) -> Scenario:
        return replace(self, coeffs=coeffs)


@dataclass
class Detection:
    order: int | None
    coefficient: float | None
    uncertainty: float | None
    fit: TaylorFit


def detect_order(delta: TimeSeries, max_order: int = 4, window: float = 0.1, significance: float = 5.0,
                 noise_floor: float = 1e-10, guard_terms: int = 5) -> Detection:
    """Smallest k <= max_order whose derivative estimate k! a_k is significant.

    One fit of degree ``max_order + guard_terms`` is scanned upward from k = 1.
    The uncertainty of k! a_k is floored at k! noise_floor / window^k, so
    a deterministic residue smaller than ``noise_floor`` over the window
    never counts as a signal.
    """
    if len(delta) == 0 or delta.values[0] != 0.0:
        raise ValueError("difference series must start at value 0 at t = 0")
    fit = fit_taylor(delta, max_order + guard_terms, window)
    derivs = fit.derivatives
    sigmas = fit.derivative_uncertainty
    for k in range(1, max_order + 1):
        floor = math.factorial(k) * noise_floor / window**k
        sigma = max(float(sigmas[k]), floor)
        if abs(derivs[k]) > significance * sigma:
            return Detection(k, float(derivs[k]), sigma, fit)
    return Detection(None, None, None, fit)


@dataclass
class SignalReport:
    classification: CoefficientClass
    coeffs: DGCoefficients
    delta_moment: TimeSeries
    delta_marginal_l1: TimeSeries
    detected_order: int | None
    fitted_coefficient: float | None
    uncertainty: float | None
    oracle: EssPrediction | None
    agreement_ratio: float | None
    fit: TaylorFit
    potential_moment: TimeSeries
    potential_moment_fit: TaylorFit
    x1: np.ndarray
    marginal_baseline: np.ndarray
    marginal_potential: np.ndarray
    marginal_difference: np.ndarray  # records x particle-1 grid
    normalization_factor: float

    @property
    def oracle_prediction(self) -> float | None:
        return None if self.oracle is None else self.oracle.value

    @property
    def potential_moment_quadratic(self) -> float:
        """Fitted t^2 coefficient of <x_1^1> in the run with the potential."""
        return float(self.potential_moment_fit.coefficients[2])

    def fitted_at(self, order: int) -> tuple[float, float]:
        return float(self.fit.derivatives[order]), float(self.fit.derivative_uncertainty[order])

    def summary(self) -> dict:
        return {
            "class": self.classification.value,
            "coefficients": list(self.coeffs.as_tuple()),
            "detected_order": self.detected_order,
            "fitted": self.fitted_coefficient,
            "uncertainty": self.uncertainty,
            "oracle": self.oracle_prediction,
            "agreement_ratio": self.agreement_ratio,
        }

    def to_dict(self) -> dict:
        out = self.summary()
        out.update(
            {
                "oracle_report": None if self.oracle is None else self.oracle.to_dict(),
                "normalization_factor": self.normalization_factor,
                "max_abs_delta_moment": float(np.abs(self.delta_moment.values).max()),
                "potential_moment_quadratic": self.potential_moment_quadratic,
                "fit": {
                    "window": self.fit.window,
                    "derivatives": self.fit.derivatives.tolist(),
                    "derivative_uncertainty": self.fit.derivative_uncertainty.tolist(),
                    "condition": self.fit.condition,
                },
                "delta_moment": {"t": self.delta_moment.times.tolist(), "value": self.delta_moment.values.tolist()},
                "delta_marginal_l1": {
                    "t": self.delta_marginal_l1.times.tolist(),
                    "value": self.delta_marginal_l1.values.tolist(),
                },
            }
        )
        return out


def _evolve_one(grid, psi0, potential, coeffs, integrator):
    observers = {
        "moment": lambda p: moment_x1(grid, p),
        "marginal": lambda p: marginal_rho1(grid, p),
    }
    traj = evolve(grid, psi0, potential, coeffs, integrator, observers)
    return np.asarray(traj.times), traj.values("moment"), traj.values("marginal")


def run_leg(scenario: Scenario, which: str):
    """Evolve one leg ("baseline": V = 0, or "potential"); returns (times, moments, marginals)."""
    psi0, _ = build_state(scenario.grid, scenario.state)
    potential = scenario.potential if which == "potential" else PotentialSpec("zero")
    try:
        return _evolve_one(scenario.grid, psi0, potential, scenario.coeffs, scenario.integrator)
    except SolverError as exc:
        raise SolverError(f"{which} run: {exc}", exc.step, exc.time) from None


def twin_run(scenario: Scenario, workers: int = 1, baseline=None) -> SignalReport:
    """Run the baseline (V = 0) and potential legs and assemble the signal report.

    ``baseline`` may carry a precomputed (times, moments, marginals) triple
    for the V = 0 leg of the same state and coefficients.
    """
    grid = scenario.grid
    psi0, norm_factor = build_state(grid, scenario.state)
    if baseline is None and workers > 1:
        with ProcessPoolExecutor(max_workers=2) as pool:
            futures = [pool.submit(run_leg, scenario, w) for w in ("baseline", "potential")]
            baseline, loaded = (f.result() for f in futures)
    else:
        if baseline is None:
            baseline = run_leg(scenario, "baseline")
        loaded = run_leg(scenario, "potential")
    times, m0, marg0 = baseline
    times_v, m1, marg1 = loaded
    if not np.array_equal(times, times_v):
        raise ValueError("baseline and potential legs were recorded at different times")

    delta = TimeSeries(times, m1 - m0)
    diff_marg = marg1 - marg0
    cell = grid.spacing**grid.d
    l1 = TimeSeries(times, np.abs(diff_marg).reshape(len(times), -1).sum(axis=1) * cell)

    fc = scenario.fit
    det = detect_order(delta, fc.max_order, fc.window, fc.significance, fc.noise_floor, fc.guard_terms)
    v_moment = TimeSeries(times, m1)
    v_fit = fit_taylor(v_moment, fc.max_order + fc.guard_terms, fc.window)

    cls = classify(scenario.coeffs)
    V = scenario.potential.field(grid)
    oracle = predict(grid, psi0, V, scenario.coeffs)
    ratio = None
    if oracle is not None:
        oracle.normalization_factor = norm_factor
        if oracle.value != 0.0:
            ratio = float(det.fit.derivatives[oracle.order]) / oracle.value

    return SignalReport(
        classification=cls,
        coeffs=scenario.coeffs,
        delta_moment=delta,
        delta_marginal_l1=l1,
        detected_order=det.order,
        fitted_coefficient=det.coefficient,
        uncertainty=det.uncertainty,
        oracle=oracle,
        agreement_ratio=ratio,
        fit=det.fit,
        potential_moment=v_moment,
        potential_moment_fit=v_fit,
        x1=grid.axis_coordinates.copy(),
        marginal_baseline=marg0[-1],
        marginal_potential=marg1[-1],
        marginal_difference=diff_marg.reshape(len(times), -1),
        normalization_factor=norm_factor,
    )


EXPECTED_PARTITION = {
    CoefficientClass.LINEAR: "none",
    CoefficientClass.GISIN_FREE: "none",
    CoefficientClass.WERNER_SATISFIED_SIGNALING: "4",
    CoefficientClass.WERNER_VIOLATING: "<=3",
}


def partition_holds(cls: CoefficientClass, order: int | None) -> bool:
    if cls in (CoefficientClass.LINEAR, CoefficientClass.GISIN_FREE):
        return order is None
    if cls == CoefficientClass.WERNER_SATISFIED_SIGNALING:
        return order == 4
    return order is not None and order <= 3


@dataclass
class SweepRow:
    coeffs: DGCoefficients
    classification: CoefficientClass
    report: SignalReport | None = None
    error: str | None = None

    @property
    def detected_order(self):
        return None if self.report is None else self.report.detected_order

    @property
    def consistent(self) -> bool:
        return self.report is not None and partition_holds(self.classification, self.detected_order)


def _sweep_point(base: Scenario, coeffs: DGCoefficients) -> SweepRow:
    cls = classify(coeffs)
    try:
        return SweepRow(coeffs, cls, report=twin_run(base.with_coeffs(coeffs)))
    except (SolverError, ValueError, RuntimeError) as exc:
        log.warning("sweep point %s failed: %s", coeffs.as_tuple(), exc)
        return SweepRow(coeffs, cls, error=str(exc))


def sweep(base: Scenario, coefficient_list, workers: int = 1) -> list[SweepRow]:
    """One twin run per coefficient point; failures are recorded, not raised."""
    points = [c if isinstance(c, DGCoefficients) else DGCoefficients.from_sequence(c, base.coeffs.rho_floor)
              for c in coefficient_list]
    if not points:
        raise ValueError("coefficient list is empty")
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, [base] * len(points), points))
    return [_sweep_point(base, c) for c in points]
