import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgsignal.grid import build_grid
from dgsignal.hydro import DGCoefficients
from dgsignal.observables import (
    IllConditionedFit,
    TimeSeries,
    ehrenfest_rate,
    fit_taylor,
    marginal_rho1,
    moment_x1,
    second_rate,
)
from dgsignal.states import gaussian_density, normalize, psi_from

T = np.linspace(0.0, 0.2, 201)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_fit_recovers_polynomial(coeffs):
    y = np.polynomial.polynomial.polyval(T, coeffs)
    fit = fit_taylor(TimeSeries(T, y), 4, 0.2)
    scale = max(1.0, max(abs(c) for c in coeffs))
    assert np.allclose(fit.coefficients, coeffs, atol=1e-8 * scale)
    assert fit.uncertainty.max() < 1e-7 * scale


def test_derivative_scaling():
    y = 0.5 * T**4 / 24
    fit = fit_taylor(TimeSeries(T, y), 5, 0.1)
    assert fit.derivatives[4] == pytest.approx(0.5, rel=1e-8)
    assert fit.window == 0.1


def test_higher_order_content_raises_uncertainty():
    y = T**3 + 50 * T**7
    fit = fit_taylor(TimeSeries(T, y), 4, 0.2)
    assert fit.uncertainty[3] > 0.01


def test_ill_conditioned_fit():
    with pytest.raises(IllConditionedFit):
        fit_taylor(TimeSeries(np.linspace(0, 1, 400), np.zeros(400)), 30, 1.0)


def test_too_few_samples():
    with pytest.raises(ValueError):
        fit_taylor(TimeSeries(T[:10], T[:10]), 4, 0.2)


def test_timeseries_validation():
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.1, 0.2]), np.zeros(2))
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 0.2, 0.1]), np.zeros(3))
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 0.1]), np.array([0.0, np.nan]))
    with pytest.raises(ValueError):
        TimeSeries(T, T) - TimeSeries(T[:-1], T[:-1])


def test_csv_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    s = TimeSeries(T, rng.standard_normal(len(T)) * 1e-9)
    s.to_csv(tmp_path / "a.csv", ["test header"])
    back = TimeSeries.from_csv(tmp_path / "a.csv")
    assert np.array_equal(back.times, s.times) and np.array_equal(back.values, s.values)
    assert (tmp_path / "a.csv").read_text().startswith("# test header\nt,value\n")


@pytest.fixture(scope="module")
def grid():
    return build_grid(1, 128, 8.0)


def test_moment_and_marginal(grid):
    rho = gaussian_density(grid, 1.0, 1.0, 0.5, 0.3, -0.2)
    psi, _ = normalize(grid, psi_from(rho, np.zeros(grid.shape)))
    marg = marginal_rho1(grid, psi)
    assert marg.shape == (grid.n,)
    assert np.sum(marg) * grid.spacing == pytest.approx(1.0)
    assert moment_x1(grid, psi) == pytest.approx(0.3, abs=1e-12)


def test_ehrenfest_rate_of_boosted_state(grid):
    rho = gaussian_density(grid, 1.0, 1.0, 0.5)
    psi, _ = normalize(grid, psi_from(rho, 0.7 * grid.coordinate(0)))
    assert ehrenfest_rate(grid, psi) == pytest.approx(0.7, abs=1e-7)


def test_second_rate(grid):
    rho = gaussian_density(grid, 1.0, 1.0, 1.0)
    psi, _ = normalize(grid, psi_from(rho, grid.coordinate(0) * grid.coordinate(1)))
    assert second_rate(grid, psi, DGCoefficients()) == 0.0
    # gisin-free coefficients satisfy the second Ehrenfest relation
    assert abs(second_rate(grid, psi, DGCoefficients(0, 0.05, 0, 0, -0.025))) < 1e-9


@pytest.mark.parametrize("order", [3, 4, 5])
def test_fit_sine_taylor_coefficients(order):
    fit = fit_taylor(TimeSeries(T, np.sin(T)), order, 0.2)
    assert fit.coefficients[1] == pytest.approx(1.0, abs=1e-4)
    assert fit.coefficients[3] == pytest.approx(-1 / 6, abs=5e-3)
