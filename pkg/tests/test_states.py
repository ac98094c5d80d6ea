import numpy as np
import pytest

from dgsignal.grid import build_grid, integrate
from dgsignal.hydro import density
from dgsignal.states import StateSpec, build_state, gaussian_density, initial_density, initial_phase


@pytest.fixture(scope="module")
def grid():
    return build_grid(1, 128, 8.0)


def test_reference_state_normalization(grid):
    psi, factor = build_state(grid, StateSpec())
    assert integrate(grid, density(psi)) == pytest.approx(1.0, abs=1e-13)
    # integral of exp(-x^2 - y^2 - x y) over the plane is 2 pi / sqrt(3)
    assert 1.0 / factor == pytest.approx(2 * np.pi / np.sqrt(3), rel=1e-12)


def test_reference_state_phase(grid):
    psi, _ = build_state(grid, StateSpec())
    x, y = grid.coordinate(0), grid.coordinate(1)
    mask = np.abs(psi) > 1e-8
    assert np.allclose(np.angle(psi)[mask], np.angle(np.exp(1j * x * y) * np.ones(grid.shape))[mask])


def test_gaussian_params(grid):
    spec = StateSpec(rho0="gaussian", rho0_params=(2.0, 1.0, 0.0, 0.5, 0.0), phase="zero")
    psi, _ = build_state(grid, spec)
    rho = density(psi)
    assert integrate(grid, grid.coordinate(0) * rho) == pytest.approx(0.5, abs=1e-12)
    assert not np.angle(psi).any()


def test_rejects_indefinite_gaussian(grid):
    with pytest.raises(ValueError):
        gaussian_density(grid, 1.0, 1.0, 2.5)


def test_tabulated_roundtrip(grid, tmp_path):
    rho = gaussian_density(grid, 1.0, 2.0, 0.3)
    phase = 0.3 * grid.coordinate(1) ** 2 * np.ones(grid.shape)
    np.save(tmp_path / "rho.npy", rho)
    np.save(tmp_path / "phase.npy", phase)
    spec = StateSpec(rho0="tabulated", rho0_path=str(tmp_path / "rho.npy"),
                     phase="tabulated", phase_path=str(tmp_path / "phase.npy"))
    assert np.array_equal(initial_density(grid, spec), rho)
    assert np.array_equal(initial_phase(grid, spec), phase)


def test_tabulated_shape_mismatch(grid, tmp_path):
    np.save(tmp_path / "rho.npy", np.ones((4, 4)))
    with pytest.raises(ValueError):
        initial_density(grid, StateSpec(rho0="tabulated", rho0_path=str(tmp_path / "rho.npy")))


def test_zero_state_rejected(grid, tmp_path):
    np.save(tmp_path / "rho.npy", np.zeros(grid.shape))
    with pytest.raises(ValueError):
        build_state(grid, StateSpec(rho0="tabulated", rho0_path=str(tmp_path / "rho.npy")))


def test_higher_dimensional_state():
    g = build_grid(2, 24, 8.0)
    psi, _ = build_state(g, StateSpec())
    assert psi.shape == (24,) * 4
    assert integrate(g, density(psi), check=False) == pytest.approx(1.0)
