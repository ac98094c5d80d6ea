"""Time integration of the two-particle Doebner-Goldin equation.

    i d/dt psi = (-1/2 lap + V(x2)) psi + R[psi] psi      (hbar = m = 1)

The particle-2 potential is switched on at t = 0 and held constant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .grid import Grid, integrate, laplacian
from .hydro import DGCoefficients, density, r_total

log = logging.getLogger(__name__)

POTENTIAL_KINDS = ("zero", "polynomial_in_x2", "harmonic", "tabulated")
SCHEMES = ("rk4_full", "strang_split")
# |dt * lambda| bound on the imaginary axis for classical RK4 (2*sqrt(2)), with margin
RK4_BOUND = 2.8
NORM_TOL = 1e-10
# |R| is clipped to this in the dynamics; only reached where rho is far below resolution
R_CAP = 1e3


class SolverError(RuntimeError):
    """Time integration broke down (non-finite values or stability failure)."""

    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step = step
        self.time = time


class StabilityError(SolverError):
    pass


def smooth_clamp(x: np.ndarray, radius: float, width: float) -> np.ndarray:
    """Identity for |x| <= radius, constant beyond radius + width, C^3 in between.

    The slope drops from 1 to 0 along a quintic smoothstep.
    """
    ax = np.abs(x)
    u = np.clip((ax - radius) / width, 0.0, 1.0)
    # integral of (1 - smoothstep) from 0 to u
    tail = width * (u - (u**6 - 3 * u**5 + 2.5 * u**4))
    return np.where(ax <= radius, x, np.sign(x) * (radius + tail))


@dataclass(frozen=True)
class PotentialSpec:
    """A particle-2 potential.

    ``polynomial_in_x2``: params are coefficients p_k of sum p_k (x_2^1)^k.
    ``harmonic``: params = (omega,), V = omega^2 |x2|^2 / 2.
    ``tabulated``: ``table`` holds samples over the particle-2 axes.
    A ``smooth_cutoff`` window clamps each particle-2 coordinate before
    evaluation, so V is constant near the boundary.
    """

    kind: str = "zero"
    params: tuple = ()
    window: str = "smooth_cutoff"
    window_radius: float | None = None
    window_width: float | None = None
    table: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.window not in ("none", "smooth_cutoff"):
            raise ValueError(f"unknown window {self.window!r}")

    def scaled(self, s: float) -> PotentialSpec:
        table = None if self.table is None else s * np.asarray(self.table)
        if self.kind == "harmonic":
            # V scales with omega^2
            params = (float(np.sqrt(s)) * self.params[0],)
            if s < 0:
                raise ValueError("cannot scale a harmonic potential by a negative factor")
        else:
            params = tuple(s * p for p in self.params)
        return PotentialSpec(self.kind, params, self.window, self.window_radius, self.window_width, table)

    def _coordinate(self, grid: Grid, axis: int) -> np.ndarray:
        x = grid.coordinate(axis)
        if self.window == "none":
            return x
        radius = 0.75 * grid.L if self.window_radius is None else self.window_radius
        width = 0.1 * grid.L if self.window_width is None else self.window_width
        return smooth_clamp(x, radius, width)

    def field(self, grid: Grid) -> np.ndarray:
        axes2 = grid.particle_axes(2)
        if self.kind == "zero":
            return np.zeros(grid.shape)
        if self.kind == "polynomial_in_x2":
            y = self._coordinate(grid, axes2[0])
            v = sum(p * y**k for k, p in enumerate(self.params))
        elif self.kind == "harmonic":
            (omega,) = self.params
            v = sum(0.5 * omega**2 * self._coordinate(grid, a) ** 2 for a in axes2)
        else:
            table = np.asarray(self.table, dtype=float)
            if table.shape != (grid.n,) * grid.d:
                raise ValueError(f"tabulated potential has shape {table.shape}")
            v = table.reshape((1,) * grid.d + table.shape)
        return np.broadcast_to(v, grid.shape).astype(float)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-4
    t_final: float = 0.2
    scheme: str = "rk4_full"
    record_stride: int = 10
    recheck_every: int = 100
    r_cap: float | None = R_CAP

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        ratio = self.t_final / self.dt
        if abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ValueError(f"t_final/dt = {ratio} is not an integer")

    @property
    def nsteps(self) -> int:
        return int(round(self.t_final / self.dt))


def nonlinear_potential(grid: Grid, psi: np.ndarray, coeffs: DGCoefficients, r_cap: float | None = R_CAP) -> np.ndarray:
    """R[psi] as used in the dynamics, clipped to [-r_cap, r_cap]."""
    r = r_total(grid, psi, coeffs)
    if r_cap is not None:
        np.clip(r, -r_cap, r_cap, out=r)
    return r


def rhs(grid: Grid, psi: np.ndarray, V: np.ndarray, coeffs: DGCoefficients, r_cap: float | None = R_CAP) -> np.ndarray:
    """d/dt psi = -i [(-1/2 lap + V) psi + R[psi] psi]."""
    h_psi = -0.5 * laplacian(grid, psi) + V * psi
    if not coeffs.is_linear:
        h_psi += nonlinear_potential(grid, psi, coeffs, r_cap) * psi
    out = -1j * h_psi
    if not np.isfinite(out).all():
        raise SolverError("non-finite time derivative (density floor breach or instability)")
    return out


def _kinetic_propagator(grid: Grid, tau: float) -> np.ndarray:
    k2 = sum(
        np.reshape(grid.wavenumbers**2, [grid.n if a == axis else 1 for a in range(grid.naxes)])
        for axis in range(grid.naxes)
    )
    return np.exp(-0.5j * tau * k2)


def _linear_half(grid: Grid, psi: np.ndarray, V: np.ndarray, tau: float, kin: np.ndarray) -> np.ndarray:
    psi = np.exp(-0.5j * tau * V) * psi
    psi = np.fft.ifftn(kin * np.fft.fftn(psi))
    return np.exp(-0.5j * tau * V) * psi


def step(grid: Grid, psi: np.ndarray, V: np.ndarray, coeffs: DGCoefficients, dt: float,
         scheme: str = "rk4_full", r_cap: float | None = R_CAP, _kin: np.ndarray | None = None) -> np.ndarray:
    """Advance psi by one step of ``scheme``.

    ``strang_split`` applies half a linear step (spectral kinetic part),
    a full nonlinear phase rotation exp(-i R dt), then half a linear step.
    """
    if scheme == "rk4_full":
        k1 = rhs(grid, psi, V, coeffs, r_cap)
        k2 = rhs(grid, psi + 0.5 * dt * k1, V, coeffs, r_cap)
        k3 = rhs(grid, psi + 0.5 * dt * k2, V, coeffs, r_cap)
        k4 = rhs(grid, psi + dt * k3, V, coeffs, r_cap)
        out = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    elif scheme == "strang_split":
        kin = _kinetic_propagator(grid, 0.5 * dt) if _kin is None else _kin
        out = _linear_half(grid, psi, V, 0.5 * dt, kin)
        if not coeffs.is_linear:
            out = np.exp(-1j * dt * nonlinear_potential(grid, out, coeffs, r_cap)) * out
        out = _linear_half(grid, out, V, 0.5 * dt, kin)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not np.isfinite(out).all():
        raise SolverError("non-finite wavefunction after step")
    return out


def stability_number(grid: Grid, psi: np.ndarray, V: np.ndarray, coeffs: DGCoefficients, dt: float, scheme: str,
                     r_cap: float | None = R_CAP) -> float:
    """dt times the spectral-radius estimate relevant to ``scheme``."""
    r_max = 0.0
    if not coeffs.is_linear:
        r_max = float(np.abs(nonlinear_potential(grid, psi, coeffs, r_cap)).max())
    if scheme == "strang_split":
        return dt * r_max
    return dt * (0.5 * grid.max_laplacian_eigenvalue() + float(np.abs(V).max()) + r_max)


def check_stability(grid, psi, V, coeffs, dt, scheme, step_index=0, time=0.0, r_cap=R_CAP) -> float:
    number = stability_number(grid, psi, V, coeffs, dt, scheme, r_cap)
    bound = RK4_BOUND if scheme == "rk4_full" else np.pi
    if not number < bound:
        raise StabilityError(
            f"dt={dt:g} violates the {scheme} stability bound: dt*lambda = {number:.3g} >= {bound:.3g}",
            step_index,
            time,
        )
    return number


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    records: dict = field(default_factory=dict)
    psi: np.ndarray | None = None

    def add(self, t: float, values: Mapping[str, object]) -> None:
        self.times.append(t)
        for name, value in values.items():
            self.records.setdefault(name, []).append(value)

    def values(self, name: str) -> np.ndarray:
        return np.asarray(self.records[name])


Observer = Callable[[np.ndarray], object]


def evolve(grid: Grid, psi0: np.ndarray, potential: PotentialSpec | np.ndarray, coeffs: DGCoefficients,
           cfg: IntegratorConfig, observers: Mapping[str, Observer] | None = None) -> Trajectory:
    """Evolve ``psi0`` to ``cfg.t_final`` recording observers every ``record_stride`` steps.

    The first record is taken at t = 0 before any step. The final state is
    kept on ``Trajectory.psi``.
    """
    grid.check_field(psi0)
    norm = integrate(grid, density(psi0))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"initial state is not normalized: integral of rho = {norm!r}")
    V = potential.field(grid) if isinstance(potential, PotentialSpec) else np.asarray(potential, dtype=float)
    grid.check_field(V)
    observers = dict(observers or {})

    psi = np.array(psi0, dtype=complex)
    check_stability(grid, psi, V, coeffs, cfg.dt, cfg.scheme, r_cap=cfg.r_cap)
    kin = _kinetic_propagator(grid, 0.5 * cfg.dt) if cfg.scheme == "strang_split" else None

    traj = Trajectory()
    traj.add(0.0, {name: obs(psi) for name, obs in observers.items()})
    for i in range(1, cfg.nsteps + 1):
        t = i * cfg.dt
        try:
            psi = step(grid, psi, V, coeffs, cfg.dt, cfg.scheme, cfg.r_cap, _kin=kin)
        except SolverError as exc:
            raise SolverError(f"{exc} at step {i} (t={t:.6g})", i, t) from None
        if i % cfg.recheck_every == 0:
            check_stability(grid, psi, V, coeffs, cfg.dt, cfg.scheme, i, t, cfg.r_cap)
        if i % cfg.record_stride == 0 or i == cfg.nsteps:
            traj.add(t, {name: obs(psi) for name, obs in observers.items()})
    traj.psi = psi
    log.debug("evolved %d steps to t=%g", cfg.nsteps, cfg.nsteps * cfg.dt)
    return traj
