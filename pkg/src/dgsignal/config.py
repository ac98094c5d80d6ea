"""Strict loading of run configuration files (TOML).

Unknown sections or keys are rejected so that a typo never silently falls
back to a default.
"""

from __future__ import annotations

import copy
import sys
from pathlib import Path

import numpy as np

from .evolution import IntegratorConfig, PotentialSpec
from .grid import build_grid
from .hydro import DGCoefficients
from .signaling import FitConfig, Scenario
from .states import StateSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "grid": {"d": 1, "n": 256, "L": 8.0, "backend": "fd", "fd_order": 8},
    "state": {
        "rho0": "paper_example",
        "rho0_params": [],
        "rho0_path": "",
        "phase": "bilinear",
        "phase_a": 1.0,
        "phase_path": "",
    },
    "potential": {
        "kind": "polynomial_in_x2",
        "params": [0.0, 0.0, 0.0, 1.0],
        "window": "smooth_cutoff",
        "window_radius": None,
        "window_width": None,
        "path": "",
    },
    "coefficients": {"c1": 0.0, "c2": 0.0, "c3": 0.0, "c4": 0.0, "c5": 0.0, "rho_floor": 1e-30},
    "integrator": {"scheme": "rk4_full", "dt": 1e-4, "t_final": 0.2, "record_stride": 10, "r_cap": 1e3},
    "fit": {"max_order": 4, "window": 0.1, "significance": 5.0, "noise_floor": 1e-10, "guard_terms": 5},
    "oracle": {"order": "auto"},
    "output": {"directory": "out", "formats": ["json", "csv", "svg"]},
}

_TYPES = {
    "grid": {"d": int, "n": int, "L": float, "backend": str, "fd_order": int},
    "state": {"rho0": str, "rho0_params": list, "rho0_path": str, "phase": str, "phase_a": float, "phase_path": str},
    "potential": {"kind": str, "params": list, "window": str, "window_radius": float, "window_width": float,
                  "path": str},
    "coefficients": {"c1": float, "c2": float, "c3": float, "c4": float, "c5": float, "rho_floor": float},
    "integrator": {"scheme": str, "dt": float, "t_final": float, "record_stride": int, "r_cap": float},
    "fit": {"max_order": int, "window": float, "significance": float, "noise_floor": float, "guard_terms": int},
    "oracle": {"order": (str, int)},
    "output": {"directory": str, "formats": list},
}
FORMATS = ("json", "csv", "svg")


def _coerce(section: str, key: str, value):
    expected = _TYPES[section][key]
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"[{section}] {key} must be an integer, got {value!r}")
        return value
    if not isinstance(value, expected):
        raise ConfigError(f"[{section}] {key} has the wrong type: {value!r}")
    return value


def resolve(raw: dict) -> dict:
    """Merge ``raw`` over the defaults, rejecting unknown sections and keys."""
    resolved = copy.deepcopy(DEFAULTS)
    for section, body in raw.items():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            resolved[section][key] = _coerce(section, key, value)
    order = resolved["oracle"]["order"]
    if order not in ("auto", 3, 4):
        raise ConfigError(f"[oracle] order must be 'auto', 3 or 4, got {order!r}")
    bad = [f for f in resolved["output"]["formats"] if f not in FORMATS]
    if bad:
        raise ConfigError(f"[output] unknown formats {bad}")
    return resolved


def load(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    resolved = resolve(raw)
    resolved["_base_dir"] = str(path.parent.resolve())
    return resolved


def _path(cfg: dict, value: str) -> str:
    p = Path(value)
    return str(p if p.is_absolute() else Path(cfg.get("_base_dir", ".")) / p)


def build_scenario(cfg: dict) -> Scenario:
    """Turn a resolved config into a :class:`Scenario`; value errors become ConfigError."""
    try:
        g = cfg["grid"]
        grid = build_grid(g["d"], g["n"], g["L"], g["backend"], g["fd_order"])

        s = cfg["state"]
        state = StateSpec(
            rho0=s["rho0"],
            rho0_params=tuple(float(v) for v in s["rho0_params"]),
            rho0_path=_path(cfg, s["rho0_path"]) if s["rho0_path"] else None,
            phase=s["phase"],
            phase_a=s["phase_a"],
            phase_path=_path(cfg, s["phase_path"]) if s["phase_path"] else None,
        )
        if state.rho0 == "tabulated" and not state.rho0_path:
            raise ConfigError("[state] rho0 = 'tabulated' needs rho0_path")
        if state.phase == "tabulated" and not state.phase_path:
            raise ConfigError("[state] phase = 'tabulated' needs phase_path")

        p = cfg["potential"]
        table = np.load(_path(cfg, p["path"])) if p["kind"] == "tabulated" else None
        if p["kind"] == "tabulated" and not p["path"]:
            raise ConfigError("[potential] kind = 'tabulated' needs path")
        potential = PotentialSpec(p["kind"], tuple(float(v) for v in p["params"]), p["window"],
                                  p["window_radius"], p["window_width"], table)

        c = cfg["coefficients"]
        coeffs = DGCoefficients(c["c1"], c["c2"], c["c3"], c["c4"], c["c5"], rho_floor=c["rho_floor"])

        i = cfg["integrator"]
        integrator = IntegratorConfig(dt=i["dt"], t_final=i["t_final"], scheme=i["scheme"],
                                      record_stride=i["record_stride"], r_cap=i["r_cap"])
        f = cfg["fit"]
        fit = FitConfig(f["max_order"], f["window"], f["significance"], f["noise_floor"], f["guard_terms"])
    except ConfigError:
        raise
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    return Scenario(grid, state, potential, coeffs, integrator, fit)


def public(cfg: dict) -> dict:
    """The resolved config without private bookkeeping keys."""
    return {k: v for k, v in cfg.items() if not k.startswith("_")}
