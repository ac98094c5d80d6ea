from pathlib import Path

import pytest

from dgsignal import config
from dgsignal.hydro import CoefficientClass, classify

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


def test_defaults_resolve():
    cfg = config.resolve({})
    s = config.build_scenario(cfg)
    assert s.grid.n == 256 and s.grid.L == 8.0
    assert s.integrator.dt == 1e-4 and s.integrator.t_final == 0.2
    assert s.coeffs.is_linear
    assert s.potential.params == (0.0, 0.0, 0.0, 1.0)


def test_bundled_configs_load():
    classes = {}
    for path in sorted(CONFIGS.glob("*.toml")):
        cfg = config.load(path)
        classes[path.stem] = classify(config.build_scenario(cfg).coeffs)
    assert classes["case2_reference"] == CoefficientClass.WERNER_SATISFIED_SIGNALING
    assert classes["gisin_free"] == CoefficientClass.GISIN_FREE
    assert classes["linear_null"] == CoefficientClass.LINEAR


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[grid]\nnn = 3\n", "unknown key 'nn'"),
        ("[grdi]\nn = 3\n", "unknown section"),
        ("[grid]\nn = 'many'\n", "must be an integer"),
        ("[grid]\nL = true\n", "must be a number"),
        ("[oracle]\norder = 5\n", "order"),
        ("[output]\nformats = ['png']\n", "unknown formats"),
        ("[grid\n", "cannot parse"),
    ],
)
def test_strict_validation(tmp_path, text, fragment):
    with pytest.raises(config.ConfigError, match=fragment):
        config.load(write(tmp_path, text))


def test_missing_file_named(tmp_path):
    with pytest.raises(config.ConfigError, match="nope.toml"):
        config.load(tmp_path / "nope.toml")


@pytest.mark.parametrize(
    "text",
    [
        "[grid]\nn = 7\n",
        "[state]\nrho0 = 'tabulated'\n",
        "[potential]\nkind = 'tabulated'\n",
        "[integrator]\ndt = 3e-4\n",
        "[potential]\nkind = 'quartic'\n",
    ],
)
def test_invalid_values_become_config_errors(tmp_path, text):
    with pytest.raises(config.ConfigError):
        config.build_scenario(config.load(write(tmp_path, text)))


def test_relative_paths_follow_config(tmp_path):
    import numpy as np

    (tmp_path / "data").mkdir()
    np.save(tmp_path / "data" / "v.npy", np.zeros(64))
    cfg = config.load(write(tmp_path, "[grid]\nn = 64\n[potential]\nkind = 'tabulated'\npath = 'data/v.npy'\n"))
    s = config.build_scenario(cfg)
    assert s.potential.field(s.grid).shape == (64, 64)
    assert "_base_dir" not in config.public(cfg)
