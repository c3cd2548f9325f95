import pytest

from config_manager import ExperimentConfig, build_config, environment_options, load_config_file
from errors import ConfigError
from percolation import Family


def test_defaults_resolve_ambient_delay():
    config = build_config("annealed", environ={})
    assert config.family == Family.HOMOGENEOUS_TREE.value
    assert config.delta == 3
    assert config.resolved_alpha == 0.4
    lattice = build_config("annealed", flags={"family": "z2"}, environ={})
    assert lattice.family == Family.SQUARE_LATTICE_2D.value and lattice.delta == 4
    assert lattice.resolved_alpha == 0.1


def test_preset_values():
    config = build_config("annealed", flags={"preset": "z2-subcritical"}, environ={})
    assert config.preset == "z2-subcritical"
    assert config.p == 0.3 and config.delta == 4
    assert config.model().is_subcritical


def test_layers_override_in_order(tmp_path):
    path = tmp_path / "experiment.cfg"
    path.write_text("# campaign\nworkers = 3\nsize-cap = 500\npreset = tree-critical\np = 0.45\n")
    environ = {"DRW_WORKERS": "7", "DRW_DENSE_CAP": "1000"}
    from_file = build_config("annealed", str(path), environ=environ)
    assert from_file.workers == 3 and from_file.dense_cap == 1000
    assert from_file.size_cap == 500 and from_file.p == 0.45
    from_flags = build_config("annealed", str(path), flags={"workers": 2, "p": None}, environ=environ)
    assert from_flags.workers == 2 and from_flags.p == 0.45


def test_environment_options():
    assert environment_options({"DRW_OUTPUT_DIR": "runs", "OTHER": "x"}) == {"output_dir": "runs"}
    assert environment_options({"DRW_WORKERS": ""}) == {}


@pytest.mark.parametrize("flags", [
    {"p": "abc"},
    {"p": 1.5},
    {"workers": 0},
    {"family": "cubic"},
    {"t_min": 10.0, "t_max": 1.0},
    {"e_min": 0.1, "e_max": 0.01},
    {"preset": "nowhere"},
    {"fixed_root": "maybe"},
])
def test_invalid_values_are_config_errors(flags):
    with pytest.raises(ConfigError):
        build_config("annealed", flags=flags, environ={})


def test_unknown_key_in_file(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        build_config("annealed", str(path), environ={})
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "missing.cfg"))


def test_invalid_model_is_config_error():
    config = build_config("annealed", flags={"delta": 2}, environ={})
    with pytest.raises(ConfigError):
        config.model()


def test_booleans_and_grids():
    config = build_config("annealed", flags={"fixed_root": "off", "t_points": 3, "t_max": 100.0,
                                             "m_max": 10, "m_points": 20}, environ={})
    assert config.fixed_root is False
    assert config.t_grid().tolist() == pytest.approx([1.0, 10.0, 100.0])
    grid = config.m_grid()
    assert grid[0] == 1 and grid[-1] == 10 and len(set(grid.tolist())) == len(grid)


def test_to_lines_echo():
    lines = ExperimentConfig(command="tail", p=0.25).to_lines()
    assert "command = tail" in lines
    assert "p = 0.25" in lines
    assert "fixed_root = true" in lines
