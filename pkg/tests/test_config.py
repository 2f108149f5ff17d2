import json

import pytest

from gatemon.assembly import PairRule
from gatemon.config import ConfigError, load_run_config, parse_run_config
from gatemon.types import StrainUnit


__all__ = [  # pylint: disable=unused-variable
    "test_file_model",
    "test_fixture_overrides",
    "test_invalid_fields",
    "test_load_run_config",
    "test_prior_and_error"
]


MATERN: dict = { "type": "matern", "nu": 1.5, "length": 10.0, "variance": 2.0 }


def side(mean="reactions") -> dict:
    return { "spatial_kernel": MATERN, "height_kernel": MATERN, "time_kernel": MATERN, "mean": mean }


def file_config() -> dict:
    return {
        "model": { "stiffness": "K.mtx", "strain_map": "B.mtx", "dofs": "dofs.csv" },
        "prior": {
            "h_plus_range": [ 340.0, 380.0 ],
            "h_minus_range": [ 100.0, 380.0 ],
            "quoin": side(),
            "miter": side(-2.5)
        },
        "error": {
            "variance_unit": "microstrain",
            "thermal": { "kernels": [ MATERN, MATERN ], "sigmas": [ 1.0, 2.0 ], "rho": 0.9 },
            "bias_variance": 1e4,
            "noise_variance": [ 9.0, 9.0 ]
        },
        "run": { "seed": 4, "bench_sizes": [ 100, 200 ] }
    }


def touch(directory) -> None:
    for name in ("K.mtx", "B.mtx", "dofs.csv"):
        (directory / name).write_text("")


def test_fixture_overrides() -> None:
    """
    Test that fixture sections override the defaults of the synthetic problems.
    """

    config = parse_run_config({ "model": { "beam": { "n_times": 60, "bias": [ 0.0, 1e-4, 0.0 ], "youngs": 1 } } })
    assert config.model.beam is not None
    assert config.model.beam.n_times == 60
    assert config.model.beam.bias == (0.0, 1e-4, 0.0)
    assert config.model.beam.youngs == 1.0
    assert config.model.beam.nx == 48
    assert config.prior is None and config.error is None
    assert config.run.out == "out"
    assert config.run.seed is None

    gate = parse_run_config({ "model": { "gate": { "level_grid": [ 2, 3 ] } } })
    assert gate.model.gate is not None
    assert gate.model.gate.level_grid == (2, 3)

    with pytest.raises(ConfigError) as error:
        parse_run_config({ "model": { "beam": { "stiffness": 3 } } })
    assert error.value.field == "model.beam.stiffness"

    with pytest.raises(ConfigError) as error:
        parse_run_config({ "model": { "beam": { "nx": 4.5 } } })
    assert error.value.field == "model.beam.nx"


def test_file_model(tmp_path) -> None:
    """
    Test that file references are resolved against the configuration's directory.
    """

    touch(tmp_path)
    config = parse_run_config(file_config(), str(tmp_path))
    assert config.model.stiffness == str(tmp_path / "K.mtx")
    assert config.model.dofs == str(tmp_path / "dofs.csv")
    assert config.run.seed == 4
    assert config.run.bench_sizes == (100, 200)

    raw = file_config()
    raw["model"]["hydro"] = "hydro.mtx"
    with pytest.raises(ConfigError) as error:
        parse_run_config(raw, str(tmp_path))
    assert error.value.field == "model.hydro"

    raw = file_config()
    del raw["model"]["dofs"]
    with pytest.raises(ConfigError) as error:
        parse_run_config(raw, str(tmp_path))
    assert error.value.field == "model.dofs"

    raw = file_config()
    raw["model"]["beam"] = {}
    with pytest.raises(ConfigError) as error:
        parse_run_config(raw, str(tmp_path))
    assert error.value.field == "model"

    raw = file_config()
    del raw["error"]
    with pytest.raises(ConfigError) as error:
        parse_run_config(raw, str(tmp_path))
    assert error.value.field == "error"


def test_prior_and_error(tmp_path) -> None:
    """
    Test the parsed prior and error sections and their defaults.
    """

    touch(tmp_path)
    config = parse_run_config(file_config(), str(tmp_path))
    prior = config.prior
    error = config.error
    assert prior is not None and error is not None

    assert prior.nominal_levels == (360.0, 240.0)
    assert prior.pair_rule is PairRule.PRODUCT_ENERGY
    assert prior.quoin.mean == "reactions"
    assert prior.miter.mean == -2.5
    assert prior.quoin.energy == 0.95

    assert error.variance_unit is StrainUnit.MICROSTRAIN
    assert error.thermal.sigmas == (1.0, 2.0)
    assert error.thermal.rho == 0.9
    assert error.bias_variance == (1e4, 1e4)
    assert error.noise_variance == (9.0, 9.0)


@pytest.mark.parametrize("path, value, field", [
    (("prior", "h_plus_range"), [ 380.0, 340.0 ], "prior.h_plus_range"),
    (("prior", "pair_rule"), "some", "prior.pair_rule"),
    (("prior", "quoin", "energy"), 1.5, "prior.quoin.energy"),
    (("prior", "miter", "mean"), "zero", "prior.miter.mean"),
    (("prior", "quoin", "time_kernel"), { "nu": 1.5 }, "prior.quoin.time_kernel"),
    (("error", "thermal", "rho"), 2.0, "error.thermal.rho"),
    (("error", "thermal", "sigmas"), [ 1.0 ], "error.thermal.sigmas"),
    (("error", "noise_variance"), [ 9.0, 0.0 ], "error.noise_variance"),
    (("error", "bias_variance"), [ 1.0, 1.0, 1.0 ], "error.bias_variance"),
    (("error", "variance_unit"), "inch", "error.variance_unit"),
    (("run", "memory_budget_mb"), 0, "run.memory_budget_mb"),
    (("run", "bench_sizes"), [ 1 ], "run.bench_sizes"),
    (("run", "seed"), "four", "run.seed")
])
def test_invalid_fields(tmp_path, path, value, field) -> None:
    """
    Test that every invalid field is reported by its dotted name.
    """

    touch(tmp_path)
    raw = file_config()
    target = raw
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value

    with pytest.raises(ConfigError) as error:
        parse_run_config(raw, str(tmp_path))
    assert error.value.field == field
    assert str(error.value).startswith(field)


def test_load_run_config(tmp_path) -> None:
    """
    Test reading configurations from disk.
    """

    touch(tmp_path)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(file_config()))
    config = load_run_config(str(path))
    assert config.base_dir == str(tmp_path)
    assert config.raw == file_config()

    path.write_text("{ not json")
    with pytest.raises(ConfigError) as error:
        load_run_config(str(path))
    assert error.value.field == "--config"

    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "absent.json"))

    path.write_text(json.dumps({ "model": { "beam": {} }, "extra": {} }))
    with pytest.raises(ConfigError) as error:
        load_run_config(str(path))
    assert error.value.field == "extra"
