# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import json
import os
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Type, TypeVar, Union

from typing_extensions import Final

from .assembly import PairRule
from .simbeam import BeamConfig, GateConfig
from .types import GatemonException, JSONType, StrainUnit


__all__ = [  # pylint: disable=unused-variable
    "ConfigError",
    "ConfigException",
    "DataSection",
    "ErrorSection",
    "ModelSection",
    "PriorSection",
    "RunConfig",
    "RunSection",
    "SidePrior",
    "ThermalSection",
    "load_run_config",
    "parse_run_config"
]


DEFAULT_MEMORY_BUDGET_MB: Final = 1024.0
DEFAULT_BENCH_SIZES: Final = (2000, 4000, 8000)


class ConfigException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the config module.
    """


class ConfigError(ConfigException):
    """
    Raised by :func:`load_run_config` in case a field is missing, mistyped, out of range or refers to a
    missing file.
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")

        self.field = field


class ModelSection(NamedTuple):
    # pylint: disable=invalid-name
    """
    Where the elastic model comes from: one of the synthetic fixtures, a reduced-model bundle or the full
    system as Matrix Market files with a DOF sidecar and an optional hydrostatic table.
    """

    beam: Optional[BeamConfig] = None
    gate: Optional[GateConfig] = None
    reduced: Optional[str] = None
    stiffness: Optional[str] = None
    strain_map: Optional[str] = None
    dofs: Optional[str] = None
    hydro: Optional[str] = None
    hydro_levels: Optional[str] = None


class SidePrior(NamedTuple):
    # pylint: disable=invalid-name
    """
    The load prior of one boundary. The kernels are in the nested JSON form of the kernels module. The
    mean is either a constant traction or ``"reactions"``, the contact reactions under the hydrostatic load.
    """

    spatial_kernel: Dict[str, Any]
    height_kernel: Dict[str, Any]
    time_kernel: Dict[str, Any]
    energy: float
    height_energy: float
    mean: Union[float, str]


class PriorSection(NamedTuple):
    # pylint: disable=invalid-name
    """
    The load priors of both boundaries and the water level domain.
    """

    quoin: SidePrior
    miter: SidePrior
    h_plus_range: Tuple[float, float]
    h_minus_range: Tuple[float, float]
    nominal_levels: Tuple[float, float]
    pair_rule: PairRule


class ThermalSection(NamedTuple):
    # pylint: disable=invalid-name
    """
    One temporal kernel per gage, mixed by ``Σ_T`` built from per-gage standard deviations and a common
    correlation. Without standard deviations the gages are independent.
    """

    kernels: Tuple[Dict[str, Any], ...]
    sigmas: Optional[Tuple[float, ...]]
    rho: float


class ErrorSection(NamedTuple):
    # pylint: disable=invalid-name
    """
    The thermal, bias and noise priors. Variances are given in ``variance_unit`` squared and converted to
    strain at ingestion.
    """

    variance_unit: StrainUnit
    thermal: ThermalSection
    bias_variance: Tuple[float, ...]
    noise_variance: Tuple[float, ...]


class DataSection(NamedTuple):
    # pylint: disable=invalid-name
    """
    The observation file and the unit of its gage columns.
    """

    observations: Optional[str] = None
    strain_unit: StrainUnit = StrainUnit.STRAIN


class RunSection(NamedTuple):
    # pylint: disable=invalid-name
    """
    Execution settings. Command line flags override them. Without a seed the fixtures use their own.
    """

    out: str = "out"
    seed: Optional[int] = None
    memory_budget_mb: float = DEFAULT_MEMORY_BUDGET_MB
    bench_sizes: Tuple[int, ...] = DEFAULT_BENCH_SIZES
    validate_instances: int = 3
    validate_times: int = 40
    validate_gages: int = 2


class RunConfig(NamedTuple):
    # pylint: disable=invalid-name
    """
    A validated run configuration. ``raw`` keeps the parsed JSON for hashing.
    """

    model: ModelSection
    prior: Optional[PriorSection]
    error: Optional[ErrorSection]
    data: DataSection
    run: RunSection
    base_dir: str
    raw: JSONType


T = TypeVar("T")


def _section(raw: Dict[str, Any], key: str, path: str, required: bool = False) -> Optional[Dict[str, Any]]:
    value = raw.get(key)
    if value is None:
        if required:
            raise ConfigError(f"{path}.{key}" if path else key, "missing section")
        return None
    if not isinstance(value, dict):
        raise ConfigError(f"{path}.{key}" if path else key, "expected an object")
    return value


def _number(
    raw: Dict[str, Any],
    key: str,
    path: str,
    default: Optional[float] = None,
    positive: bool = False
) -> float:
    field = f"{path}.{key}"
    value = raw.get(key, default)
    if value is None:
        raise ConfigError(field, "missing")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(field, f"must be strictly positive, got {value}")
    return float(value)


def _integer(raw: Dict[str, Any], key: str, path: str, default: int) -> int:
    field = f"{path}.{key}"
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    return value


def _numbers(value: Any, field: str, length: Optional[int] = None) -> Tuple[float, ...]:
    if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise ConfigError(field, f"expected a list of numbers, got {value!r}")
    if length is not None and len(value) != length:
        raise ConfigError(field, f"expected {length} entries, got {len(value)}")
    return tuple(float(v) for v in value)


def _range(raw: Dict[str, Any], key: str, path: str) -> Tuple[float, float]:
    field = f"{path}.{key}"
    if key not in raw:
        raise ConfigError(field, "missing")
    lower, upper = _numbers(raw[key], field, 2)
    if upper < lower:
        raise ConfigError(field, f"the upper bound {upper} lies below the lower bound {lower}")
    return lower, upper


def _kernel(raw: Dict[str, Any], key: str, path: str) -> Dict[str, Any]:
    value = raw.get(key)
    if not isinstance(value, dict) or "type" not in value:
        raise ConfigError(f"{path}.{key}", "expected a kernel description with a type")
    return value


def _file(raw: Dict[str, Any], key: str, path: str, base_dir: str, directory: bool = False) -> Optional[str]:
    value = raw.get(key)
    if value is None:
        return None
    field = f"{path}.{key}"
    if not isinstance(value, str):
        raise ConfigError(field, f"expected a path, got {value!r}")

    resolved = value if os.path.isabs(value) else os.path.join(base_dir, value)
    exists = os.path.isdir(resolved) if directory else os.path.isfile(resolved)
    if not exists:
        raise ConfigError(field, f"{'directory' if directory else 'file'} {resolved} does not exist")
    return resolved


def _unit(raw: Dict[str, Any], key: str, path: str) -> StrainUnit:
    value = raw.get(key, StrainUnit.STRAIN.value)
    try:
        return StrainUnit(value)
    except ValueError:
        raise ConfigError(
            f"{path}.{key}",
            f"expected one of {[ unit.value for unit in StrainUnit ]}, got {value!r}"
        ) from None


def _fixture(cls: Type[T], raw: Dict[str, Any], path: str, base_dir: str) -> T:
    defaults = cls()._asdict()  # type: ignore[attr-defined]
    values: Dict[str, Any] = {}
    for key, value in raw.items():
        field = f"{path}.{key}"
        if key not in defaults:
            raise ConfigError(field, "unknown field")

        default = defaults[key]
        if key == "temperature_csv":
            values[key] = _file(raw, key, path, base_dir)
        elif isinstance(default, tuple):
            if not isinstance(value, list):
                raise ConfigError(field, f"expected a list, got {value!r}")
            values[key] = tuple(tuple(entry) if isinstance(entry, list) else entry for entry in value)
        elif isinstance(default, bool) or isinstance(value, bool):
            raise ConfigError(field, f"unexpected value {value!r}")
        elif isinstance(default, int):
            if not isinstance(value, int):
                raise ConfigError(field, f"expected an integer, got {value!r}")
            values[key] = value
        elif isinstance(default, float):
            values[key] = _number(raw, key, path)
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ConfigError(field, f"expected a string, got {value!r}")
            values[key] = value
        else:
            values[key] = value

    return cls(**values)


def _model_section(raw: Dict[str, Any], base_dir: str) -> ModelSection:
    path = "model"
    beam = _section(raw, "beam", path)
    gate = _section(raw, "gate", path)

    section = ModelSection(
        beam=None if beam is None else _fixture(BeamConfig, beam, f"{path}.beam", base_dir),
        gate=None if gate is None else _fixture(GateConfig, gate, f"{path}.gate", base_dir),
        reduced=_file(raw, "reduced", path, base_dir, directory=True),
        stiffness=_file(raw, "stiffness", path, base_dir),
        strain_map=_file(raw, "strain_map", path, base_dir),
        dofs=_file(raw, "dofs", path, base_dir),
        hydro=_file(raw, "hydro", path, base_dir),
        hydro_levels=_file(raw, "hydro_levels", path, base_dir)
    )

    files = (section.stiffness, section.strain_map, section.dofs)
    sources = [ section.beam is not None, section.gate is not None, section.reduced is not None, any(files) ]
    if sum(sources) != 1:
        raise ConfigError(path, "name exactly one of beam, gate, reduced or the stiffness/strain_map/dofs files")
    if any(files) and not all(files):
        missing = [ key for key, value in zip(("stiffness", "strain_map", "dofs"), files) if value is None ]
        raise ConfigError(f"{path}.{missing[0]}", "missing")
    if (section.hydro is None) != (section.hydro_levels is None):
        raise ConfigError(f"{path}.hydro_levels", "the hydrostatic table and its level index come together")

    return section


def _side_prior(raw: Dict[str, Any], path: str) -> SidePrior:
    mean = raw.get("mean", "reactions")
    if isinstance(mean, bool) or not (isinstance(mean, (int, float)) or mean == "reactions"):
        raise ConfigError(f"{path}.mean", f"expected a number or \"reactions\", got {mean!r}")

    energy = _number(raw, "energy", path, 0.95, positive=True)
    height_energy = _number(raw, "height_energy", path, 0.99, positive=True)
    for key, value in (("energy", energy), ("height_energy", height_energy)):
        if value > 1:
            raise ConfigError(f"{path}.{key}", f"must not exceed one, got {value}")

    return SidePrior(
        _kernel(raw, "spatial_kernel", path),
        _kernel(raw, "height_kernel", path),
        _kernel(raw, "time_kernel", path),
        energy,
        height_energy,
        mean if isinstance(mean, str) else float(mean)
    )


def _prior_section(raw: Dict[str, Any]) -> PriorSection:
    path = "prior"
    h_plus_range = _range(raw, "h_plus_range", path)
    h_minus_range = _range(raw, "h_minus_range", path)

    nominal = raw.get("nominal_levels")
    if nominal is None:
        nominal_levels = (0.5 * sum(h_plus_range), 0.5 * sum(h_minus_range))
    else:
        values = _numbers(nominal, f"{path}.nominal_levels", 2)
        nominal_levels = (values[0], values[1])

    rule = raw.get("pair_rule", PairRule.PRODUCT_ENERGY.value)
    try:
        pair_rule = PairRule(rule)
    except ValueError:
        raise ConfigError(
            f"{path}.pair_rule",
            f"expected one of {[ member.value for member in PairRule ]}, got {rule!r}"
        ) from None

    sides = {}
    for key in ("quoin", "miter"):
        side = _section(raw, key, path, required=True)
        assert side is not None
        sides[key] = _side_prior(side, f"{path}.{key}")

    return PriorSection(sides["quoin"], sides["miter"], h_plus_range, h_minus_range, nominal_levels, pair_rule)


def _per_gage(raw: Dict[str, Any], key: str, path: str) -> Tuple[float, ...]:
    value = raw.get(key)
    field = f"{path}.{key}"
    if isinstance(value, list):
        values = _numbers(value, field)
    else:
        values = (_number(raw, key, path),)
    if any(v < 0 for v in values):
        raise ConfigError(field, "variances must be non-negative")
    return values


def _error_section(raw: Dict[str, Any]) -> ErrorSection:
    path = "error"
    thermal_raw = _section(raw, "thermal", path, required=True)
    assert thermal_raw is not None
    thermal_path = f"{path}.thermal"

    kernels = thermal_raw.get("kernels")
    if not isinstance(kernels, list) or len(kernels) == 0:
        raise ConfigError(f"{thermal_path}.kernels", "expected a non-empty list of kernels, one per gage")
    for index in range(len(kernels)):
        if not isinstance(kernels[index], dict) or "type" not in kernels[index]:
            raise ConfigError(f"{thermal_path}.kernels[{index}]", "expected a kernel description with a type")

    sigmas = None
    if "sigmas" in thermal_raw:
        sigmas = _numbers(thermal_raw["sigmas"], f"{thermal_path}.sigmas", len(kernels))
    rho = _number(thermal_raw, "rho", thermal_path, 0.0)
    if not -1 <= rho <= 1:
        raise ConfigError(f"{thermal_path}.rho", f"must lie in [-1, 1], got {rho}")

    gages = len(kernels)
    bias = _per_gage(raw, "bias_variance", path)
    noise = _per_gage(raw, "noise_variance", path)
    for key, values in (("bias_variance", bias), ("noise_variance", noise)):
        if len(values) not in { 1, gages }:
            raise ConfigError(f"{path}.{key}", f"expected one value or {gages}, got {len(values)}")
    if any(v <= 0 for v in noise):
        raise ConfigError(f"{path}.noise_variance", "must be strictly positive")

    return ErrorSection(
        _unit(raw, "variance_unit", path),
        ThermalSection(tuple(kernels), sigmas, rho),
        bias * gages if len(bias) == 1 else bias,
        noise * gages if len(noise) == 1 else noise
    )


def _run_section(raw: Dict[str, Any]) -> RunSection:
    path = "run"
    out = raw.get("out", RunSection().out)
    if not isinstance(out, str):
        raise ConfigError(f"{path}.out", f"expected a path, got {out!r}")

    sizes: List[int] = list(DEFAULT_BENCH_SIZES)
    if "bench_sizes" in raw:
        sizes = [ int(size) for size in _numbers(raw["bench_sizes"], f"{path}.bench_sizes") ]
        if any(size < 2 for size in sizes):
            raise ConfigError(f"{path}.bench_sizes", "every size needs at least two times")

    instances = _integer(raw, "validate_instances", path, 3)
    if instances < 1:
        raise ConfigError(f"{path}.validate_instances", "must be at least one")
    validate_times = _integer(raw, "validate_times", path, 40)
    validate_gages = _integer(raw, "validate_gages", path, 2)
    if validate_times < 2 or validate_gages < 1:
        raise ConfigError(f"{path}.validate_times", "validation needs at least two times and one gage")

    return RunSection(
        out,
        None if raw.get("seed") is None else _integer(raw, "seed", path, 0),
        _number(raw, "memory_budget_mb", path, DEFAULT_MEMORY_BUDGET_MB, positive=True),
        tuple(sizes),
        instances,
        validate_times,
        validate_gages
    )


def parse_run_config(raw: Any, base_dir: str = ".") -> RunConfig:
    """
    Validate a parsed run configuration.

    Args:
        raw: The parsed JSON document.
        base_dir: Directory relative file references are resolved against.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: naming the first offending field.
    """

    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected an object")
    unknown = set(raw) - { "model", "prior", "error", "data", "run" }
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")

    model_raw = _section(raw, "model", "", required=True)
    assert model_raw is not None
    model = _model_section(model_raw, base_dir)

    prior_raw = _section(raw, "prior", "")
    error_raw = _section(raw, "error", "")
    fixture = model.beam is not None or model.gate is not None
    if not fixture:
        if prior_raw is None:
            raise ConfigError("prior", "missing section")
        if error_raw is None:
            raise ConfigError("error", "missing section")

    data_raw = _section(raw, "data", "") or {}
    data = DataSection(_file(data_raw, "observations", "data", base_dir), _unit(data_raw, "strain_unit", "data"))

    return RunConfig(
        model,
        None if prior_raw is None else _prior_section(prior_raw),
        None if error_raw is None else _error_section(error_raw),
        data,
        _run_section(_section(raw, "run", "") or {}),
        base_dir,
        raw
    )


def load_run_config(path: str) -> RunConfig:
    """
    Args:
        path: Path to the JSON run configuration. Relative file references inside are resolved against its
            directory.

    Returns:
        The validated configuration.

    Raises:
        ConfigError: if the file is unreadable or invalid, naming the offending field.
    """

    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError("--config", f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise ConfigError("--config", f"{path} is not valid JSON: {e}") from e

    return parse_run_config(raw, os.path.dirname(os.path.abspath(path)))
