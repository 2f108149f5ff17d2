# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import argparse
import logging
import os
import time
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse
from typing_extensions import Final

from .assembly import (
    AssemblyConstructionError,
    AssemblyDomainError,
    ErrorModel,
    JointModel,
    LoadPrior,
    build_joint_model,
    model_accounting,
    simulate_prior
)
from .bundles import (
    BundleException,
    config_hash,
    load_reduced_model,
    read_dof_sidecar,
    read_hydro_table,
    read_matrix_market,
    read_observations,
    save_reduced_model,
    write_json,
    write_manifest,
    write_observations,
    write_posterior,
    write_truth
)
from .condense import (
    DofInfo,
    ExtrapolationError,
    FactorizationFailed,
    LevelTable,
    ReducedElasticModel,
    ReductionDomainError,
    dirichlet_reactions,
    schur_reduce
)
from .config import ConfigError, ConfigException, PriorSection, RunConfig, load_run_config, parse_run_config
from .kernels import (
    CoregionalModel,
    CoregionalModelError,
    Kernel,
    KernelDomainError,
    Matern,
    ScaleTable,
    kernel_from_config
)
from .klreduce import (
    DegenerateMode,
    EigensolverFailed,
    InvalidQuadrature,
    coordinate_seeds,
    level_grid_seeds,
    nystrom_eig,
    truncate_energy
)
from .oracle import DataCovarianceSingular, GuardExceeded, compare_with_oracle, oracle_posterior, random_instance
from .simbeam import (
    BeamConfig,
    SignalCoverage,
    SimulationException,
    SyntheticData,
    assemble_beam_fem,
    beam_error_model,
    beam_load_priors,
    build_gate_problem,
    gate_thermal_model,
    generate_synthetic,
    start_timestamp,
    timestamps_from_days
)
from .smoother import (
    GageMismatch,
    InnovationSingular,
    MissingLevels,
    NonIncreasingTimes,
    ObservationSeries,
    TimeNotObserved,
    UnknownQuantity,
    extract_posterior,
    smooth_series
)
from .statespace import ConstructionError, DiscretizationError, to_sde
from .storage import select_storage
from .types import GatemonException, Quantity, Side
from .version import __version__


__all__ = [  # pylint: disable=unused-variable
    "EXIT_INPUT",
    "EXIT_NUMERICAL",
    "EXIT_OK",
    "Problem",
    "build_problem",
    "cmd_bench",
    "cmd_condense",
    "cmd_fit",
    "cmd_kernel2sde",
    "cmd_simulate",
    "cmd_validate",
    "exit_code",
    "main",
    "parse_args"
]


LOG_TAG: Final = "gatemon.cli"

EXIT_OK: Final = 0
EXIT_INPUT: Final = 2
EXIT_NUMERICAL: Final = 3

MATERN_TOLERANCE: Final = 1e-8
PERIODIC_TOLERANCE: Final = 2e-5
REPRODUCTION_LAGS: Final = np.linspace(0.0, 3.0, 61)
SYNTHETIC_START: Final = BeamConfig().start

_NUMERICAL_ERRORS: Final = (
    DataCovarianceSingular,
    DegenerateMode,
    DiscretizationError,
    EigensolverFailed,
    FactorizationFailed,
    GuardExceeded,
    InnovationSingular
)

_INPUT_ERRORS: Final = (
    AssemblyConstructionError,
    AssemblyDomainError,
    BundleException,
    ConfigException,
    ConstructionError,
    CoregionalModelError,
    ExtrapolationError,
    GageMismatch,
    InvalidQuadrature,
    KernelDomainError,
    MissingLevels,
    NonIncreasingTimes,
    ReductionDomainError,
    SignalCoverage,
    TimeNotObserved,
    UnknownQuantity
)


def exit_code(error: GatemonException) -> int:
    """
    Args:
        error: An error raised while running a command.

    Returns:
        The process exit code: 3 for guard and numerical failures, 2 for configuration and input errors.
    """

    if isinstance(error, _NUMERICAL_ERRORS):
        return EXIT_NUMERICAL
    if isinstance(error, _INPUT_ERRORS):
        return EXIT_INPUT
    if isinstance(error, SimulationException):
        return EXIT_NUMERICAL
    return EXIT_INPUT


class Problem(NamedTuple):
    # pylint: disable=invalid-name
    """
    A joint model ready for inference, with the observations and truth of a synthetic fixture if any.
    """

    model: JointModel
    synthetic: Optional[SyntheticData] = None
    series: Optional[ObservationSeries] = None


class _FullSystem(NamedTuple):
    # pylint: disable=invalid-name
    K: scipy.sparse.csr_matrix
    hydro: Optional[LevelTable]
    dofs: Tuple[DofInfo, ...]


def _seed(config: RunConfig, fixture_seed: int) -> int:
    return fixture_seed if config.run.seed is None else config.run.seed


def _beam_config(config: RunConfig) -> BeamConfig:
    beam = config.model.beam
    if beam is None:
        raise ConfigError("model.beam", "this command needs the beam fixture")
    return beam._replace(seed=_seed(config, beam.seed))


def _beam_hydro(beam: BeamConfig, hydro: np.ndarray) -> LevelTable:
    return LevelTable([ 0.0, beam.height ], [ 0.0 ], np.stack([ 0.0 * hydro, beam.height * hydro ])[:, np.newaxis, :])


def _full_system(config: RunConfig) -> Tuple[Optional[_FullSystem], ReducedElasticModel]:
    model = config.model
    if model.beam is not None:
        fem = assemble_beam_fem(model.beam)
        hydro = _beam_hydro(model.beam, fem.hydro)
        return _FullSystem(fem.K, hydro, fem.boundary), schur_reduce(fem.K, fem.B, fem.boundary, hydro)

    if model.reduced is not None:
        return None, load_reduced_model(model.reduced)

    assert model.stiffness is not None and model.strain_map is not None and model.dofs is not None
    K = read_matrix_market(model.stiffness)  # pylint: disable=invalid-name
    B = read_matrix_market(model.strain_map)  # pylint: disable=invalid-name
    boundary = tuple(dof for dof in read_dof_sidecar(model.dofs) if dof.side is not Side.GAGE_REGION)
    hydro = None
    if model.hydro is not None and model.hydro_levels is not None:
        hydro = read_hydro_table(model.hydro, model.hydro_levels)

    logging.getLogger(LOG_TAG).info(
        f"Read a system of {K.shape[0]} DOFs with {B.shape[0]} gages and {len(boundary)} boundary DOFs."
    )

    return _FullSystem(K, hydro, boundary), schur_reduce(K, B, boundary, hydro)


def _grid(bounds: Tuple[float, float]) -> List[float]:
    return [ bounds[0] ] if bounds[0] == bounds[1] else [ bounds[0], bounds[1] ]


def _mean_tables(
    prior: PriorSection,
    full: Optional[_FullSystem],
    reduced: ReducedElasticModel
) -> Dict[Side, LevelTable]:
    reactions = None
    tables: Dict[Side, LevelTable] = {}
    for side, side_prior in ((Side.QUOIN, prior.quoin), (Side.MITER, prior.miter)):
        count = reduced.side_indices(side).size
        field = f"prior.{side.value}.mean"

        if not isinstance(side_prior.mean, str):
            h_plus, h_minus = _grid(prior.h_plus_range), _grid(prior.h_minus_range)
            tables[side] = LevelTable(h_plus, h_minus, np.full((len(h_plus), len(h_minus), count), side_prior.mean))
            continue

        if full is None or full.hydro is None:
            raise ConfigError(field, "contact reactions need the full stiffness and a hydrostatic table")
        hydro = full.hydro
        if reactions is None:
            contact = [ dof.dof_id for dof in full.dofs if dof.side is Side.QUOIN ] + [
                dof.dof_id for dof in full.dofs if dof.side is Side.MITER
            ]
            reactions = np.array([
                dirichlet_reactions(full.K, values, contact)
                for values in hydro.values.reshape(-1, hydro.values.shape[-1])
            ])

        offset = 0 if side is Side.QUOIN else reduced.side_indices(Side.QUOIN).size
        tractions = reactions[:, offset:offset + count] / reduced.tributary(side)
        tables[side] = LevelTable(
            hydro.h_plus,
            hydro.h_minus,
            tractions.reshape(hydro.h_plus.size, hydro.h_minus.size, count)
        )
    return tables


def _configured_priors(
    config: RunConfig,
    prior: PriorSection,
    full: Optional[_FullSystem],
    reduced: ReducedElasticModel
) -> Tuple[LoadPrior, LoadPrior]:
    log = logging.getLogger(LOG_TAG)
    base_dir = config.base_dir
    means = _mean_tables(prior, full, reduced)
    height_seeds, height_weights = level_grid_seeds(prior.h_plus_range, prior.h_minus_range)

    priors: List[LoadPrior] = []
    for side, side_prior in ((Side.QUOIN, prior.quoin), (Side.MITER, prior.miter)):
        path = f"prior.{side.value}"
        arc = reduced.arc_lengths(side)
        mean = means[side]
        nominal = np.abs(mean(prior.nominal_levels))

        spatial_kernel = kernel_from_config(
            side_prior.spatial_kernel,
            base_dir,
            ScaleTable(arc, nominal) if arc.size > 0 else None,
            f"{path}.spatial_kernel"
        )
        height_kernel = kernel_from_config(side_prior.height_kernel, base_dir, path=f"{path}.height_kernel")
        time_kernel = kernel_from_config(side_prior.time_kernel, base_dir, path=f"{path}.time_kernel")

        seeds, weights = coordinate_seeds(arc)
        spatial = truncate_energy(nystrom_eig(spatial_kernel, seeds, weights), side_prior.energy)
        height = truncate_energy(nystrom_eig(height_kernel, height_seeds, height_weights), side_prior.height_energy)
        priors.append(LoadPrior(side, mean, spatial, height, time_kernel))

        log.info(f"The {side.value} prior keeps {spatial.size} spatial and {height.size} height modes.")

    return priors[0], priors[1]


def _configured_error(config: RunConfig, gages: int) -> ErrorModel:
    error = config.error
    assert error is not None

    if len(error.thermal.kernels) != gages:
        raise ConfigError("error.thermal.kernels", f"expected {gages} kernels, one per gage")
    for key, values in (("bias_variance", error.bias_variance), ("noise_variance", error.noise_variance)):
        if len(values) != gages:
            raise ConfigError(f"error.{key}", f"expected {gages} values, one per gage")

    kernels = [
        kernel_from_config(kernel, config.base_dir, path=f"error.thermal.kernels[{index}]")
        for index, kernel in enumerate(error.thermal.kernels)
    ]
    if error.thermal.sigmas is None:
        marginal = np.eye(gages)
    else:
        marginal = CoregionalModel.correlation_matrix(error.thermal.sigmas, error.thermal.rho)

    scale = error.variance_unit.scale ** 2
    return ErrorModel(
        CoregionalModel(marginal, kernels).scaled(scale),
        scale * np.diag(error.bias_variance),
        scale * np.asarray(error.noise_variance, dtype=np.float64)
    )


def build_problem(config: RunConfig, n_times: Optional[int] = None) -> Problem:
    """
    Build the joint model a configuration describes.

    Args:
        config: The run configuration.
        n_times: Overrides the number of synthetic observation times of the gate fixture.

    Returns:
        The problem. The gate fixture comes with observations drawn from its prior.
    """

    gate = config.model.gate
    if gate is not None:
        problem = build_gate_problem(gate._replace(seed=_seed(config, gate.seed)), n_times)
        return Problem(problem.model, None, problem.series)

    full, reduced = _full_system(config)

    beam = config.model.beam
    if config.prior is not None:
        quoin, miter = _configured_priors(config, config.prior, full, reduced)
        pair_rule = config.prior.pair_rule
    else:
        assert beam is not None
        quoin, miter = beam_load_priors(beam, reduced)
        pair_rule = None

    if config.error is not None:
        error = _configured_error(config, reduced.gage_count)
    else:
        assert beam is not None
        error = beam_error_model(beam)

    if pair_rule is None:
        model = build_joint_model(reduced, quoin, miter, error)
    else:
        model = build_joint_model(reduced, quoin, miter, error, pair_rule)
    return Problem(model)


def _write_manifest(out: str, files: Sequence[str], config: RunConfig, command: str, seed: Optional[int]) -> None:
    digest = config_hash({ "command": command, "config": config.raw, "seed": seed })
    write_manifest(out, files, digest, { "command": command })


def cmd_simulate(config: RunConfig) -> int:
    """
    Generate the synthetic beam observations and their truth.

    Args:
        config: The run configuration, naming the beam fixture.

    Returns:
        The exit code.
    """

    beam = _beam_config(config)
    out = config.run.out
    os.makedirs(out, exist_ok=True)

    data = generate_synthetic(beam)
    write_observations(os.path.join(out, "observations.csv"), data.timestamps, data.series)
    files = [ "observations.csv" ] + write_truth(out, data.timestamps, data.truth, data.series.gage_ids)
    _write_manifest(out, files, config, "simulate", beam.seed)

    logging.getLogger(LOG_TAG).info(f"Wrote {len(data.series)} synthetic observations to {out}.")
    return EXIT_OK


def cmd_condense(config: RunConfig) -> int:
    """
    Condense the configured elastic system and write the reduced-model bundle.

    Args:
        config: The run configuration.

    Returns:
        The exit code.
    """

    if config.model.gate is not None or config.model.reduced is not None:
        raise ConfigError("model", "condensation needs the beam fixture or the full system files")

    _, reduced = _full_system(config)
    save_reduced_model(config.run.out, reduced, config_hash({ "command": "condense", "config": config.raw }))
    return EXIT_OK


def _observations(
    config: RunConfig,
    override: Optional[str]
) -> Tuple[ObservationSeries, pd.DatetimeIndex, Optional[SyntheticData]]:
    path = override if override is not None else config.data.observations
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError("--observations" if override is not None else "data.observations", f"no file {path}")
        data = read_observations(path, config.data.strain_unit)
        return data.series, data.timestamps, None

    if config.model.beam is not None:
        synthetic = generate_synthetic(_beam_config(config))
        return synthetic.series, synthetic.timestamps, synthetic

    raise ConfigError("data.observations", "missing")


def cmd_fit(config: RunConfig, observations: Optional[str] = None, filter_only: bool = False) -> int:
    """
    Run the filter and smoother and export the posterior of every quantity.

    Args:
        config: The run configuration.
        observations: Overrides the configured observation file.
        filter_only: Whether to skip the backward pass.

    Returns:
        The exit code.
    """

    log = logging.getLogger(LOG_TAG)
    out = config.run.out
    os.makedirs(out, exist_ok=True)

    problem = build_problem(config)
    synthetic = None
    if problem.series is not None and observations is None and config.data.observations is None:
        series = problem.series
        timestamps = timestamps_from_days(start_timestamp(SYNTHETIC_START), series.times)
    else:
        series, timestamps, synthetic = _observations(config, observations)

    model = problem.model
    storage = select_storage(model.dim, len(series), config.run.memory_budget_mb, out)

    start = time.perf_counter()
    traj = smooth_series(model, series, storage, filter_only)
    elapsed = time.perf_counter() - start
    log.info(f"Inference over {len(series)} times took {elapsed:.2f} s.")

    try:
        bias = extract_posterior(traj, Quantity.BIAS, float(series.times[-1]))
        summary = {
            "elapsed_seconds": elapsed,
            "bias_mean": bias.mean.tolist(),
            "bias_std": bias.std.tolist()
        }
        if synthetic is not None:
            summary["bias_truth"] = synthetic.truth.bias.tolist()

        files = write_posterior(out, traj, series.gage_ids, pd.DatetimeIndex(timestamps), summary)
    finally:
        traj.close()

    write_json(os.path.join(out, "accounting.json"), model_accounting(model, len(series)).to_json())
    files.append("accounting.json")
    _write_manifest(out, files, config, "fit", config.run.seed)
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    """
    Compare the smoother against dense conditioning on random instances, Matérn-only and periodic.

    Args:
        config: The run configuration.

    Returns:
        The exit code.
    """

    log = logging.getLogger(LOG_TAG)
    run = config.run
    seed = _seed(config, 0)

    results = []
    for index in range(run.validate_instances):
        for periodic, tolerance in ((False, MATERN_TOLERANCE), (True, PERIODIC_TOLERANCE)):
            model, series = random_instance(seed + index, run.validate_gages, run.validate_times, periodic)
            posterior = oracle_posterior(model, series)
            deviations = compare_with_oracle(smooth_series(model, series), posterior)
            passed = max(deviations.values()) <= tolerance
            results.append({
                "seed": seed + index,
                "periodic": periodic,
                "state_dim": model.dim,
                "n_times": len(series),
                "mean_deviation": deviations["mean"],
                "variance_deviation": deviations["variance"],
                "tolerance": tolerance,
                "passed": passed
            })
            if not passed:
                log.warning(f"Instance {seed + index} (periodic: {periodic}) deviates by {deviations}.")

    os.makedirs(run.out, exist_ok=True)
    write_json(os.path.join(run.out, "validate.json"), {
        "instances": results,
        "passed": all(result["passed"] for result in results),
        "note": "periodic kernels are realized by a truncated harmonic expansion"
    })
    _write_manifest(run.out, [ "validate.json" ], config, "validate", seed)
    return EXIT_OK


def _scaling_study(config: RunConfig, seed: int) -> Dict[str, object]:
    model, _ = random_instance(seed, n_times=2)
    rng = np.random.default_rng(seed)

    sizes = list(config.run.bench_sizes)
    seconds = []
    evidences = []
    for size in sizes:
        times = np.arange(size) * 0.01
        levels = np.column_stack([ rng.uniform(0.0, 1.0, size), np.zeros(size) ])
        strains, _ = simulate_prior(model, times, levels, rng)
        series = ObservationSeries(times, levels, strains)

        start = time.perf_counter()
        traj = smooth_series(model, series)
        seconds.append(time.perf_counter() - start)
        evidences.append(traj.log_evidence)

    return {
        "sizes": sizes,
        "seconds": seconds,
        "ratios": [ later / earlier for earlier, later in zip(seconds, seconds[1:]) ],
        "per_step_seconds": [ elapsed / size for elapsed, size in zip(seconds, sizes) ],
        "state_dim": model.dim,
        "log_evidence": evidences
    }


def _at_scale(config: RunConfig, seed: int) -> Dict[str, object]:
    gate = config.model.gate
    if gate is None:
        raise ConfigError("model.gate", "the at-scale benchmark needs the gate fixture")
    problem = build_gate_problem(gate._replace(seed=seed))
    model = problem.model
    assert problem.series is not None

    storage = select_storage(model.dim, len(problem.series), config.run.memory_budget_mb, config.run.out)
    start = time.perf_counter()
    traj = smooth_series(model, problem.series, storage)
    elapsed = time.perf_counter() - start
    evidence = traj.log_evidence
    traj.close()

    return {
        "seconds": elapsed,
        "n_times": len(problem.series),
        "state_dim": model.dim,
        "per_step_seconds": elapsed / len(problem.series),
        "log_evidence": evidence,
        "accounting": model_accounting(model, len(problem.series)).to_json()
    }


def cmd_bench(config: RunConfig, at_scale: bool = False) -> int:
    """
    Time the smoother on a growing number of observation times at fixed state dimension, or run the
    synthetic gate-scale problem.

    Args:
        config: The run configuration.
        at_scale: Whether to run the gate-scale problem instead of the scaling study.

    Returns:
        The exit code.
    """

    run = config.run
    if at_scale:
        gate = config.model.gate
        seed = _seed(config, 0 if gate is None else gate.seed)
        report = _at_scale(config, seed)
    else:
        seed = _seed(config, 0)
        report = _scaling_study(config, seed)

    os.makedirs(run.out, exist_ok=True)
    write_json(os.path.join(run.out, "bench.json"), report)
    _write_manifest(run.out, [ "bench.json" ], config, "bench", seed)
    return EXIT_OK


def _temporal_kernels(config: RunConfig) -> List[Tuple[str, Kernel]]:
    kernels: List[Tuple[str, Kernel]] = []
    gate = config.model.gate
    beam = config.model.beam

    if config.error is not None:
        kernels += [
            (f"thermal[{index}]", kernel_from_config(kernel, config.base_dir, path=f"error.thermal.kernels[{index}]"))
            for index, kernel in enumerate(config.error.thermal.kernels)
        ]
    elif gate is not None:
        kernels += [ (f"thermal[{index}]", kernel) for index, kernel in enumerate(gate_thermal_model(gate).kernels) ]
    elif beam is not None:
        kernels.append(("thermal", beam_error_model(beam).thermal.kernels[0]))

    if config.prior is not None:
        for side, side_prior in ((Side.QUOIN, config.prior.quoin), (Side.MITER, config.prior.miter)):
            path = f"prior.{side.value}.time_kernel"
            kernels.append((path, kernel_from_config(side_prior.time_kernel, config.base_dir, path=path)))
    elif gate is not None:
        kernels.append(("loads", Matern(1.5, gate.time_length, 1.0)))

    unique: Dict[str, Tuple[str, Kernel]] = {}
    for name, kernel in kernels:
        unique.setdefault(repr(kernel), (name, kernel))
    return list(unique.values())


def cmd_kernel2sde(config: RunConfig) -> int:
    """
    Write a text report of the state space realizations of the configured temporal kernels: dimensions,
    eigenvalues of the drift and the covariance reproduction error over a range of lags.

    Args:
        config: The run configuration.

    Returns:
        The exit code.
    """

    lines = []
    for name, kernel in _temporal_kernels(config):
        sde = to_sde(kernel)
        exact = kernel.matrix(REPRODUCTION_LAGS, [ 0.0 ])[:, 0]
        realized = sde.covariance(REPRODUCTION_LAGS)[:, 0, 0]
        error = float(np.max(np.abs(realized - exact))) / max(float(exact[0]), np.finfo(np.float64).tiny)
        eigenvalues = np.linalg.eigvals(sde.F)

        lines.append(f"{name}: {kernel!r}")
        lines.append(f"  state dimension: {sde.dim}")
        lines.append(f"  drift eigenvalues: {', '.join(f'{value:.6g}' for value in np.sort_complex(eigenvalues))}")
        lines.append(f"  max relative reproduction error over lags 0 to {REPRODUCTION_LAGS[-1]:g}: {error:.3e}")

    out = config.run.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "kernel2sde.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    _write_manifest(out, [ "kernel2sde.txt" ], config, "kernel2sde", None)
    return EXIT_OK


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """
    Args:
        argv: The arguments, ``sys.argv[1:]`` by default.

    Returns:
        The parsed arguments.
    """

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="the run configuration, the beam fixture by default")
    common.add_argument("--out", metavar="DIR", help="the output directory")
    common.add_argument("--seed", type=int, metavar="N", help="the random seed")
    common.add_argument("--memory-budget", type=float, metavar="MB", help="the trajectory memory budget")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more log output, repeatable")
    common.add_argument("-q", "--quiet", action="store_true", help="only log errors")

    parser = argparse.ArgumentParser(
        prog="gatemon",
        description="Linear-time Gaussian process inference of boundary loads, thermal strain and gage bias."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__['full']}")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("simulate", parents=[ common ], help="generate synthetic beam observations")
    commands.add_parser("condense", parents=[ common ], help="write the reduced elastic model")
    fit = commands.add_parser("fit", parents=[ common ], help="filter, smooth and export the posterior")
    fit.add_argument("--observations", metavar="PATH", help="the observation CSV")
    fit.add_argument("--filter-only", action="store_true", help="skip the backward pass")
    commands.add_parser("validate", parents=[ common ], help="compare against dense conditioning")
    bench = commands.add_parser("bench", parents=[ common ], help="time the smoother")
    bench.add_argument("--at-scale", action="store_true", help="run the synthetic gate-scale problem")
    commands.add_parser("kernel2sde", parents=[ common ], help="report the state space realizations")

    return parser.parse_args(argv)


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    run = config.run
    if args.out is not None:
        run = run._replace(out=args.out)
    if args.seed is not None:
        run = run._replace(seed=args.seed)
    if args.memory_budget is not None:
        if not args.memory_budget > 0:
            raise ConfigError("--memory-budget", "must be strictly positive")
        run = run._replace(memory_budget_mb=args.memory_budget)
    return config._replace(run=run)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the ``gatemon`` command.

    Args:
        argv: The arguments, ``sys.argv[1:]`` by default.

    Returns:
        The exit code: 0 on success, 2 on configuration or input errors, 3 on guard or numerical errors.
    """

    args = parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    log = logging.getLogger(LOG_TAG)

    commands: Dict[str, Callable[[RunConfig], int]] = {
        "simulate": cmd_simulate,
        "condense": cmd_condense,
        "fit": lambda config: cmd_fit(config, args.observations, args.filter_only),
        "validate": cmd_validate,
        "bench": lambda config: cmd_bench(config, args.at_scale),
        "kernel2sde": cmd_kernel2sde
    }

    try:
        config = load_run_config(args.config) if args.config is not None else parse_run_config({
            "model": { "beam": {} }
        })
        return commands[args.command](_apply_overrides(config, args))
    except GatemonException as e:
        code = exit_code(e)
        log.error(f"{type(e).__name__}: {e}")
        return code
