from .version import __version__
from .project import project

from .assembly import (
    AssemblyException,
    AssemblyConstructionError,
    AssemblyDomainError,

    ErrorModel,
    JointModel,
    LoadPrior,
    Marginals,
    ModelAccounting,
    PairRule,
    TimeTable,
    build_joint_model,
    loads_from_state,
    model_accounting,
    observation_operator,
    simulate_prior
)
from .bundles import (
    BundleException,
    MalformedInput,

    load_kl_basis,
    load_reduced_model,
    save_kl_basis,
    save_reduced_model
)
from .condense import (
    CondensationException,
    ExtrapolationError,
    FactorizationFailed,
    ReductionDomainError,

    DofInfo,
    LevelTable,
    ReducedElasticModel,
    reduced_strain,
    schur_reduce
)
from .config import ConfigError, ConfigException, RunConfig, load_run_config
from .kernels import (
    KernelException,
    KernelDomainError,
    CoregionalModelError,

    Constant,
    CoregionalModel,
    Kernel,
    Matern,
    MeanScaled,
    Periodic,
    Product,
    ScaleTable,
    SquaredExp,
    Sum,
    WhiteNoise,
    kernel_from_config
)
from .klreduce import (
    KlException,
    DegenerateMode,
    EigensolverFailed,
    InvalidQuadrature,

    KlBasis,
    kl_interpolate,
    nystrom_eig,
    truncate_energy
)
from .oracle import OracleException, DataCovarianceSingular, GuardExceeded, oracle_posterior
from .simbeam import (
    SimulationException,
    DegenerateElement,
    SignalCoverage,

    BeamConfig,
    GateConfig,
    build_beam_problem,
    build_gate_problem,
    generate_synthetic
)
from .smoother import (
    SmootherException,
    GageMismatch,
    InnovationSingular,
    MissingLevels,
    NonIncreasingTimes,
    TimeNotObserved,
    UnknownQuantity,

    KalmanSmoother,
    ObservationSeries,
    PosteriorTrajectory,
    extract_posterior,
    kalman_filter,
    rts_smooth,
    smooth_series
)
from .statespace import (
    StateSpaceException,
    ConstructionError,
    DiscretizationError,
    NotRealizable,

    LtiSde,
    discretize,
    matern_to_sde,
    periodic_to_sde,
    product_sde,
    sum_sde,
    to_sde
)
from .storage import DiskStorage, InMemoryStorage, StorageException, TrajectoryStorage
from .types import GatemonException, GaussianState, JSONType, Quantity, Side, StateKind, StrainUnit

# Fun:
# https://github.com/PyCQA/pylint/issues/6006
# https://github.com/python/mypy/issues/10198
__all__ = [  # pylint: disable=unused-variable
    # .version
    "__version__",

    # .project
    "project",

    # .assembly
    "AssemblyException",
    "AssemblyConstructionError",
    "AssemblyDomainError",

    "ErrorModel",
    "JointModel",
    "LoadPrior",
    "Marginals",
    "ModelAccounting",
    "PairRule",
    "TimeTable",
    "build_joint_model",
    "loads_from_state",
    "model_accounting",
    "observation_operator",
    "simulate_prior",

    # .bundles
    "BundleException",
    "MalformedInput",
    "load_kl_basis",
    "load_reduced_model",
    "save_kl_basis",
    "save_reduced_model",

    # .condense
    "CondensationException",
    "ExtrapolationError",
    "FactorizationFailed",
    "ReductionDomainError",

    "DofInfo",
    "LevelTable",
    "ReducedElasticModel",
    "reduced_strain",
    "schur_reduce",

    # .config
    "ConfigError",
    "ConfigException",
    "RunConfig",
    "load_run_config",

    # .kernels
    "KernelException",
    "KernelDomainError",
    "CoregionalModelError",

    "Constant",
    "CoregionalModel",
    "Kernel",
    "Matern",
    "MeanScaled",
    "Periodic",
    "Product",
    "ScaleTable",
    "SquaredExp",
    "Sum",
    "WhiteNoise",
    "kernel_from_config",

    # .klreduce
    "KlException",
    "DegenerateMode",
    "EigensolverFailed",
    "InvalidQuadrature",

    "KlBasis",
    "kl_interpolate",
    "nystrom_eig",
    "truncate_energy",

    # .oracle
    "OracleException",
    "DataCovarianceSingular",
    "GuardExceeded",
    "oracle_posterior",

    # .simbeam
    "SimulationException",
    "DegenerateElement",
    "SignalCoverage",

    "BeamConfig",
    "GateConfig",
    "build_beam_problem",
    "build_gate_problem",
    "generate_synthetic",

    # .smoother
    "SmootherException",
    "GageMismatch",
    "InnovationSingular",
    "MissingLevels",
    "NonIncreasingTimes",
    "TimeNotObserved",
    "UnknownQuantity",

    "KalmanSmoother",
    "ObservationSeries",
    "PosteriorTrajectory",
    "extract_posterior",
    "kalman_filter",
    "rts_smooth",
    "smooth_series",

    # .statespace
    "StateSpaceException",
    "ConstructionError",
    "DiscretizationError",
    "NotRealizable",

    "LtiSde",
    "discretize",
    "matern_to_sde",
    "periodic_to_sde",
    "product_sde",
    "sum_sde",
    "to_sde",

    # .storage
    "DiskStorage",
    "InMemoryStorage",
    "StorageException",
    "TrajectoryStorage",

    # .types
    "GatemonException",
    "GaussianState",
    "JSONType",
    "Quantity",
    "Side",
    "StateKind",
    "StrainUnit"
]
