# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import logging
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np
import scipy.linalg
from typing_extensions import Final

from .assembly import ErrorModel, JointModel, LoadPrior, build_joint_model, observation_operator, simulate_prior
from .condense import DofInfo, LevelTable, ReducedElasticModel
from .kernels import CoregionalModel, Kernel, Matern, Periodic, Product
from .klreduce import coordinate_seeds, level_grid_seeds, nystrom_eig
from .smoother import ObservationSeries, PosteriorTrajectory
from .types import FloatArray, GatemonException, Side


__all__ = [  # pylint: disable=unused-variable
    "DataCovarianceSingular",
    "DensePosterior",
    "DensePrior",
    "GuardExceeded",
    "OracleException",
    "assemble_dense_prior",
    "compare_with_oracle",
    "dense_condition",
    "observation_system",
    "oracle_posterior",
    "random_instance"
]


LOG_TAG: Final = "gatemon.oracle"

DENSE_GUARD: Final = 5000
JITTER: Final = 1e-10


class OracleException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the oracle module.
    """


class GuardExceeded(OracleException):
    """
    Raised by :func:`assemble_dense_prior` in case the dense problem would exceed the size guard.
    """


class DataCovarianceSingular(OracleException):
    """
    Raised by :func:`dense_condition` in case the marginal covariance of the data is not positive definite.
    """


class DensePrior(NamedTuple):
    # pylint: disable=invalid-name
    """
    The joint Gaussian prior of the latent vector stacked over all observation times, time index varying
    slowest.
    """

    mean: FloatArray
    cov: FloatArray
    times: FloatArray
    latent_dim: int


class DensePosterior(NamedTuple):
    # pylint: disable=invalid-name
    """
    The conditioned joint Gaussian.
    """

    mean: FloatArray
    cov: FloatArray


def _latent_kernels(model: JointModel) -> Sequence[Tuple[slice, Kernel]]:
    entries = []
    thermal = model.latent_slice("thermal")
    for offset, kernel in enumerate(model.error.thermal.kernels):
        index = thermal.start + offset
        entries.append((slice(index, index + 1), kernel))
    for side, prior in model.priors.items():
        block = model.latent_slice(side.value)
        for index in range(block.start, block.stop):
            entries.append((slice(index, index + 1), prior.time_kernel))
    return entries


def assemble_dense_prior(model: JointModel, times: Sequence[float]) -> DensePrior:
    """
    Build the dense prior of the latent vector over all times from kernel evaluations.

    Args:
        model: The joint model.
        times: The observation times.

    Returns:
        The dense prior, jittered by ``1e-10`` times its mean variance.

    Raises:
        GuardExceeded: if the stacked dimension exceeds the guard.
    """

    times_array = np.asarray(times, dtype=np.float64).ravel()
    latent_dim = model.latent_dim
    size = latent_dim * times_array.size
    if size > DENSE_GUARD:
        raise GuardExceeded(f"The dense prior of dimension {size} exceeds the guard of {DENSE_GUARD}.")

    cov = np.zeros((size, size))
    for block, kernel in _latent_kernels(model):
        index = block.start
        cov[index::latent_dim, index::latent_dim] = kernel.matrix(times_array, times_array)

    bias = model.latent_slice("bias")
    bias_cov = np.asarray(model.error.bias_cov, dtype=np.float64)
    bias_rows = (np.arange(times_array.size)[:, np.newaxis] * latent_dim + np.arange(bias.start, bias.stop)).ravel()
    cov[np.ix_(bias_rows, bias_rows)] = np.tile(bias_cov, (times_array.size, times_array.size))

    cov = 0.5 * (cov + cov.T)
    if size > 0:
        cov[np.diag_indices(size)] += JITTER * float(np.mean(np.diag(cov)))

    return DensePrior(np.zeros(size), cov, times_array, latent_dim)


def observation_system(
    model: JointModel,
    prior: DensePrior,
    obs: ObservationSeries
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """
    Args:
        model: The joint model.
        prior: The dense prior over the observation times.
        obs: The observations.

    Returns:
        The stacked observation matrix over the present entries, their noise variances and the observations
        minus their deterministic means.
    """

    latent_dim = prior.latent_dim
    noise_var = np.asarray(model.error.noise_var, dtype=np.float64)
    rows = []
    noise = []
    centered = []
    for index, (t, levels) in enumerate(zip(obs.times, obs.levels)):
        present = obs.mask[index]
        if not present.any():
            continue

        offset, _ = observation_operator(model, float(t), levels)
        block = np.zeros((int(present.sum()), prior.mean.size))
        block[:, index * latent_dim:(index + 1) * latent_dim] = model.loadings(levels)[present]
        rows.append(block)
        noise.append(noise_var[present])
        centered.append(obs.strains[index][present] - offset[present])

    if len(rows) == 0:
        return np.zeros((0, prior.mean.size)), np.zeros(0), np.zeros(0)
    return np.vstack(rows), np.concatenate(noise), np.concatenate(centered)


def dense_condition(
    prior: DensePrior,
    operator: FloatArray,
    noise: FloatArray,
    observations: FloatArray
) -> DensePosterior:
    """
    Condition the dense prior on linear observations with independent Gaussian noise.

    Args:
        prior: The dense prior.
        operator: The observation matrix.
        noise: The noise variances, non-negative.
        observations: The observations, with deterministic means already removed.

    Returns:
        The posterior mean and covariance.

    Raises:
        DataCovarianceSingular: if the marginal data covariance is not positive definite.
    """

    operator = np.asarray(operator, dtype=np.float64)
    if operator.shape[0] == 0:
        return DensePosterior(prior.mean.copy(), prior.cov.copy())

    cross = prior.cov @ operator.T
    data_cov = operator @ cross + np.diag(np.asarray(noise, dtype=np.float64))
    try:
        factor = scipy.linalg.cho_factor(0.5 * (data_cov + data_cov.T))
    except np.linalg.LinAlgError as e:
        raise DataCovarianceSingular(f"Data covariance of size {data_cov.shape[0]} is singular.") from e

    residual = np.asarray(observations, dtype=np.float64) - operator @ prior.mean
    mean = prior.mean + cross @ scipy.linalg.cho_solve(factor, residual)
    cov = prior.cov - cross @ scipy.linalg.cho_solve(factor, cross.T)
    return DensePosterior(mean, 0.5 * (cov + cov.T))


def oracle_posterior(model: JointModel, obs: ObservationSeries) -> DensePosterior:
    """
    Args:
        model: The joint model.
        obs: The observations.

    Returns:
        The dense posterior of the latent vector stacked over all observation times.
    """

    prior = assemble_dense_prior(model, obs.times)
    operator, noise, centered = observation_system(model, prior, obs)

    logging.getLogger(LOG_TAG).debug(
        f"Dense conditioning of dimension {prior.mean.size} on {centered.size} observations."
    )

    return dense_condition(prior, operator, noise, centered)


def compare_with_oracle(traj: PosteriorTrajectory, posterior: DensePosterior) -> Dict[str, float]:
    """
    Args:
        traj: A posterior trajectory.
        posterior: The dense posterior over the same times.

    Returns:
        The maximum deviations of the latent means and marginal variances, relative to the largest oracle
        value of each.
    """

    model = traj.model
    latent_dim = model.latent_dim
    rows = model.latent_rows.toarray()
    oracle_variance = np.diag(posterior.cov)

    mean_deviation = 0.0
    variance_deviation = 0.0
    for index in range(len(traj)):
        state = traj.state(index)
        window = slice(index * latent_dim, (index + 1) * latent_dim)
        mean = rows @ state.mean
        variance = np.einsum("ij,jk,ik->i", rows, state.cov, rows)
        mean_deviation = max(mean_deviation, float(np.max(np.abs(mean - posterior.mean[window]), initial=0.0)))
        variance_deviation = max(
            variance_deviation,
            float(np.max(np.abs(variance - oracle_variance[window]), initial=0.0))
        )

    tiny = np.finfo(np.float64).tiny
    return {
        "mean": mean_deviation / max(float(np.max(np.abs(posterior.mean), initial=0.0)), tiny),
        "variance": variance_deviation / max(float(np.max(oracle_variance, initial=0.0)), tiny)
    }


def random_instance(
    seed: int,
    gages: int = 2,
    n_times: int = 40,
    periodic: bool = False,
    missing: float = 0.1
) -> Tuple[JointModel, ObservationSeries]:
    """
    Draw a small random joint model and an observation series simulated from its prior.

    Args:
        seed: The seed of the random generator.
        gages: The number of gages.
        n_times: The number of observation times.
        periodic: Whether the thermal kernel contains a periodic factor.
        missing: The probability of an individual strain being missing.

    Returns:
        The model and the observations.
    """

    rng = np.random.default_rng(seed)
    dofs_per_side = 6

    dofs = []
    for side in (Side.QUOIN, Side.MITER):
        for position in range(dofs_per_side):
            dofs.append(DofInfo(len(dofs), side, (0.0, float(position))))
    size = len(dofs)

    basis = rng.standard_normal((size, size))
    stiffness = basis @ basis.T + size * np.eye(size)
    strain_map = rng.standard_normal((gages, size)) * 0.1
    reduced = ReducedElasticModel(
        stiffness,
        strain_map,
        np.linalg.solve(stiffness, strain_map.T).T,
        None,
        dofs
    )

    height_seeds, height_weights = level_grid_seeds((0.0, 1.0), (0.0, 0.0), count=9)
    priors = {}
    for side in (Side.QUOIN, Side.MITER):
        seeds, weights = coordinate_seeds(reduced.arc_lengths(side))
        spatial = nystrom_eig(Matern(1.5, 2.0, 1.0), seeds, weights).truncated(2)
        height = nystrom_eig(Matern(2.5, 0.5, 1.0), height_seeds, height_weights).truncated(2)
        mean = LevelTable([ 0.0, 1.0 ], [ 0.0 ], rng.standard_normal((2, 1, dofs_per_side)))
        length = float(rng.uniform(0.2, 1.0))
        priors[side] = LoadPrior(side, mean, spatial, height, Matern(1.5, length, 1.0))

    if periodic:
        thermal_kernel: Kernel = Product([ Periodic(1.0, 1.0, 1.0), Matern(1.5, 2.0, 1.0) ])
    else:
        thermal_kernel = Matern(1.5, float(rng.uniform(0.3, 1.0)), 1.0)
    thermal = CoregionalModel.shared(
        CoregionalModel.correlation_matrix(rng.uniform(0.5, 1.0, gages), 0.5),
        thermal_kernel
    )
    error = ErrorModel(thermal, 0.5 * np.eye(gages), np.full(gages, 0.1))

    model = build_joint_model(reduced, priors[Side.QUOIN], priors[Side.MITER], error)

    times = np.cumsum(rng.uniform(0.02, 0.1, n_times))
    levels = np.column_stack([ rng.uniform(0.0, 1.0, n_times), np.zeros(n_times) ])
    strains, _ = simulate_prior(model, times, levels, rng)
    strains[rng.uniform(size=strains.shape) < missing] = np.nan

    return model, ObservationSeries(times, levels, strains)
