import numpy as np
import pytest

from gatemon.assembly import (
    AssemblyConstructionError,
    AssemblyDomainError,
    ErrorModel,
    PairRule,
    TimeTable,
    build_joint_model,
    loads_from_state,
    model_accounting,
    observation_operator,
    select_pairs,
    simulate_prior
)
from gatemon.kernels import CoregionalModel, Matern
from gatemon.oracle import random_instance
from gatemon.types import Quantity, Side


__all__ = [  # pylint: disable=unused-variable
    "test_block_layout",
    "test_components_add_up",
    "test_construction_errors",
    "test_elastic_operator_from_loads",
    "test_load_queries",
    "test_model_accounting",
    "test_select_pairs",
    "test_simulate_prior",
    "test_thermal_mean"
]


def test_block_layout() -> None:
    """
    Test the state layout of the joint model.
    """

    model, _ = random_instance(0, gages=3)

    assert model.state_slice("thermal") == slice(0, 6)
    assert model.state_slice("bias") == slice(6, 9)
    assert model.latent_slice("thermal") == slice(0, 3)
    assert model.latent_slice("bias") == slice(3, 6)

    quoin = model.state_slice(Side.QUOIN.value)
    miter = model.state_slice(Side.MITER.value)
    assert quoin.start == 9
    assert quoin.stop - quoin.start == 2 * len(model.pairs[Side.QUOIN])
    assert miter.start == quoin.stop
    assert miter.stop == model.dim

    assert model.latent_dim == 6 + len(model.pairs[Side.QUOIN]) + len(model.pairs[Side.MITER])
    assert model.latent_rows.shape == (model.latent_dim, model.dim)
    assert model.gage_count == 3


def test_select_pairs() -> None:
    """
    Test the selection of (spatial, height) mode pairs.
    """

    model, _ = random_instance(1)
    prior = model.priors[Side.QUOIN]

    everything = select_pairs(prior.spatial_basis, prior.height_basis, PairRule.ALL)
    assert len(everything) == prior.spatial_basis.size * prior.height_basis.size

    energetic = select_pairs(prior.spatial_basis, prior.height_basis, PairRule.PRODUCT_ENERGY)
    assert [ (pair.spatial, pair.height) for pair in energetic ] == [ (0, 0), (0, 1), (1, 0) ]
    assert energetic[0].energy == pytest.approx(
        prior.spatial_basis.eigenvalues[0] * prior.height_basis.eigenvalues[0]
    )
    assert model.pairs[Side.QUOIN] == energetic

    assert select_pairs(prior.spatial_basis.truncated(0), prior.height_basis) == ()


def test_components_add_up() -> None:
    """
    Test that the elastic, thermal and bias components add up to the predicted strain.
    """

    model, series = random_instance(2)
    for index in (0, 7, 19):
        t = float(series.times[index])
        levels = series.levels[index]

        total_offset, total_operator = observation_operator(model, t, levels)
        offsets = []
        operators = []
        for quantity in (Quantity.ELASTIC, Quantity.THERMAL, Quantity.BIAS):
            offset, operator = model.component(quantity, t, levels)
            offsets.append(offset)
            operators.append(operator)

        np.testing.assert_allclose(sum(offsets), total_offset, atol=1e-14)
        np.testing.assert_allclose(sum(operators), total_operator, atol=1e-14)
        assert total_operator.shape == (model.gage_count, model.dim)

    with pytest.raises(AssemblyDomainError):
        model.component(Quantity.LOADS, 0.0, (0.5, 0.0))


def test_elastic_operator_from_loads() -> None:
    """
    Test that the elastic strain map equals the solve operator applied to the lumped traction map.
    """

    model, series = random_instance(3)
    reduced = model.reduced
    levels = series.levels[4]

    expected_offset = reduced.Gr @ reduced.hydro_load(levels)
    expected_operator = np.zeros((model.gage_count, model.dim))
    for side in (Side.QUOIN, Side.MITER):
        offset, operator = model.load_operator(side, levels)
        columns = reduced.Gr[:, reduced.side_indices(side)] * reduced.tributary(side)[np.newaxis, :]
        expected_offset = expected_offset + columns @ offset
        expected_operator += columns @ operator

    offset, operator = model.component(Quantity.ELASTIC, float(series.times[4]), levels)
    np.testing.assert_allclose(offset, expected_offset, atol=1e-12)
    np.testing.assert_allclose(operator, expected_operator, atol=1e-12)


def test_load_queries() -> None:
    """
    Test load marginals at boundary DOFs and between them.
    """

    model, series = random_instance(4)
    levels = series.levels[0]
    mean = model.sde.m0
    cov = model.sde.P0

    at_dofs = loads_from_state(model, mean, cov, levels, Side.MITER)
    assert at_dofs.mean.shape == (6,)
    assert np.all(at_dofs.std > 0)

    arc = model.reduced.arc_lengths(Side.MITER)
    between = loads_from_state(model, mean, cov, levels, Side.MITER, 0.5 * (arc[1:] + arc[:-1]))
    assert between.mean.shape == (5,)
    np.testing.assert_allclose(between.mean, 0.5 * (at_dofs.mean[1:] + at_dofs.mean[:-1]))

    with pytest.raises(AssemblyDomainError):
        loads_from_state(model, mean, cov, levels, Side.GAGE_REGION)


def test_construction_errors() -> None:
    """
    Test that inconsistent parts are rejected.
    """

    model, _ = random_instance(5, gages=2)
    quoin = model.priors[Side.QUOIN]
    miter = model.priors[Side.MITER]
    error = model.error

    thermal = CoregionalModel.shared(np.eye(3), Matern(1.5, 1.0, 1.0))
    with pytest.raises(AssemblyConstructionError):
        build_joint_model(model.reduced, quoin, miter, error._replace(thermal=thermal))
    with pytest.raises(AssemblyConstructionError):
        build_joint_model(model.reduced, quoin, miter, error._replace(noise_var=np.array([ 0.1, 0.0 ])))
    with pytest.raises(AssemblyConstructionError):
        build_joint_model(model.reduced, quoin, miter, error._replace(bias_cov=np.eye(3)))
    with pytest.raises(AssemblyConstructionError):
        build_joint_model(model.reduced, miter, quoin, error)


def test_thermal_mean() -> None:
    """
    Test that a tabulated thermal mean shifts the thermal and predicted strain only.
    """

    model, series = random_instance(6, gages=2)
    table = TimeTable(np.array([ 0.0, 10.0 ]), np.array([ [ 0.0, 1.0 ], [ 10.0, 1.0 ] ]))
    error = ErrorModel(model.error.thermal, model.error.bias_cov, model.error.noise_var, table)
    shifted = build_joint_model(model.reduced, model.priors[Side.QUOIN], model.priors[Side.MITER], error)

    levels = series.levels[0]
    np.testing.assert_allclose(shifted.thermal_mean(5.0), [ 5.0, 1.0 ])
    np.testing.assert_allclose(shifted.thermal_mean(20.0), [ 10.0, 1.0 ])

    base_offset, _ = observation_operator(model, 5.0, levels)
    offset, _ = observation_operator(shifted, 5.0, levels)
    np.testing.assert_allclose(offset - base_offset, [ 5.0, 1.0 ])
    bias_offset, _ = shifted.component(Quantity.BIAS, 5.0, levels)
    assert not bias_offset.any()


def test_simulate_prior() -> None:
    """
    Test that simulated strains follow the observation operator of the simulated states.
    """

    model, series = random_instance(7)
    rng = np.random.default_rng(7)
    strains, states = simulate_prior(model, series.times, series.levels, rng, noise=False)
    assert strains.shape == (len(series), model.gage_count)
    assert states.shape == (len(series), model.dim)

    for index in (0, 13):
        offset, operator = observation_operator(model, float(series.times[index]), series.levels[index])
        np.testing.assert_allclose(strains[index], offset + operator @ states[index], atol=1e-12)

    bias = model.state_slice("bias")
    np.testing.assert_array_equal(states[0, bias], states[-1, bias])

    with pytest.raises(ValueError):
        simulate_prior(model, series.times[::-1], series.levels, rng)


def test_model_accounting() -> None:
    """
    Test the parameter count report.
    """

    model, _ = random_instance(8, gages=2)
    report = model_accounting(model, 2200)

    assert report.state_dim == model.dim
    assert report.full_parameters == 2200 * (12 + 2)
    assert report.reduced_parameters == 2200 * (2 + 2 + 2)
    assert report.bias_parameters == 2
    assert report.mode_pairs == { "quoin": 3, "miter": 3 }
    assert sum(report.block_dims.values()) == model.dim
    assert set(report.to_json()) == set(report._fields)
