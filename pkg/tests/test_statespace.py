import math

import numpy as np
import pytest

from gatemon.kernels import Constant, Matern, MeanScaled, Periodic, Product, ScaleTable, SquaredExp, Sum, WhiteNoise
from gatemon.statespace import (
    ConstructionError,
    DiscretizationError,
    LtiSde,
    NotRealizable,
    TransitionCache,
    constant_sde,
    default_periodic_order,
    discretize,
    matern_to_sde,
    periodic_to_sde,
    product_sde,
    sum_sde,
    to_sde
)


__all__ = [  # pylint: disable=unused-variable
    "test_constant_sde",
    "test_discretize_composition",
    "test_discretize_errors",
    "test_discretize_ou",
    "test_discretize_psd",
    "test_matern_covariance",
    "test_periodic_covariance",
    "test_periodic_order",
    "test_product_covariance",
    "test_stationarity",
    "test_sum_covariance",
    "test_to_sde",
    "test_transition_cache"
]


def scalar_covariance(sde: LtiSde, taus: np.ndarray) -> np.ndarray:
    return sde.covariance(taus)[:, 0, 0]


def test_matern_covariance() -> None:
    """
    Test that the Matérn realizations reproduce their kernels.
    """

    taus = np.linspace(0.0, 5.0, 51)
    for nu in Matern.SUPPORTED_NU:
        kernel = Matern(nu, 0.7, 1.8)
        sde = matern_to_sde(nu, 0.7, 1.8)
        assert sde.dim == int(nu + 0.5)
        assert sde.lyapunov_residual() <= 1e-10
        expected = np.array([ kernel.eval(0.0, tau) for tau in taus ])
        np.testing.assert_allclose(scalar_covariance(sde, taus), expected, rtol=1e-8, atol=1e-12)

    with pytest.raises(ConstructionError):
        matern_to_sde(3.5, 1.0, 1.0)


def test_periodic_order() -> None:
    """
    Test the automatic choice of the number of harmonics.
    """

    assert default_periodic_order(1.0) <= 12
    assert default_periodic_order(0.3) == 12
    assert default_periodic_order(2.0) < default_periodic_order(1.0)
    assert periodic_to_sde(1.0, 1.0, 1.0, order=7).dim == 15

    with pytest.raises(ConstructionError):
        periodic_to_sde(1.0, 1.0, 1.0, order=0)


def test_periodic_covariance() -> None:
    """
    Test the truncated harmonic expansion of the periodic kernel.
    """

    kernel = Periodic(1.0, 1.0, 2.0)
    sde = periodic_to_sde(1.0, 1.0, 2.0, order=7)
    assert not sde.diffusion().any()

    taus = np.linspace(0.0, 3.0, 301)
    expected = np.array([ kernel.eval(0.0, tau) for tau in taus ])
    assert np.max(np.abs(scalar_covariance(sde, taus) - expected)) <= 1e-5 * 2.0


def test_product_covariance() -> None:
    """
    Test the quasi-periodic product realization.
    """

    periodic = Periodic(1.0, 1.0, 1.0)
    matern = Matern(1.5, 2.0, 1.5)
    sde = product_sde(periodic_to_sde(1.0, 1.0, 1.0, order=7), matern_to_sde(1.5, 2.0, 1.5))
    assert sde.dim == 15 * 2
    assert sde.lyapunov_residual() <= 1e-10

    taus = np.linspace(0.0, 3.0, 121)
    expected = np.array([ periodic.eval(0.0, tau) * matern.eval(0.0, tau) for tau in taus ])
    assert np.max(np.abs(scalar_covariance(sde, taus) - expected)) <= 2e-5 * 1.5

    with pytest.raises(ConstructionError):
        product_sde(matern_to_sde(1.5, 1.0, 1.0), matern_to_sde(1.5, 1.0, 1.0))


def test_sum_covariance() -> None:
    """
    Test that the sum of independent realizations adds their covariances.
    """

    first = matern_to_sde(0.5, 1.0, 2.0)
    second = matern_to_sde(0.5, 3.0, 0.5)
    sde = sum_sde([ first, second ])
    assert sde.dim == 2
    assert scalar_covariance(sde, np.zeros(1))[0] == pytest.approx(2.5)

    taus = np.linspace(0.0, 4.0, 9)
    np.testing.assert_allclose(
        scalar_covariance(sde, taus),
        2.0 * np.exp(-taus) + 0.5 * np.exp(-taus / 3.0),
        rtol=1e-10
    )

    weighted = sum_sde([ first, second ], [ 2.0, 1.0 ])
    assert scalar_covariance(weighted, np.zeros(1))[0] == pytest.approx(8.5)

    with pytest.raises(ConstructionError):
        sum_sde([])


def test_constant_sde() -> None:
    """
    Test that static variables neither drift nor diffuse.
    """

    sde = constant_sde(1e-2 * np.eye(3))
    np.testing.assert_array_equal(sde.P0, 1e-2 * np.eye(3))
    np.testing.assert_array_equal(sde.H, np.eye(3))
    assert sde.output_dim == 3

    transition = discretize(sde, 1.0)
    np.testing.assert_array_equal(transition.Fbar, np.eye(3))
    np.testing.assert_array_equal(transition.Qbar, np.zeros((3, 3)))


def test_stationarity() -> None:
    """
    Test that the stationary covariance is preserved by every transition.
    """

    sdes = [
        matern_to_sde(1.5, 0.4, 2.0),
        matern_to_sde(2.5, 1.3, 0.5),
        product_sde(periodic_to_sde(1.0, 0.8, 1.0), matern_to_sde(2.5, 0.8, 0.5))
    ]
    for sde in sdes:
        for dt in (1e-3, 0.1, 2.0, 50.0):
            transition = discretize(sde, dt)
            propagated = transition.Fbar @ sde.P0 @ transition.Fbar.T + transition.Qbar
            scale = float(np.max(np.abs(sde.P0)))
            assert np.max(np.abs(propagated - sde.P0)) <= 1e-10 * scale


def test_discretize_ou() -> None:
    """
    Test the closed form transition of the Ornstein-Uhlenbeck process.
    """

    sde = matern_to_sde(0.5, 2.0, 3.0)
    for dt in (1e-4, 0.5, 7.0):
        transition = discretize(sde, dt)
        assert transition.Fbar[0, 0] == pytest.approx(math.exp(-dt / 2.0), rel=1e-12)
        assert transition.Qbar[0, 0] == pytest.approx(3.0 * (1.0 - math.exp(-dt)), rel=1e-10)

    zero = discretize(sde, 0.0)
    np.testing.assert_array_equal(zero.Fbar, np.eye(1))
    np.testing.assert_array_equal(zero.Qbar, np.zeros((1, 1)))


def test_discretize_composition() -> None:
    """
    Test that two half steps compose to a full step.
    """

    sde = matern_to_sde(2.5, 0.6, 1.2)
    for dt in (0.05, 1.0, 10.0):
        full = discretize(sde, dt)
        half = discretize(sde, dt / 2.0)
        np.testing.assert_allclose(half.Fbar @ half.Fbar, full.Fbar, atol=1e-10)
        np.testing.assert_allclose(half.Fbar @ half.Qbar @ half.Fbar.T + half.Qbar, full.Qbar, atol=1e-10)


def test_discretize_psd() -> None:
    """
    Test that process noise covariances stay positive semi-definite over many orders of magnitude.
    """

    sdes = [ matern_to_sde(nu, 0.5, 1.0) for nu in Matern.SUPPORTED_NU ]
    for sde in sdes:
        for dt in np.logspace(-6, 3, 19):
            qbar = discretize(sde, float(dt)).Qbar
            np.testing.assert_array_equal(qbar, qbar.T)
            assert np.linalg.eigvalsh(qbar).min() >= -1e-12 * max(1.0, float(np.max(np.abs(qbar))))


def test_discretize_errors() -> None:
    """
    Test that invalid step lengths are rejected.
    """

    sde = matern_to_sde(1.5, 1.0, 1.0)
    with pytest.raises(DiscretizationError):
        discretize(sde, -1.0)
    with pytest.raises(DiscretizationError):
        discretize(sde, float("nan"))
    with pytest.raises(DiscretizationError):
        discretize(sde, float("inf"))


def test_to_sde() -> None:
    """
    Test the realization of kernel expressions.
    """

    assert to_sde(Matern(1.5, 1.0, 1.0)).dim == 2
    assert to_sde(Constant(2.0)).dim == 1
    assert to_sde(Sum([ Matern(0.5, 1.0, 1.0), Matern(2.5, 1.0, 1.0) ])).dim == 4

    scaled = to_sde(Product([ Constant(4.0), Matern(0.5, 1.0, 1.0) ]))
    assert scalar_covariance(scaled, np.zeros(1))[0] == pytest.approx(4.0)

    quasi_periodic = Product([ Periodic(1.0, 1.0, 1.0), Matern(1.5, 2.0, 1.0) ])
    assert to_sde(quasi_periodic).dim == (2 * default_periodic_order(1.0) + 1) * 2

    table = ScaleTable([ 0.0, 1.0 ], [ 1.0, 2.0 ])
    for kernel in (
        SquaredExp(1.0, 1.0),
        WhiteNoise(1.0),
        MeanScaled(Matern(1.5, 1.0, 1.0), table, 0.0),
        Product([ Matern(1.5, 1.0, 1.0), Matern(0.5, 1.0, 1.0) ])
    ):
        with pytest.raises(NotRealizable):
            to_sde(kernel)


def test_transition_cache() -> None:
    """
    Test that step lengths agreeing in their significant digits share one transition.
    """

    blocks = [ matern_to_sde(1.5, 1.0, 1.0), constant_sde(np.eye(2)) ]
    cache = TransitionCache(blocks)

    fbar, qbar = cache.get(1.0 / 1440.0)
    assert fbar.shape == (4, 4)
    assert qbar.shape == (4, 4)
    assert len(cache) == 1

    cache.get(1.0 / 1440.0 + 1e-18)
    assert len(cache) == 1
    cache.get(2.0 / 1440.0)
    assert len(cache) == 2

    expected = discretize(blocks[0], 1.0 / 1440.0)
    np.testing.assert_allclose(fbar.toarray()[:2, :2], expected.Fbar)
    np.testing.assert_array_equal(fbar.toarray()[2:, 2:], np.eye(2))
