import numpy as np
import pytest

from gatemon.kernels import Constant, Matern, MeanScaled, ScaleTable
from gatemon.klreduce import (
    DegenerateMode,
    InvalidQuadrature,
    coordinate_seeds,
    kl_factor_matrix,
    kl_interpolate,
    level_grid_seeds,
    nystrom_eig,
    truncate_energy,
    uniform_seeds
)


__all__ = [  # pylint: disable=unused-variable
    "test_degenerate_mode",
    "test_eigen_equation",
    "test_invalid_quadrature",
    "test_level_grid",
    "test_low_rank_reconstruction",
    "test_seed_interpolation",
    "test_sign_convention",
    "test_truncate_energy",
    "test_uniform_seeds"
]


def matern_basis():
    seeds, weights = uniform_seeds(0.0, 1.0, 33)
    return nystrom_eig(Matern(1.5, 0.3, 2.0), seeds, weights)


def test_eigen_equation() -> None:
    """
    Test that the Nyström pairs solve the discretized integral equation and are orthonormal under the
    quadrature.
    """

    basis = matern_basis()
    gram = basis.kernel.gram(basis.seeds)
    weighted = basis.weights[:, np.newaxis] * basis.eigenvectors

    largest = float(basis.eigenvalues[0])
    np.testing.assert_allclose(gram @ weighted, basis.eigenvectors * basis.eigenvalues, atol=1e-10 * largest)
    np.testing.assert_allclose(basis.eigenvectors.T @ weighted, np.eye(basis.size), atol=1e-10)

    assert np.all(np.diff(basis.eigenvalues) <= 0)
    assert np.all(basis.eigenvalues >= 0)
    assert basis.total_energy == pytest.approx(float(np.sum(basis.eigenvalues)))


def test_seed_interpolation() -> None:
    """
    Test that interpolating an eigenfunction at a seed reproduces its value there.
    """

    basis = truncate_energy(matern_basis(), 0.999)
    values = basis.interpolate(basis.seeds)
    np.testing.assert_allclose(values, basis.eigenvectors, atol=1e-10 * float(np.max(np.abs(basis.eigenvectors))))

    for k in range(basis.size):
        assert kl_interpolate(basis, basis.seeds[5], k) == pytest.approx(basis.eigenvectors[5, k], abs=1e-10)

    with pytest.raises(IndexError):
        kl_interpolate(basis, 0.5, basis.size)


def test_truncate_energy() -> None:
    """
    Test that truncation keeps the fewest leading modes reaching the requested energy.
    """

    basis = matern_basis()
    for fraction in (0.5, 0.9, 0.99):
        truncated = truncate_energy(basis, fraction)
        assert truncated.captured_fraction >= fraction - 1e-12
        assert truncated.requested_fraction == fraction
        assert truncated.total_energy == basis.total_energy
        shorter = truncated.truncated(truncated.size - 1)
        assert shorter.captured_fraction < fraction
        assert truncated.discarded_mass == pytest.approx(basis.total_energy * (1 - truncated.captured_fraction))

    assert truncate_energy(basis, 1.0).size <= basis.size
    with pytest.raises(ValueError):
        truncate_energy(basis, 0.0)
    with pytest.raises(ValueError):
        truncate_energy(basis, 1.5)


def test_low_rank_reconstruction() -> None:
    """
    Test that the factor matrix reconstructs the kernel up to the discarded energy.
    """

    arc = np.linspace(0.0, 20.0, 41)
    table = ScaleTable(arc, 1.0 + np.sin(arc / 4.0) ** 2)
    kernel = MeanScaled(Matern(1.5, 5.0, 2.0), table, 0.5)
    seeds, weights = coordinate_seeds(arc)
    basis = truncate_energy(nystrom_eig(kernel, seeds, weights), 0.9999)

    factor = kl_factor_matrix(basis, arc)
    assert factor.shape == (arc.size, basis.size)
    gram = kernel.gram(arc)
    error = np.abs(factor @ factor.T - gram).max()
    assert error <= 0.05 * np.abs(gram).max()


def test_sign_convention() -> None:
    """
    Test that the first significant entry of every eigenfunction is positive.
    """

    basis = truncate_energy(matern_basis(), 0.99)
    for k in range(basis.size):
        column = basis.eigenvectors[:, k]
        first = int(np.argmax(np.abs(column) > 1e-10 * np.abs(column).max()))
        assert column[first] > 0


def test_degenerate_mode() -> None:
    """
    Test that modes without energy cannot be interpolated.
    """

    seeds, weights = coordinate_seeds(np.linspace(0.0, 1.0, 5))
    basis = nystrom_eig(Constant(3.0), seeds, weights)
    assert basis.eigenvalues[0] == pytest.approx(3.0)
    assert truncate_energy(basis, 1.0).size == 1

    with pytest.raises(DegenerateMode):
        kl_interpolate(basis, 0.5, 1)
    with pytest.raises(DegenerateMode):
        basis.interpolate([ 0.5 ])

    np.testing.assert_allclose(truncate_energy(basis, 1.0).interpolate([ 0.25, 0.75 ]), np.ones((2, 1)))


def test_invalid_quadrature() -> None:
    """
    Test that repeated seeds and non-positive weights are rejected.
    """

    kernel = Matern(1.5, 1.0, 1.0)
    with pytest.raises(InvalidQuadrature):
        nystrom_eig(kernel, [ 0.0, 0.5, 0.5 ], [ 1.0, 1.0, 1.0 ])
    with pytest.raises(InvalidQuadrature):
        nystrom_eig(kernel, [ 0.0, 0.5, 1.0 ], [ 1.0, 0.0, 1.0 ])
    with pytest.raises(InvalidQuadrature):
        nystrom_eig(kernel, [ 0.0, 0.5, 1.0 ], [ 1.0, 1.0 ])


def test_level_grid() -> None:
    """
    Test the tensor grid of water level seeds.
    """

    seeds, weights = level_grid_seeds((340.0, 380.0), (100.0, 380.0), count=5)
    assert seeds.shape == (25, 2)
    assert weights.sum() == pytest.approx(40.0 * 280.0)
    assert seeds[0].tolist() == [ 344.0, 128.0 ]
    assert seeds[1].tolist() == [ 344.0, 184.0 ]

    degenerate, degenerate_weights = level_grid_seeds((0.0, 1.0), (0.0, 0.0), count=9)
    assert degenerate.shape == (9, 2)
    assert np.all(degenerate[:, 1] == 0.0)
    assert degenerate_weights.sum() == pytest.approx(1.0)


def test_uniform_seeds() -> None:
    """
    Test that the seeds are cell midpoints weighted by the cell width.
    """

    seeds, weights = uniform_seeds(0.0, 2.0, 4)
    np.testing.assert_allclose(seeds[:, 0], [ 0.25, 0.75, 1.25, 1.75 ])
    np.testing.assert_allclose(weights, 0.5)

    # The midpoint rule integrates linear functions exactly.
    assert weights @ (3.0 * seeds[:, 0] - 1.0) == pytest.approx(4.0)

    single, single_weights = uniform_seeds(1.0, 3.0, 1)
    assert single.tolist() == [ [ 2.0 ] ]
    assert single_weights.tolist() == [ 2.0 ]

    with pytest.raises(ValueError):
        uniform_seeds(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        uniform_seeds(1.0, 0.0)
