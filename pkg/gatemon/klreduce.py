# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from typing_extensions import Final

from .kernels import Kernel, PointsLike, as_points
from .types import FloatArray, GatemonException


__all__ = [  # pylint: disable=unused-variable
    "DegenerateMode",
    "EigensolverFailed",
    "InvalidQuadrature",
    "KlBasis",
    "KlException",
    "coordinate_seeds",
    "kl_factor_matrix",
    "kl_interpolate",
    "level_grid_seeds",
    "nystrom_eig",
    "truncate_energy",
    "uniform_seeds"
]


LOG_TAG: Final = "gatemon.klreduce"

HEIGHT_SEEDS: Final = 33
DEGENERATE_RATIO: Final = 1e-12
NEGATIVE_RATIO: Final = 1e-12
SIGN_RATIO: Final = 1e-10


class KlException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the klreduce module.
    """


class InvalidQuadrature(KlException):
    """
    Raised by :func:`nystrom_eig` in case the seeds are not distinct or a weight is not positive.
    """


class EigensolverFailed(KlException):
    """
    Raised by :func:`nystrom_eig` in case the symmetric eigensolver does not converge.
    """


class DegenerateMode(KlException):
    """
    Raised by :func:`kl_interpolate` in case the requested mode's eigenvalue is numerically zero.
    """


class KlBasis:
    """
    Nyström eigenpairs of one kernel factor: seeds, quadrature weights, descending eigenvalues and the
    eigenfunctions evaluated at the seeds, plus truncation bookkeeping.
    """

    def __init__(
        self,
        kernel: Kernel,
        seeds: FloatArray,
        weights: FloatArray,
        eigenvalues: FloatArray,
        eigenvectors: FloatArray,
        total_energy: Optional[float] = None,
        requested_fraction: float = 1.0
    ) -> None:
        """
        Args:
            kernel: The decomposed kernel.
            seeds: The seed points, shape ``(M, d)``.
            weights: The positive quadrature weights, length ``M``.
            eigenvalues: The retained eigenvalues, descending and non-negative.
            eigenvectors: The retained eigenfunctions at the seeds, shape ``(M, K)``.
            total_energy: Sum of all non-negative eigenvalues before truncation. Defaults to the sum of the
                given eigenvalues.
            requested_fraction: The energy fraction the truncation was asked for.
        """

        self.__kernel = kernel
        self.__seeds = _frozen(seeds)
        self.__weights = _frozen(weights)
        self.__eigenvalues = _frozen(eigenvalues)
        self.__eigenvectors = _frozen(eigenvectors)
        self.__total_energy = float(np.sum(eigenvalues)) if total_energy is None else float(total_energy)
        self.__requested_fraction = float(requested_fraction)

        if self.__eigenvectors.shape != (self.__seeds.shape[0], self.__eigenvalues.size):
            raise ValueError(
                f"Eigenvector shape {self.__eigenvectors.shape} does not match {self.__seeds.shape[0]} seeds"
                f" and {self.__eigenvalues.size} eigenvalues."
            )

    @property
    def kernel(self) -> Kernel:
        """
        Returns:
            The decomposed kernel.
        """

        return self.__kernel

    @property
    def seeds(self) -> FloatArray:
        """
        Returns:
            The seed points, shape ``(M, d)``.
        """

        return self.__seeds

    @property
    def weights(self) -> FloatArray:
        """
        Returns:
            The quadrature weights.
        """

        return self.__weights

    @property
    def eigenvalues(self) -> FloatArray:
        """
        Returns:
            The retained eigenvalues, descending.
        """

        return self.__eigenvalues

    @property
    def eigenvectors(self) -> FloatArray:
        """
        Returns:
            The retained eigenfunctions evaluated at the seeds, one column per mode.
        """

        return self.__eigenvectors

    @property
    def size(self) -> int:
        """
        Returns:
            The number of retained modes K.
        """

        return int(self.__eigenvalues.size)

    @property
    def total_energy(self) -> float:
        """
        Returns:
            The sum of all eigenvalues of the untruncated decomposition.
        """

        return self.__total_energy

    @property
    def requested_fraction(self) -> float:
        """
        Returns:
            The energy fraction the truncation was asked for, 1 for untruncated bases.
        """

        return self.__requested_fraction

    @property
    def captured_fraction(self) -> float:
        """
        Returns:
            The share of the total energy carried by the retained modes.
        """

        if self.__total_energy <= 0:
            return 1.0
        return float(np.sum(self.__eigenvalues)) / self.__total_energy

    @property
    def discarded_mass(self) -> float:
        """
        Returns:
            The sum of the discarded eigenvalues.
        """

        return max(0.0, self.__total_energy - float(np.sum(self.__eigenvalues)))

    def truncated(self, count: int, requested_fraction: Optional[float] = None) -> KlBasis:
        """
        Args:
            count: Number of leading modes to keep.
            requested_fraction: The energy fraction to record.

        Returns:
            The basis restricted to its leading modes.
        """

        if not 0 <= count <= self.size:
            raise ValueError(f"Cannot keep {count} of {self.size} modes.")

        return KlBasis(
            self.__kernel,
            self.__seeds,
            self.__weights,
            self.__eigenvalues[:count],
            self.__eigenvectors[:, :count],
            self.__total_energy,
            self.__requested_fraction if requested_fraction is None else requested_fraction
        )

    def interpolate(self, points: PointsLike) -> FloatArray:
        """
        Evaluate all retained eigenfunctions at arbitrary inputs through the Nyström interpolation formula.

        Args:
            points: The query points.

        Returns:
            Matrix of shape ``(len(points), K)``.

        Raises:
            DegenerateMode: if a retained mode has a numerically zero eigenvalue.
        """

        if self.size == 0:
            return np.zeros((as_points(points).shape[0], 0))

        threshold = DEGENERATE_RATIO * self.__eigenvalues[0]
        degenerate = np.flatnonzero(self.__eigenvalues <= threshold)
        if degenerate.size > 0:
            raise DegenerateMode(f"Mode {int(degenerate[0])} has a numerically zero eigenvalue.")

        cross = self.__kernel.matrix(points, self.__seeds)
        weighted = self.__weights[:, np.newaxis] * self.__eigenvectors
        return np.asarray((cross @ weighted) / self.__eigenvalues[np.newaxis, :], dtype=np.float64)

    def __repr__(self) -> str:
        return (
            f"KlBasis(seeds={self.__seeds.shape[0]}, modes={self.size},"
            f" captured={self.captured_fraction:.4f})"
        )


def _frozen(array: FloatArray) -> FloatArray:
    result = np.array(array, dtype=np.float64)
    result.flags.writeable = False
    return result


def uniform_seeds(lower: float, upper: float, count: int = HEIGHT_SEEDS) -> Tuple[FloatArray, FloatArray]:
    """
    Midpoints of ``count`` equal cells covering ``[lower, upper]``.

    Args:
        lower: Lower end of the range.
        upper: Upper end of the range.
        count: Number of seeds, at least 1.

    Returns:
        The seeds as a column and the cell widths ``(upper - lower) / count`` as weights. A degenerate range
        yields a single seed with unit weight.
    """

    if upper < lower:
        raise ValueError(f"Invalid range [{lower}, {upper}].")
    if upper == lower:
        return np.array([[ float(lower) ]]), np.ones(1)
    if count < 1:
        raise ValueError(f"At least one seed is needed for the range [{lower}, {upper}].")

    width = (upper - lower) / count
    seeds = (lower + (np.arange(count) + 0.5) * width)[:, np.newaxis]
    return seeds, np.full(count, width)


def level_grid_seeds(
    h_plus_range: Tuple[float, float],
    h_minus_range: Tuple[float, float],
    count: int = HEIGHT_SEEDS
) -> Tuple[FloatArray, FloatArray]:
    """
    Tensor grid of water-level seeds over (h⁺, h⁻).

    Args:
        h_plus_range: Range of the upper pool level.
        h_minus_range: Range of the lower pool level.
        count: Seeds per non-degenerate axis.

    Returns:
        Seeds of shape ``(M, 2)``, h⁺ varying slowest, and the product weights.
    """

    plus, plus_weights = uniform_seeds(*h_plus_range, count)
    minus, minus_weights = uniform_seeds(*h_minus_range, count)

    grid_plus, grid_minus = np.meshgrid(plus[:, 0], minus[:, 0], indexing="ij")
    seeds = np.column_stack([ grid_plus.ravel(), grid_minus.ravel() ])
    weights = np.outer(plus_weights, minus_weights).ravel()
    return seeds, weights


def coordinate_seeds(coordinates: Sequence[float]) -> Tuple[FloatArray, FloatArray]:
    """
    Seeds at given boundary coordinates, equally weighted by the covered span.

    Args:
        coordinates: Distinct one-dimensional coordinates, e.g. arc lengths of boundary DOFs.

    Returns:
        The seeds as a column and the weights ``span / M``, unit weight for a single coordinate.
    """

    seeds = np.asarray(coordinates, dtype=np.float64).reshape(-1, 1)
    if seeds.shape[0] == 0:
        raise ValueError("At least one coordinate is needed.")
    span = float(seeds.max() - seeds.min())
    if span == 0:
        return seeds, np.ones(seeds.shape[0])
    return seeds, np.full(seeds.shape[0], span / seeds.shape[0])


def nystrom_eig(kernel: Kernel, seeds: PointsLike, weights: Sequence[float]) -> KlBasis:
    """
    Nyström discretization of the kernel's integral eigenproblem, solved in symmetric form.

    Args:
        kernel: The kernel factor.
        seeds: Distinct seed points.
        weights: Positive quadrature weights, one per seed.

    Returns:
        The untruncated basis. Eigenvalues are descending with numerical negatives clamped to zero, and the
        first significant entry of every eigenvector is positive.

    Raises:
        InvalidQuadrature: if seeds repeat or a weight is not positive.
        EigensolverFailed: if the eigensolver does not converge.
    """

    points = as_points(seeds)
    weight_array = np.asarray(weights, dtype=np.float64).ravel()

    if weight_array.size != points.shape[0]:
        raise InvalidQuadrature(f"Got {weight_array.size} weights for {points.shape[0]} seeds.")
    if not np.all(np.isfinite(weight_array)) or np.any(weight_array <= 0):
        raise InvalidQuadrature("All quadrature weights must be positive and finite.")
    if np.unique(points, axis=0).shape[0] != points.shape[0]:
        raise InvalidQuadrature("The seeds must be distinct.")

    root = np.sqrt(weight_array)
    symmetric = root[:, np.newaxis] * kernel.gram(points) * root[np.newaxis, :]

    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(symmetric)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverFailed(f"Eigensolver failed for {points.shape[0]} seeds: {e}") from e

    eigenvalues = eigenvalues[::-1]
    eigenvectors = eigenvectors[:, ::-1]

    largest = max(float(eigenvalues[0]), 0.0)
    smallest = float(eigenvalues[-1])
    if smallest < -NEGATIVE_RATIO * largest:
        logging.getLogger(LOG_TAG).warning(
            f"Clamping eigenvalue {smallest:.3e} of a kernel with leading eigenvalue {largest:.3e}."
        )
    eigenvalues = np.maximum(eigenvalues, 0.0)

    functions = eigenvectors / root[:, np.newaxis]
    for column in range(functions.shape[1]):
        magnitudes = np.abs(functions[:, column])
        first = int(np.argmax(magnitudes > SIGN_RATIO * magnitudes.max()))
        if functions[first, column] < 0:
            functions[:, column] *= -1

    logging.getLogger(LOG_TAG).debug(
        f"Nyström basis over {points.shape[0]} seeds, leading eigenvalue {largest:.3e}."
    )

    return KlBasis(kernel, points, weight_array, eigenvalues, functions)


def kl_interpolate(basis: KlBasis, y: PointsLike, k: int) -> float:
    """
    Args:
        basis: The basis.
        y: A single input point.
        k: The mode index.

    Returns:
        ``(1/λ_k)·Σ_m w_m·k(y_m, y)·φ_k(y_m)``.

    Raises:
        DegenerateMode: if ``λ_k`` is at most ``1e-12·λ_1``.
    """

    if not 0 <= k < basis.size:
        raise IndexError(f"Mode {k} out of range for a basis of {basis.size} modes.")

    eigenvalue = float(basis.eigenvalues[k])
    if eigenvalue <= DEGENERATE_RATIO * float(basis.eigenvalues[0]):
        raise DegenerateMode(f"Mode {k} has the numerically zero eigenvalue {eigenvalue:.3e}.")

    cross = basis.kernel.matrix(basis.seeds, np.atleast_1d(np.asarray(y, dtype=np.float64)).reshape(1, -1))
    return float(np.sum(basis.weights * cross[:, 0] * basis.eigenvectors[:, k])) / eigenvalue


def truncate_energy(basis: KlBasis, fraction: float) -> KlBasis:
    """
    Args:
        basis: The basis to truncate.
        fraction: The energy fraction to capture, in ``(0, 1]``.

    Returns:
        The basis restricted to the smallest number of leading modes capturing the fraction. For fraction 1,
        all modes with non-degenerate eigenvalue are kept.
    """

    if not 0 < fraction <= 1:
        raise ValueError(f"The energy fraction must lie in (0, 1], got {fraction}.")

    eigenvalues = basis.eigenvalues
    total = basis.total_energy
    if basis.size == 0 or total <= 0:
        logging.getLogger(LOG_TAG).warning("Truncating a basis without energy keeps no modes.")
        return basis.truncated(0, fraction)

    significant = int(np.count_nonzero(eigenvalues > DEGENERATE_RATIO * eigenvalues[0]))
    if fraction == 1:
        count = significant
    else:
        cumulative = np.cumsum(eigenvalues) / total
        reached = np.flatnonzero(cumulative >= fraction - 1e-12)
        count = int(reached[0]) + 1 if reached.size > 0 else significant
        count = min(count, significant)

    logging.getLogger(LOG_TAG).debug(
        f"Keeping {count} of {basis.size} modes for an energy fraction of {fraction}."
    )

    return basis.truncated(count, fraction)


def kl_factor_matrix(basis: KlBasis, queries: PointsLike) -> FloatArray:
    """
    Args:
        basis: A truncated basis.
        queries: The query points.

    Returns:
        The matrix with entries ``√λ_k·φ_k(query_i)``.

    Raises:
        DegenerateMode: if a retained mode is degenerate.
    """

    return basis.interpolate(queries) * np.sqrt(basis.eigenvalues)[np.newaxis, :]
