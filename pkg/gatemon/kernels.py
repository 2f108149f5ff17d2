# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

from abc import ABC, abstractmethod
import math
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from .types import FloatArray, GatemonException


__all__ = [  # pylint: disable=unused-variable
    "Constant",
    "CoregionalModel",
    "CoregionalModelError",
    "Kernel",
    "KernelDomainError",
    "KernelException",
    "Matern",
    "MeanScaled",
    "Periodic",
    "Product",
    "ScaleTable",
    "SquaredExp",
    "Sum",
    "WhiteNoise",
    "as_points",
    "coregional_cov",
    "gram",
    "kernel_from_config",
    "psd_sqrt"
]


class KernelException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the kernels module.
    """


class KernelDomainError(KernelException):
    """
    Raised by kernel construction and evaluation in case a parameter or an input point is not finite, or an
    input does not belong to the kernel's domain.
    """


class CoregionalModelError(KernelException):
    """
    Raised by :class:`CoregionalModel` in case the marginal covariance is not symmetric positive
    semi-definite.
    """


PointsLike = Union[float, Sequence[float], Sequence[Sequence[float]], FloatArray]


def as_points(points: PointsLike) -> FloatArray:
    """
    Normalize a sequence of input points to a two-dimensional array.

    Args:
        points: A scalar, a sequence of scalars (one-dimensional points) or a sequence of coordinate
            tuples.

    Returns:
        An array of shape ``(number of points, input dimension)``.

    Raises:
        KernelDomainError: if any coordinate is not finite.
    """

    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(-1, 1)
    elif array.ndim != 2:
        raise ValueError(f"Input points must be at most two-dimensional, got shape {array.shape}.")

    if not np.all(np.isfinite(array)):
        raise KernelDomainError("Kernel input points must be finite.")

    return array


def _as_point(point: PointsLike) -> FloatArray:
    return as_points(np.atleast_1d(np.asarray(point, dtype=np.float64)).reshape(1, -1))


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise KernelDomainError(f"Kernel parameter {name} must be finite and strictly positive, got {value}.")
    return value


def _check_variance(value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise KernelDomainError(f"Kernel variance must be finite and non-negative, got {value}.")
    return value


class Kernel(ABC):
    """
    A scalar covariance kernel. Kernels are immutable and all evaluation methods are pure, thus safe to
    use from multiple threads.
    """

    @abstractmethod
    def matrix(self, a: PointsLike, b: PointsLike) -> FloatArray:
        """
        Evaluate the kernel between two sets of points.

        Args:
            a: The first set of points.
            b: The second set of points.

        Returns:
            The cross-covariance matrix of shape ``(len(a), len(b))``.

        Raises:
            KernelDomainError: if an input point is not finite or outside of the kernel's domain.
        """

    @property
    @abstractmethod
    def stationary(self) -> bool:
        """
        Returns:
            Whether the kernel only depends on the distance between its inputs.
        """

    @abstractmethod
    def to_config(self) -> Dict[str, Any]:
        """
        Returns:
            The nested JSON description of this kernel, as accepted by :func:`kernel_from_config`.
        """

    def eval(self, theta: PointsLike, theta_prime: PointsLike) -> float:
        """
        Evaluate the kernel for a single pair of input points.

        Args:
            theta: The first input point, a scalar or a coordinate tuple.
            theta_prime: The second input point.

        Returns:
            The covariance between the two points.

        Raises:
            KernelDomainError: if an input point is not finite or outside of the kernel's domain.
        """

        return float(self.matrix(_as_point(theta), _as_point(theta_prime))[0, 0])

    def gram(self, points: PointsLike) -> FloatArray:
        """
        Args:
            points: A non-empty sequence of input points.

        Returns:
            The exactly symmetric matrix of pairwise covariances, built from its upper triangle.
        """

        points = as_points(points)
        if points.shape[0] == 0:
            raise ValueError("The gram matrix requires at least one point.")

        full = self.matrix(points, points)
        upper = np.triu(full)
        return upper + np.triu(full, 1).T

    def __add__(self, other: Kernel) -> Sum:
        return Sum([ self, other ])

    def __mul__(self, other: Kernel) -> Product:
        return Product([ self, other ])


class StationaryKernel(Kernel):
    """
    A kernel that depends on the Euclidean distance between its inputs only.
    """

    @abstractmethod
    def profile(self, distance: FloatArray) -> FloatArray:
        """
        Args:
            distance: Non-negative distances.

        Returns:
            The kernel values at the given distances.
        """

    @property
    def stationary(self) -> bool:
        return True

    def matrix(self, a: PointsLike, b: PointsLike) -> FloatArray:
        points_a = as_points(a)
        points_b = as_points(b)
        if points_a.shape[1] != points_b.shape[1]:
            raise KernelDomainError(
                f"Input dimensions differ: {points_a.shape[1]} vs. {points_b.shape[1]}."
            )
        return self.profile(cdist(points_a, points_b))


class Matern(StationaryKernel):
    """
    The half-integer Matérn kernels in closed form. Only the smoothness values 1/2, 3/2 and 5/2 are
    supported, as only those admit exact finite-dimensional state-space realizations.
    """

    SUPPORTED_NU = (0.5, 1.5, 2.5)

    def __init__(self, nu: float, length: float, variance: float) -> None:
        """
        Args:
            nu: The smoothness, one of 1/2, 3/2 and 5/2.
            length: The lengthscale.
            variance: The variance, i.e. the kernel value at zero lag.

        Raises:
            KernelDomainError: if a parameter is out of range.
        """

        nu = float(nu)
        if nu not in Matern.SUPPORTED_NU:
            raise KernelDomainError(f"Unsupported Matérn smoothness {nu}; use one of {Matern.SUPPORTED_NU}.")

        self.__nu = nu
        self.__length = _check_positive("length", length)
        self.__variance = _check_variance(variance)

    @property
    def nu(self) -> float:
        """
        Returns:
            The smoothness parameter.
        """

        return self.__nu

    @property
    def length(self) -> float:
        """
        Returns:
            The lengthscale.
        """

        return self.__length

    @property
    def variance(self) -> float:
        """
        Returns:
            The variance.
        """

        return self.__variance

    def profile(self, distance: FloatArray) -> FloatArray:
        scaled = math.sqrt(2 * self.__nu) * distance / self.__length
        if self.__nu == 0.5:
            polynomial = np.ones_like(scaled)
        elif self.__nu == 1.5:
            polynomial = 1 + scaled
        else:
            polynomial = 1 + scaled + scaled ** 2 / 3
        return self.__variance * polynomial * np.exp(-scaled)

    def to_config(self) -> Dict[str, Any]:
        return { "type": "matern", "nu": self.__nu, "length": self.__length, "variance": self.__variance }

    def __repr__(self) -> str:
        return f"Matern(nu={self.__nu}, length={self.__length}, variance={self.__variance})"


class SquaredExp(StationaryKernel):
    """
    The squared-exponential kernel σ²·exp(−τ²/(2L²)). Evaluable, but without an exact state-space form.
    """

    def __init__(self, length: float, variance: float) -> None:
        self.__length = _check_positive("length", length)
        self.__variance = _check_variance(variance)

    @property
    def length(self) -> float:
        """
        Returns:
            The lengthscale.
        """

        return self.__length

    @property
    def variance(self) -> float:
        """
        Returns:
            The variance.
        """

        return self.__variance

    def profile(self, distance: FloatArray) -> FloatArray:
        return self.__variance * np.exp(-0.5 * (distance / self.__length) ** 2)

    def to_config(self) -> Dict[str, Any]:
        return { "type": "squared_exp", "length": self.__length, "variance": self.__variance }

    def __repr__(self) -> str:
        return f"SquaredExp(length={self.__length}, variance={self.__variance})"


class Periodic(StationaryKernel):
    """
    The periodic kernel σ²·exp(−(2/L²)·sin²(πτ/P)).
    """

    def __init__(self, period: float, length: float, variance: float) -> None:
        self.__period = _check_positive("period", period)
        self.__length = _check_positive("length", length)
        self.__variance = _check_variance(variance)

    @property
    def period(self) -> float:
        """
        Returns:
            The period.
        """

        return self.__period

    @property
    def length(self) -> float:
        """
        Returns:
            The lengthscale.
        """

        return self.__length

    @property
    def variance(self) -> float:
        """
        Returns:
            The variance.
        """

        return self.__variance

    def profile(self, distance: FloatArray) -> FloatArray:
        sine = np.sin(math.pi * distance / self.__period)
        return self.__variance * np.exp(-2 * sine ** 2 / self.__length ** 2)

    def to_config(self) -> Dict[str, Any]:
        return {
            "type": "periodic",
            "period": self.__period,
            "length": self.__length,
            "variance": self.__variance
        }

    def __repr__(self) -> str:
        return f"Periodic(period={self.__period}, length={self.__length}, variance={self.__variance})"


class WhiteNoise(StationaryKernel):
    """
    The white noise kernel: σ² for identical inputs, zero otherwise.
    """

    def __init__(self, variance: float) -> None:
        self.__variance = _check_variance(variance)

    @property
    def variance(self) -> float:
        """
        Returns:
            The variance.
        """

        return self.__variance

    def profile(self, distance: FloatArray) -> FloatArray:
        return np.where(distance == 0, self.__variance, 0.0)

    def to_config(self) -> Dict[str, Any]:
        return { "type": "white_noise", "variance": self.__variance }

    def __repr__(self) -> str:
        return f"WhiteNoise(variance={self.__variance})"


class Constant(StationaryKernel):
    """
    The constant kernel σ².
    """

    def __init__(self, variance: float) -> None:
        self.__variance = _check_variance(variance)

    @property
    def variance(self) -> float:
        """
        Returns:
            The variance.
        """

        return self.__variance

    def profile(self, distance: FloatArray) -> FloatArray:
        return np.full_like(distance, self.__variance)

    def to_config(self) -> Dict[str, Any]:
        return { "type": "constant", "variance": self.__variance }

    def __repr__(self) -> str:
        return f"Constant(variance={self.__variance})"


class _Composite(Kernel):
    def __init__(self, terms: Sequence[Kernel]) -> None:
        terms = tuple(terms)
        if len(terms) == 0:
            raise ValueError(f"A {type(self).__name__} kernel requires at least one term.")
        self.__terms = terms

    @property
    def terms(self) -> Tuple[Kernel, ...]:
        """
        Returns:
            The combined kernels.
        """

        return self.__terms

    @property
    def stationary(self) -> bool:
        return all(term.stationary for term in self.__terms)


class Sum(_Composite):
    """
    The sum of one or more kernels.
    """

    def matrix(self, a: PointsLike, b: PointsLike) -> FloatArray:
        result = self.terms[0].matrix(a, b)
        for term in self.terms[1:]:
            result = result + term.matrix(a, b)
        return result

    def to_config(self) -> Dict[str, Any]:
        return { "type": "sum", "terms": [ term.to_config() for term in self.terms ] }

    def __repr__(self) -> str:
        return " + ".join(repr(term) for term in self.terms)


class Product(_Composite):
    """
    The product of one or more kernels.
    """

    def matrix(self, a: PointsLike, b: PointsLike) -> FloatArray:
        result = self.terms[0].matrix(a, b)
        for term in self.terms[1:]:
            result = result * term.matrix(a, b)
        return result

    def to_config(self) -> Dict[str, Any]:
        return { "type": "product", "terms": [ term.to_config() for term in self.terms ] }

    def __repr__(self) -> str:
        return " * ".join(f"({term!r})" for term in self.terms)


class ScaleTable:
    """
    A tabulated scale function x ↦ |μ(x, h̄)| over one-dimensional boundary coordinates, interpolated
    linearly between grid points and held constant beyond the first and last grid point.
    """

    def __init__(self, coordinates: Sequence[float], values: Sequence[float]) -> None:
        """
        Args:
            coordinates: The grid coordinates. Sorted internally.
            values: The (absolute) mean values at the grid coordinates.

        Raises:
            KernelDomainError: if the table is empty, contains non-finite entries or duplicate coordinates.
        """

        coordinates_array = np.asarray(coordinates, dtype=np.float64).ravel()
        values_array = np.abs(np.asarray(values, dtype=np.float64).ravel())

        if coordinates_array.shape != values_array.shape or coordinates_array.size == 0:
            raise KernelDomainError("Scale table coordinates and values must be non-empty and of equal length.")
        if not (np.all(np.isfinite(coordinates_array)) and np.all(np.isfinite(values_array))):
            raise KernelDomainError("Scale table entries must be finite.")

        order = np.argsort(coordinates_array, kind="stable")
        coordinates_array = coordinates_array[order]
        if np.any(np.diff(coordinates_array) == 0):
            raise KernelDomainError("Scale table coordinates must be distinct.")

        self.__coordinates = coordinates_array
        self.__values = values_array[order]
        self.__coordinates.flags.writeable = False
        self.__values.flags.writeable = False

    @property
    def coordinates(self) -> FloatArray:
        """
        Returns:
            The sorted grid coordinates.
        """

        return self.__coordinates

    @property
    def values(self) -> FloatArray:
        """
        Returns:
            The absolute mean values on the grid.
        """

        return self.__values

    def __call__(self, points: PointsLike) -> FloatArray:
        points = as_points(points)
        if points.shape[1] != 1:
            raise KernelDomainError("Scale tables are defined over one-dimensional boundary coordinates.")
        return np.asarray(np.interp(points[:, 0], self.__coordinates, self.__values), dtype=np.float64)

    @staticmethod
    def from_csv(path: str) -> ScaleTable:
        """
        Args:
            path: Path to a CSV file with the columns ``coordinate`` and ``value``.

        Returns:
            The loaded table.
        """

        frame = pd.read_csv(path)
        missing = { "coordinate", "value" } - set(frame.columns)
        if missing:
            raise KernelDomainError(f"Scale table {path} lacks the column(s) {sorted(missing)}.")
        return ScaleTable(frame["coordinate"].to_numpy(), frame["value"].to_numpy())


class MeanScaled(Kernel):
    """
    Non-stationary kernel (|μ(x,h̄)|+β)(|μ(x′,h̄)|+β)·k_base(x,x′), enlarging the variance where the prior
    mean is large while keeping a floor β elsewhere.
    """

    def __init__(self, base: Kernel, scale: ScaleTable, beta: float) -> None:
        """
        Args:
            base: The stationary base kernel.
            scale: The tabulated absolute prior mean at the reference water level.
            beta: The variance floor, non-negative.

        Raises:
            KernelDomainError: if ``beta`` is negative or not finite.
            ValueError: if the base kernel is not stationary.
        """

        if not base.stationary:
            raise ValueError("Mean scaling requires a stationary base kernel.")

        self.__base = base
        self.__scale = scale
        self.__beta = _check_variance(beta)

    @property
    def base(self) -> Kernel:
        """
        Returns:
            The stationary base kernel.
        """

        return self.__base

    @property
    def scale(self) -> ScaleTable:
        """
        Returns:
            The tabulated scale function.
        """

        return self.__scale

    @property
    def beta(self) -> float:
        """
        Returns:
            The variance floor.
        """

        return self.__beta

    @property
    def stationary(self) -> bool:
        return False

    def weights(self, points: PointsLike) -> FloatArray:
        """
        Args:
            points: One-dimensional boundary coordinates.

        Returns:
            The per-point scale factors |μ(x,h̄)|+β.
        """

        return self.__scale(points) + self.__beta

    def matrix(self, a: PointsLike, b: PointsLike) -> FloatArray:
        scale_a = self.weights(a)
        scale_b = self.weights(b)
        return scale_a[:, np.newaxis] * scale_b[np.newaxis, :] * self.__base.matrix(a, b)

    def to_config(self) -> Dict[str, Any]:
        return {
            "type": "mean_scaled",
            "beta": self.__beta,
            "base": self.__base.to_config(),
            "scale_table": {
                "coordinates": self.__scale.coordinates.tolist(),
                "values": self.__scale.values.tolist()
            }
        }

    def __repr__(self) -> str:
        return f"MeanScaled(base={self.__base!r}, beta={self.__beta}, table size={self.__scale.coordinates.size})"


def gram(kernel: Kernel, points: PointsLike) -> FloatArray:
    """
    Args:
        kernel: The kernel to evaluate.
        points: A non-empty sequence of input points.

    Returns:
        The exactly symmetric gram matrix of the kernel over the points.
    """

    return kernel.gram(points)


def _require(config: Dict[str, Any], field: str, path: str) -> Any:
    try:
        return config[field]
    except KeyError:
        raise KernelDomainError(f"Kernel configuration {path} lacks the field '{field}'.") from None


def kernel_from_config(
    config: Dict[str, Any],
    base_dir: Optional[str] = None,
    scale: Optional[ScaleTable] = None,
    path: str = "kernel"
) -> Kernel:
    """
    Build a kernel expression from its nested JSON description.

    Args:
        config: The description, e.g. ``{"type": "matern", "nu": 1.5, "length": 10.0, "variance": 2.0}``.
        base_dir: Directory relative paths of scale tables are resolved against.
        scale: Scale table to use for ``mean_scaled`` kernels that do not name one themselves.
        path: Dotted location of the description, used in error messages.

    Returns:
        The kernel.

    Raises:
        KernelDomainError: if the description is incomplete or invalid.
    """

    kernel_type = _require(config, "type", path)

    if kernel_type == "matern":
        return Matern(
            _require(config, "nu", path),
            _require(config, "length", path),
            _require(config, "variance", path)
        )
    if kernel_type == "squared_exp":
        return SquaredExp(_require(config, "length", path), _require(config, "variance", path))
    if kernel_type == "periodic":
        return Periodic(
            _require(config, "period", path),
            _require(config, "length", path),
            _require(config, "variance", path)
        )
    if kernel_type == "white_noise":
        return WhiteNoise(_require(config, "variance", path))
    if kernel_type == "constant":
        return Constant(_require(config, "variance", path))
    if kernel_type in { "sum", "product" }:
        terms: List[Kernel] = [
            kernel_from_config(term, base_dir, scale, f"{path}.terms[{index}]")
            for index, term in enumerate(_require(config, "terms", path))
        ]
        if len(terms) == 0:
            raise KernelDomainError(f"Kernel configuration {path} has an empty term list.")
        return Sum(terms) if kernel_type == "sum" else Product(terms)
    if kernel_type == "mean_scaled":
        table = config.get("scale_table")
        if isinstance(table, str):
            table_path = table if base_dir is None else os.path.join(base_dir, table)
            scale = ScaleTable.from_csv(table_path)
        elif isinstance(table, dict):
            scale = ScaleTable(table["coordinates"], table["values"])
        elif scale is None:
            raise KernelDomainError(f"Kernel configuration {path} needs a scale table.")
        base = kernel_from_config(_require(config, "base", path), base_dir, None, f"{path}.base")
        return MeanScaled(base, scale, config.get("beta", 0.0))

    raise KernelDomainError(f"Kernel configuration {path} has the unknown type '{kernel_type}'.")


def psd_sqrt(matrix: FloatArray, tolerance: float = 1e-10) -> FloatArray:
    """
    Symmetric positive semi-definite square root, clamping eigenvalues at zero.

    Args:
        matrix: A symmetric PSD matrix.
        tolerance: Eigenvalues below ``-tolerance`` times the largest absolute eigenvalue are rejected.

    Returns:
        The symmetric matrix ``A`` with ``A·A = matrix``.

    Raises:
        CoregionalModelError: if the matrix is not symmetric or has significantly negative eigenvalues.
    """

    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise CoregionalModelError(f"Expected a square matrix, got shape {matrix.shape}.")
    if not np.all(np.isfinite(matrix)):
        raise CoregionalModelError("The matrix contains non-finite entries.")

    scale = max(float(np.max(np.abs(matrix))), np.finfo(np.float64).tiny)
    if np.max(np.abs(matrix - matrix.T)) > 1e-12 * scale:
        raise CoregionalModelError("The matrix is not symmetric.")

    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (matrix + matrix.T))
    largest = max(float(np.max(np.abs(eigenvalues))), np.finfo(np.float64).tiny)
    if eigenvalues.min() < -tolerance * largest:
        raise CoregionalModelError(f"The matrix is not positive semi-definite (eigenvalue {eigenvalues.min()}).")

    root = (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.T
    return np.asarray(0.5 * (root + root.T), dtype=np.float64)


class CoregionalModel:
    """
    Linear model of coregionalization: a vector process ``A·z(t)`` mixing independent scalar processes
    ``z_i`` with the symmetric square root ``A`` of the marginal covariance Σ.
    """

    def __init__(self, marginal_cov: FloatArray, kernels: Sequence[Kernel]) -> None:
        """
        Args:
            marginal_cov: The symmetric PSD marginal covariance Σ.
            kernels: One temporal kernel per component process.

        Raises:
            CoregionalModelError: if Σ is not PSD or the square root does not reproduce it.
            ValueError: if the number of kernels does not match the size of Σ.
        """

        marginal_cov = np.array(marginal_cov, dtype=np.float64, ndmin=2)
        kernels = tuple(kernels)
        if len(kernels) != marginal_cov.shape[0]:
            raise ValueError(f"Expected {marginal_cov.shape[0]} kernels, got {len(kernels)}.")

        sqrt_factor = psd_sqrt(marginal_cov)
        norm = max(float(np.linalg.norm(marginal_cov)), np.finfo(np.float64).tiny)
        if np.linalg.norm(sqrt_factor @ sqrt_factor.T - marginal_cov) > 1e-12 * norm:
            raise CoregionalModelError("The square root factor does not reproduce the marginal covariance.")

        self.__marginal_cov = marginal_cov
        self.__sqrt_factor = sqrt_factor
        self.__kernels = kernels
        self.__shared = all(kernel is kernels[0] for kernel in kernels)
        self.__marginal_cov.flags.writeable = False
        self.__sqrt_factor.flags.writeable = False

    @staticmethod
    def shared(marginal_cov: FloatArray, kernel: Kernel) -> CoregionalModel:
        """
        Args:
            marginal_cov: The marginal covariance Σ.
            kernel: The shared temporal kernel, with unit variance.

        Returns:
            A model whose component processes all follow the same kernel.

        Raises:
            KernelDomainError: if the shared kernel does not evaluate to one at zero lag.
        """

        zero_lag = kernel.eval(0.0, 0.0)
        if abs(zero_lag - 1.0) > 1e-12:
            raise KernelDomainError(f"A shared coregional kernel needs unit variance, got {zero_lag}.")

        size = np.array(marginal_cov, ndmin=2).shape[0]
        return CoregionalModel(marginal_cov, [ kernel ] * size)

    @staticmethod
    def correlation_matrix(sigmas: Sequence[float], rho: float) -> FloatArray:
        """
        Args:
            sigmas: Per-component standard deviations.
            rho: The common correlation coefficient.

        Returns:
            Σ with ``σ_i²`` on the diagonal and ``ρ·σ_i·σ_j`` elsewhere.
        """

        sigma = np.asarray(sigmas, dtype=np.float64)
        if not -1.0 <= rho <= 1.0:
            raise ValueError(f"The correlation coefficient must lie in [-1, 1], got {rho}.")

        covariance = rho * np.outer(sigma, sigma)
        np.fill_diagonal(covariance, sigma ** 2)
        return covariance

    @property
    def marginal_cov(self) -> FloatArray:
        """
        Returns:
            The marginal covariance Σ.
        """

        return self.__marginal_cov

    @property
    def sqrt_factor(self) -> FloatArray:
        """
        Returns:
            The symmetric square root ``A`` of Σ.
        """

        return self.__sqrt_factor

    @property
    def kernels(self) -> Tuple[Kernel, ...]:
        """
        Returns:
            The temporal kernel of every component process.
        """

        return self.__kernels

    @property
    def size(self) -> int:
        """
        Returns:
            The number of output components.
        """

        return len(self.__kernels)

    def scaled(self, factor: float) -> CoregionalModel:
        """
        Args:
            factor: Non-negative factor applied to Σ, e.g. a unit conversion.

        Returns:
            A copy with the marginal covariance multiplied by ``factor``.
        """

        return CoregionalModel(self.__marginal_cov * factor, self.__kernels)

    def covariance(self, t: float, t_prime: float) -> FloatArray:
        """
        Args:
            t: The first time.
            t_prime: The second time.

        Returns:
            The cross-covariance ``A·diag(k_i(t,t′))·Aᵀ`` of the vector process, which reduces to
            ``Σ·k(t,t′)`` for a shared kernel.
        """

        if self.__shared:
            return np.asarray(self.__marginal_cov * self.__kernels[0].eval(t, t_prime), dtype=np.float64)

        values = np.array([ kernel.eval(t, t_prime) for kernel in self.__kernels ])
        return np.asarray((self.__sqrt_factor * values) @ self.__sqrt_factor.T, dtype=np.float64)


def coregional_cov(model: CoregionalModel, t: float, t_prime: float) -> FloatArray:
    """
    Args:
        model: The coregional model.
        t: The first time.
        t_prime: The second time.

    Returns:
        The cross-covariance matrix of the vector process between the two times.
    """

    return model.covariance(t, t_prime)
