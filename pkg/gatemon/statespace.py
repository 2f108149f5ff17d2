# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import logging
import math
import threading
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.special import comb, ive
from typing_extensions import Final

from .kernels import Constant, Kernel, Matern, Periodic, Product, Sum
from .types import FloatArray, GatemonException


__all__ = [  # pylint: disable=unused-variable
    "ConstructionError",
    "DiscreteTransition",
    "DiscretizationError",
    "LtiSde",
    "NotRealizable",
    "StateSpaceException",
    "TransitionCache",
    "constant_sde",
    "default_periodic_order",
    "discretize",
    "matern_to_sde",
    "periodic_to_sde",
    "product_sde",
    "sum_sde",
    "to_sde"
]


LOG_TAG: Final = "gatemon.statespace"

LYAPUNOV_TOLERANCE: Final = 1e-8
PERIODIC_TOLERANCE: Final = 1e-6
PERIODIC_ORDER_CAP: Final = 12


class StateSpaceException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the statespace module.
    """


class ConstructionError(StateSpaceException):
    """
    Raised by the realization constructors in case their inputs are incompatible or the resulting
    realization violates the Lyapunov or PSD invariants.
    """


class NotRealizable(ConstructionError):
    """
    Raised by :func:`to_sde` in case a kernel expression has no exact finite-dimensional realization.
    """


class DiscretizationError(StateSpaceException):
    """
    Raised by :func:`discretize` in case the step length is negative or not finite.
    """


def _matrix(value: FloatArray, rows: int, cols: int, name: str) -> FloatArray:
    array = np.array(value, dtype=np.float64, ndmin=2)
    if array.shape != (rows, cols):
        raise ConstructionError(f"{name} has shape {array.shape}, expected {(rows, cols)}.")
    if not np.all(np.isfinite(array)):
        raise ConstructionError(f"{name} contains non-finite entries.")
    array.flags.writeable = False
    return array


class LtiSde:
    """
    Realization ``dv = F·v dt + L·dβ``, ``z = H·v`` of a stationary Gaussian process, with white noise
    spectral density Q, stationary covariance P0 and initial mean m0.
    """

    def __init__(
        self,
        F: FloatArray,
        L: FloatArray,
        Q: FloatArray,
        H: FloatArray,
        P0: FloatArray,
        m0: Optional[FloatArray] = None
    ) -> None:
        """
        Args:
            F: The drift matrix.
            L: The noise input matrix.
            Q: The white noise spectral density.
            H: The output rows.
            P0: The stationary state covariance.
            m0: The initial state mean, zero by default.

        Raises:
            ConstructionError: if the shapes are inconsistent, P0 is not symmetric PSD, or the Lyapunov
                residual exceeds its bound.
        """

        # pylint: disable=invalid-name
        F = np.array(F, dtype=np.float64, ndmin=2)
        dim = F.shape[0]
        L = np.array(L, dtype=np.float64, ndmin=2)
        noise_dim = L.shape[1]
        H = np.array(H, dtype=np.float64, ndmin=2)

        self.__F = _matrix(F, dim, dim, "F")
        self.__L = _matrix(L, dim, noise_dim, "L")
        self.__Q = _matrix(Q, noise_dim, noise_dim, "Q")
        self.__H = _matrix(H, H.shape[0], dim, "H")
        self.__P0 = _matrix(P0, dim, dim, "P0")
        self.__m0 = np.zeros(dim) if m0 is None else np.asarray(m0, dtype=np.float64).ravel().copy()
        if self.__m0.shape != (dim,):
            raise ConstructionError(f"m0 has length {self.__m0.size}, expected {dim}.")
        self.__m0.flags.writeable = False

        p0_norm = float(np.linalg.norm(self.__P0))
        if np.max(np.abs(self.__P0 - self.__P0.T), initial=0.0) > 1e-12 * max(1.0, p0_norm):
            raise ConstructionError("P0 is not symmetric.")
        if dim > 0:
            smallest = float(np.linalg.eigvalsh(self.__P0).min())
            if smallest < -1e-10 * max(1.0, p0_norm):
                raise ConstructionError(f"P0 is not positive semi-definite (eigenvalue {smallest}).")

        residual = self.lyapunov_residual()
        if residual > LYAPUNOV_TOLERANCE * max(1.0, p0_norm):
            raise ConstructionError(f"Lyapunov residual {residual} exceeds its bound.")

    # pylint: disable=invalid-name

    @property
    def F(self) -> FloatArray:
        """
        Returns:
            The drift matrix.
        """

        return self.__F

    @property
    def L(self) -> FloatArray:
        """
        Returns:
            The noise input matrix.
        """

        return self.__L

    @property
    def Q(self) -> FloatArray:
        """
        Returns:
            The white noise spectral density.
        """

        return self.__Q

    @property
    def H(self) -> FloatArray:
        """
        Returns:
            The output rows.
        """

        return self.__H

    @property
    def P0(self) -> FloatArray:
        """
        Returns:
            The stationary state covariance.
        """

        return self.__P0

    @property
    def m0(self) -> FloatArray:
        """
        Returns:
            The initial state mean.
        """

        return self.__m0

    @property
    def dim(self) -> int:
        """
        Returns:
            The state dimension.
        """

        return self.__F.shape[0]

    @property
    def output_dim(self) -> int:
        """
        Returns:
            The number of outputs.
        """

        return self.__H.shape[0]

    def diffusion(self) -> FloatArray:
        """
        Returns:
            ``L·Q·Lᵀ``.
        """

        return np.asarray(self.__L @ self.__Q @ self.__L.T, dtype=np.float64)

    def lyapunov_residual(self) -> float:
        """
        Returns:
            ``‖F·P0 + P0·Fᵀ + L·Q·Lᵀ‖_F``.
        """

        return float(np.linalg.norm(self.__F @ self.__P0 + self.__P0 @ self.__F.T + self.diffusion()))

    def covariance(self, taus: Sequence[float]) -> FloatArray:
        """
        Args:
            taus: Lags.

        Returns:
            The output covariance ``H·e^{F|τ|}·P0·Hᵀ`` for every lag, shape ``(len(taus), N_z, N_z)``.
        """

        return np.stack([
            self.__H @ scipy.linalg.expm(self.__F * abs(float(tau))) @ self.__P0 @ self.__H.T
            for tau in taus
        ])

    def __repr__(self) -> str:
        return f"LtiSde(dim={self.dim}, outputs={self.output_dim})"


class DiscreteTransition(NamedTuple):
    # pylint: disable=invalid-name
    """
    Gauss-Markov transition of a realization over one step: ``v' = Fbar·v + q`` with ``q ~ N(0, Qbar)``.
    """

    Fbar: FloatArray
    Qbar: FloatArray
    dt: float


def matern_to_sde(nu: float, length: float, variance: float) -> LtiSde:
    """
    Realize a half-integer Matérn kernel in companion form.

    Args:
        nu: The smoothness, one of 1/2, 3/2 and 5/2.
        length: The lengthscale.
        variance: The variance.

    Returns:
        The realization, with state dimension 1, 2 or 3.

    Raises:
        ConstructionError: if ``nu`` is not supported.
    """

    if float(nu) not in Matern.SUPPORTED_NU:
        raise ConstructionError(f"Unsupported Matérn smoothness {nu}.")
    if not length > 0 or not variance >= 0:
        raise ConstructionError("The lengthscale must be positive and the variance non-negative.")

    order = int(round(nu - 0.5))
    dim = order + 1
    lam = math.sqrt(2 * nu) / length

    drift = np.zeros((dim, dim))
    drift[:-1, 1:] = np.eye(order)
    drift[-1, :] = [ -comb(dim, k, exact=True) * lam ** (dim - k) for k in range(dim) ]

    noise_input = np.zeros((dim, 1))
    noise_input[-1, 0] = 1.0

    spectral_density = (
        2 * variance * math.sqrt(math.pi) * lam ** (2 * order + 1)
        * math.gamma(order + 1) / math.gamma(order + 0.5)
    )

    output = np.zeros((1, dim))
    output[0, 0] = 1.0

    stationary = scipy.linalg.solve_continuous_lyapunov(
        drift,
        -spectral_density * (noise_input @ noise_input.T)
    )

    return LtiSde(drift, noise_input, [[ spectral_density ]], output, 0.5 * (stationary + stationary.T))


def _discarded_mass(a: float, order: int) -> float:
    kept = float(ive(0, a)) + 2 * sum(float(ive(j, a)) for j in range(1, order + 1))
    return 1.0 - kept


def default_periodic_order(
    length: float,
    tolerance: float = PERIODIC_TOLERANCE,
    cap: int = PERIODIC_ORDER_CAP
) -> int:
    """
    Args:
        length: The lengthscale of the periodic kernel.
        tolerance: Admissible discarded coefficient mass, relative to the variance.
        cap: Largest order returned.

    Returns:
        The smallest truncation order whose discarded harmonic mass is at most ``tolerance``, capped.
    """

    a = 1 / length ** 2
    for order in range(1, cap + 1):
        if _discarded_mass(a, order) <= tolerance:
            return order
    return cap


def periodic_to_sde(period: float, length: float, variance: float, order: Optional[int] = None) -> LtiSde:
    """
    Realize the periodic kernel as a sum of deterministic harmonic oscillators with random stationary
    initial condition.

    Args:
        period: The period.
        length: The lengthscale.
        variance: The variance.
        order: The number of harmonics J, at least 1. Defaults to :func:`default_periodic_order`.

    Returns:
        The realization, with state dimension 2J+1 and zero process noise.
    """

    if order is None:
        order = default_periodic_order(length)
    if order < 1:
        raise ConstructionError(f"The truncation order must be at least 1, got {order}.")
    if not period > 0 or not length > 0 or not variance >= 0:
        raise ConstructionError("Period and lengthscale must be positive and the variance non-negative.")

    a = 1 / length ** 2
    omega = 2 * math.pi / period
    dim = 2 * order + 1

    drift = np.zeros((dim, dim))
    stationary = np.zeros((dim, dim))
    output = np.zeros((1, dim))

    stationary[0, 0] = variance * float(ive(0, a))
    output[0, 0] = 1.0
    for j in range(1, order + 1):
        cos_index = 2 * j - 1
        sin_index = 2 * j
        drift[cos_index, sin_index] = -j * omega
        drift[sin_index, cos_index] = j * omega
        coefficient = 2 * variance * float(ive(j, a))
        stationary[cos_index, cos_index] = coefficient
        stationary[sin_index, sin_index] = coefficient
        output[0, cos_index] = 1.0

    logging.getLogger(LOG_TAG).debug(
        f"Periodic realization with J={order}, discarded mass {variance * _discarded_mass(a, order):.3e}."
    )

    return LtiSde(drift, np.zeros((dim, 1)), [[ 0.0 ]], output, stationary)


def product_sde(periodic: LtiSde, matern: LtiSde) -> LtiSde:
    """
    Realize the product of a periodic kernel with another realizable kernel by Kronecker composition.

    Args:
        periodic: A realization without process noise and with skew-symmetric drift, as produced by
            :func:`periodic_to_sde`.
        matern: The second factor's realization.

    Returns:
        The product realization, of dimension ``periodic.dim * matern.dim``.

    Raises:
        ConstructionError: if the first argument has process noise or non-rotational drift, or either
            argument has more than one output.
    """

    if np.any(periodic.diffusion() != 0):
        raise ConstructionError("The periodic factor of a product must not have process noise.")
    if np.any(periodic.F + periodic.F.T != 0):
        raise ConstructionError("The periodic factor of a product must have skew-symmetric drift.")
    if periodic.output_dim != 1 or matern.output_dim != 1:
        raise ConstructionError("Products are only defined for scalar-output realizations.")

    identity_p = np.eye(periodic.dim)
    identity_m = np.eye(matern.dim)

    return LtiSde(
        np.kron(periodic.F, identity_m) + np.kron(identity_p, matern.F),
        np.kron(identity_p, matern.L),
        np.kron(periodic.P0, matern.Q),
        np.kron(periodic.H, matern.H),
        np.kron(periodic.P0, matern.P0)
    )


def sum_sde(parts: Sequence[LtiSde], weights: Optional[Sequence[float]] = None) -> LtiSde:
    """
    Realize a weighted sum of independent processes by block-diagonal concatenation.

    Args:
        parts: At least one realization, all with the same number of outputs.
        weights: One weight per part, all ones by default.

    Returns:
        The realization whose output covariance is ``Σ α_i²·k_i``.

    Raises:
        ConstructionError: if no parts are given, the weights don't match, or the output counts differ.
    """

    parts = list(parts)
    if len(parts) == 0:
        raise ConstructionError("A sum needs at least one part.")
    alphas = [ 1.0 ] * len(parts) if weights is None else [ float(weight) for weight in weights ]
    if len(alphas) != len(parts):
        raise ConstructionError(f"Got {len(alphas)} weights for {len(parts)} parts.")
    if len({ part.output_dim for part in parts }) != 1:
        raise ConstructionError("All parts of a sum must have the same number of outputs.")

    return LtiSde(
        scipy.linalg.block_diag(*[ part.F for part in parts ]),
        scipy.linalg.block_diag(*[ part.L for part in parts ]),
        scipy.linalg.block_diag(*[ part.Q for part in parts ]),
        np.hstack([ alpha * part.H for alpha, part in zip(alphas, parts) ]),
        scipy.linalg.block_diag(*[ part.P0 for part in parts ]),
        np.concatenate([ part.m0 for part in parts ])
    )


def constant_sde(cov: FloatArray) -> LtiSde:
    """
    Realize a vector of static random variables: zero drift and noise, identity output.

    Args:
        cov: Their symmetric PSD covariance.

    Returns:
        The frozen realization.
    """

    cov = np.array(cov, dtype=np.float64, ndmin=2)
    dim = cov.shape[0]
    if cov.shape != (dim, dim):
        raise ConstructionError(f"The covariance must be square, got shape {cov.shape}.")

    return LtiSde(np.zeros((dim, dim)), np.zeros((dim, 1)), [[ 0.0 ]], np.eye(dim), cov)


def _scaled(sde: LtiSde, factor: float) -> LtiSde:
    return LtiSde(sde.F, sde.L, sde.Q, math.sqrt(factor) * sde.H, sde.P0, sde.m0)


def to_sde(kernel: Kernel) -> LtiSde:
    """
    Realize a temporal kernel expression.

    Args:
        kernel: A Matérn, periodic or constant kernel, or sums and products thereof. Products may contain at
            most one periodic and at most one other non-constant factor.

    Returns:
        The realization.

    Raises:
        NotRealizable: if the expression contains squared-exponential, white noise or mean-scaled parts, or
            products that cannot be composed.
    """

    if isinstance(kernel, Matern):
        return matern_to_sde(kernel.nu, kernel.length, kernel.variance)
    if isinstance(kernel, Periodic):
        return periodic_to_sde(kernel.period, kernel.length, kernel.variance)
    if isinstance(kernel, Constant):
        return constant_sde([[ kernel.variance ]])
    if isinstance(kernel, Sum):
        return sum_sde([ to_sde(term) for term in kernel.terms ])
    if isinstance(kernel, Product):
        factor = 1.0
        periodics: List[Periodic] = []
        others: List[Kernel] = []
        for term in kernel.terms:
            if isinstance(term, Constant):
                factor *= term.variance
            elif isinstance(term, Periodic):
                periodics.append(term)
            else:
                others.append(term)

        if len(periodics) > 1 or len(others) > 1:
            raise NotRealizable(f"Cannot compose the product {kernel!r}.")

        if periodics and others:
            realization = product_sde(to_sde(periodics[0]), to_sde(others[0]))
        elif periodics or others:
            realization = to_sde((periodics + others)[0])
        else:
            return constant_sde([[ factor ]])

        return realization if factor == 1.0 else _scaled(realization, factor)

    raise NotRealizable(f"The kernel {kernel!r} has no exact state-space realization.")


def _matrix_fraction(drift: FloatArray, diffusion: FloatArray, dt: float) -> FloatArray:
    dim = drift.shape[0]
    augmented = np.zeros((2 * dim, 2 * dim))
    augmented[:dim, :dim] = drift
    augmented[:dim, dim:] = diffusion
    augmented[dim:, dim:] = -drift.T
    exponential = scipy.linalg.expm(augmented * dt)[:dim, :]
    return np.asarray(exponential[:, dim:] @ exponential[:, :dim].T, dtype=np.float64)


def discretize(sde: LtiSde, dt: float) -> DiscreteTransition:
    """
    Exact discretization of a realization over a step of length ``dt``.

    The process noise covariance is evaluated in closed form with the matrix-fraction method. Long steps
    start from a short base step and double it, which keeps the augmented exponential well conditioned.

    Args:
        sde: The realization.
        dt: The step length, non-negative.

    Returns:
        The transition, with symmetric ``Qbar``.

    Raises:
        DiscretizationError: if ``dt`` is negative or not finite.
    """

    if not math.isfinite(dt) or dt < 0:
        raise DiscretizationError(f"The step length must be finite and non-negative, got {dt}.")

    dim = sde.dim
    if dt == 0:
        return DiscreteTransition(np.eye(dim), np.zeros((dim, dim)), 0.0)

    transition = scipy.linalg.expm(sde.F * dt)
    diffusion = sde.diffusion()
    if not diffusion.any():
        return DiscreteTransition(transition, np.zeros((dim, dim)), dt)

    reach = float(np.linalg.norm(sde.F, 1)) * dt
    doublings = max(0, math.ceil(math.log2(reach))) if reach > 1 else 0
    step = dt / 2 ** doublings

    noise = _matrix_fraction(sde.F, diffusion, step)
    step_transition = scipy.linalg.expm(sde.F * step)
    for _ in range(doublings):
        noise = step_transition @ noise @ step_transition.T + noise
        noise = 0.5 * (noise + noise.T)
        step_transition = step_transition @ step_transition

    return DiscreteTransition(transition, 0.5 * (noise + noise.T), dt)


class TransitionCache:
    """
    Per-step-size cache of the transitions of a block-diagonal model. Every block is discretized on its
    own and the blocks are assembled into sparse block-diagonal matrices.

    Lookups are lock-free, insertions happen under a lock.
    """

    LOG_TAG = LOG_TAG

    def __init__(self, blocks: Sequence[LtiSde], significant_digits: int = 12) -> None:
        """
        Args:
            blocks: The diagonal blocks of the model, in state order.
            significant_digits: Step lengths that agree in this many significant digits share a
                transition.
        """

        self.__blocks = tuple(blocks)
        self.__digits = significant_digits
        self.__cache: Dict[float, Tuple[scipy.sparse.csr_matrix, scipy.sparse.csr_matrix]] = {}
        self.__lock = threading.Lock()

    def key(self, dt: float) -> float:
        """
        Args:
            dt: A step length.

        Returns:
            The cache key of the step length.
        """

        return float(f"{dt:.{self.__digits}g}")

    def __len__(self) -> int:
        return len(self.__cache)

    def get(self, dt: float) -> Tuple[scipy.sparse.csr_matrix, scipy.sparse.csr_matrix]:
        """
        Args:
            dt: The step length.

        Returns:
            The sparse block-diagonal ``(Fbar, Qbar)`` of the whole model for this step length.
        """

        key = self.key(dt)
        cached = self.__cache.get(key)
        if cached is not None:
            return cached

        transitions = [ discretize(block, dt) for block in self.__blocks ]
        entry = (
            scipy.sparse.block_diag([ t.Fbar for t in transitions ], format="csr"),
            scipy.sparse.block_diag([ t.Qbar for t in transitions ], format="csr")
        )

        with self.__lock:
            entry = self.__cache.setdefault(key, entry)

        logging.getLogger(TransitionCache.LOG_TAG).debug(
            f"Transition for dt={dt:.6g} computed, {len(self.__cache)} step size(s) cached."
        )

        return entry
