# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import enum
import logging
import threading
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
from typing_extensions import Final, assert_never

from .condense import LevelTable, ReducedElasticModel
from .kernels import CoregionalModel, Kernel, psd_sqrt
from .klreduce import KlBasis, kl_factor_matrix
from .statespace import LtiSde, TransitionCache, constant_sde, discretize, to_sde
from .types import FloatArray, GatemonException, Quantity, Side


__all__ = [  # pylint: disable=unused-variable
    "AssemblyConstructionError",
    "AssemblyDomainError",
    "AssemblyException",
    "ErrorModel",
    "JointModel",
    "LoadPrior",
    "Marginals",
    "ModePair",
    "ModelAccounting",
    "PairRule",
    "TimeTable",
    "build_joint_model",
    "loads_from_state",
    "model_accounting",
    "observation_operator",
    "push_forward",
    "select_pairs",
    "simulate_prior"
]


LOG_TAG: Final = "gatemon.assembly"

LOAD_SIDES: Final = (Side.QUOIN, Side.MITER)
OPERATOR_CACHE_SIZE: Final = 512


class AssemblyException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the assembly module.
    """


class AssemblyConstructionError(AssemblyException):
    """
    Raised by :func:`build_joint_model` in case the priors, the error model and the reduced model do not fit
    together.
    """


class AssemblyDomainError(AssemblyException):
    """
    Raised by the operator builders in case a side or quantity cannot be mapped through the model.
    """


@enum.unique
class PairRule(enum.Enum):
    """
    Rules selecting which (spatial mode, height mode) pairs get their own temporal process.
    """

    PRODUCT_ENERGY: str = "product_energy"
    ALL: str = "all"


class TimeTable(NamedTuple):
    # pylint: disable=invalid-name
    """
    Per-gage values tabulated over time, interpolated linearly and held constant beyond the ends.
    """

    times: FloatArray
    values: FloatArray

    def __call__(self, t: float) -> FloatArray:
        return np.array([ np.interp(t, self.times, column) for column in np.asarray(self.values).T ])


class LoadPrior(NamedTuple):
    # pylint: disable=invalid-name
    """
    Tensor-product Gaussian process prior of the boundary tractions along one side: a mean tabulated over
    water levels and the truncated KL bases of the spatial and height factors, with a temporal kernel
    shared by all mode pairs.
    """

    side: Side
    mean: LevelTable
    spatial_basis: KlBasis
    height_basis: KlBasis
    time_kernel: Kernel


class ErrorModel(NamedTuple):
    # pylint: disable=invalid-name
    """
    Model discrepancy: coregional thermal strain, static gage bias and independent observation noise, all in
    strain units.
    """

    thermal: CoregionalModel
    bias_cov: FloatArray
    noise_var: FloatArray
    thermal_mean: Optional[TimeTable] = None


class ModePair(NamedTuple):
    # pylint: disable=invalid-name
    """
    A retained (spatial mode, height mode) pair and its product energy.
    """

    spatial: int
    height: int
    energy: float


class Marginals(NamedTuple):
    # pylint: disable=invalid-name
    """
    Pointwise Gaussian marginals of a linear image of the state.
    """

    mean: FloatArray
    std: FloatArray


def select_pairs(
    spatial: KlBasis,
    height: KlBasis,
    rule: PairRule = PairRule.PRODUCT_ENERGY
) -> Tuple[ModePair, ...]:
    """
    Args:
        spatial: The truncated spatial basis.
        height: The truncated height basis.
        rule: :attr:`PairRule.PRODUCT_ENERGY` keeps the pairs whose eigenvalue product is at least that of the
            weaker of the two boundary pairs (last spatial mode with first height mode, first spatial mode
            with last height mode). :attr:`PairRule.ALL` keeps every pair.

    Returns:
        The retained pairs, spatial index varying slowest.
    """

    if spatial.size == 0 or height.size == 0:
        return ()

    energies = np.outer(spatial.eigenvalues, height.eigenvalues)
    if rule is PairRule.ALL:
        threshold = -np.inf
    elif rule is PairRule.PRODUCT_ENERGY:
        threshold = min(energies[-1, 0], energies[0, -1]) * (1 - 1e-12)
    else:
        assert_never(rule)

    return tuple(
        ModePair(i, j, float(energies[i, j]))
        for i in range(spatial.size)
        for j in range(height.size)
        if energies[i, j] >= threshold
    )


class JointModel:
    """
    The joint latent state-space model: per-gage thermal processes, static biases and one temporal process
    per retained load mode pair and side, observed through a water-level-dependent operator.

    The state is organized in blocks. Every block has a latent output, stacked into the latent vector
    ``u = [thermal (per gage) | bias (per gage) | quoin pairs | miter pairs]``; the observation operator
    maps ``u`` to gage strain.
    """

    LOG_TAG = LOG_TAG

    def __init__(
        self,
        reduced: ReducedElasticModel,
        priors: Dict[Side, LoadPrior],
        error: ErrorModel,
        pairs: Dict[Side, Tuple[ModePair, ...]],
        blocks: Sequence[Tuple[str, LtiSde]]
    ) -> None:
        """
        Use :func:`build_joint_model` instead of calling this directly.

        Args:
            reduced: The reduced elastic model.
            priors: The load prior per side.
            error: The error model.
            pairs: The retained mode pairs per side.
            blocks: The named diagonal blocks of the state, in state order.
        """

        self.__reduced = reduced
        self.__priors = dict(priors)
        self.__error = error
        self.__pairs = dict(pairs)
        self.__blocks = tuple(block for _, block in blocks)

        state_layout: Dict[str, slice] = {}
        latent_layout: Dict[str, slice] = {}
        state_start = latent_start = 0
        for name, block in blocks:
            state_stop = state_start + block.dim
            latent_stop = latent_start + block.output_dim
            previous_state = state_layout.get(name)
            previous_latent = latent_layout.get(name)
            state_layout[name] = slice(state_start if previous_state is None else previous_state.start, state_stop)
            latent_layout[name] = slice(
                latent_start if previous_latent is None else previous_latent.start,
                latent_stop
            )
            state_start, latent_start = state_stop, latent_stop
        for name in ("thermal", "bias", Side.QUOIN.value, Side.MITER.value):
            state_layout.setdefault(name, slice(state_start, state_start))
            latent_layout.setdefault(name, slice(latent_start, latent_start))

        self.__state_layout = state_layout
        self.__latent_layout = latent_layout

        self.__sde = LtiSde(
            scipy.linalg.block_diag(*[ block.F for block in self.__blocks ]),
            scipy.linalg.block_diag(*[ block.L for block in self.__blocks ]),
            scipy.linalg.block_diag(*[ block.Q for block in self.__blocks ]),
            scipy.linalg.block_diag(*[ block.H for block in self.__blocks ]),
            scipy.linalg.block_diag(*[ block.P0 for block in self.__blocks ]),
            np.concatenate([ block.m0 for block in self.__blocks ])
        )
        self.__latent_rows = scipy.sparse.block_diag([ block.H for block in self.__blocks ], format="csr")
        self.__transitions = TransitionCache(self.__blocks)

        self.__strain_factors: Dict[Side, FloatArray] = {}
        for side, prior in self.__priors.items():
            indices = reduced.side_indices(side)
            spatial = kl_factor_matrix(prior.spatial_basis, reduced.arc_lengths(side))
            self.__strain_factors[side] = np.asarray(
                reduced.Gr[:, indices] @ (reduced.tributary(side)[:, np.newaxis] * spatial),
                dtype=np.float64
            )

        self.__thermal_root = error.thermal.sqrt_factor
        self.__loadings_cache: Dict[Tuple[float, float], FloatArray] = {}
        self.__operator_cache: Dict[Tuple[Quantity, float, float], Tuple[FloatArray, FloatArray]] = {}
        self.__cache_lock = threading.Lock()

    @property
    def reduced(self) -> ReducedElasticModel:
        """
        Returns:
            The reduced elastic model.
        """

        return self.__reduced

    @property
    def priors(self) -> Dict[Side, LoadPrior]:
        """
        Returns:
            The load prior per side.
        """

        return dict(self.__priors)

    @property
    def error(self) -> ErrorModel:
        """
        Returns:
            The error model.
        """

        return self.__error

    @property
    def pairs(self) -> Dict[Side, Tuple[ModePair, ...]]:
        """
        Returns:
            The retained mode pairs per side.
        """

        return dict(self.__pairs)

    @property
    def sde(self) -> LtiSde:
        """
        Returns:
            The joint realization, whose output is the latent vector.
        """

        return self.__sde

    @property
    def blocks(self) -> Tuple[LtiSde, ...]:
        """
        Returns:
            The diagonal blocks of the joint realization.
        """

        return self.__blocks

    @property
    def transitions(self) -> TransitionCache:
        """
        Returns:
            The shared cache of block-sparse transitions.
        """

        return self.__transitions

    @property
    def latent_rows(self) -> scipy.sparse.csr_matrix:
        """
        Returns:
            The sparse map from the state to the latent vector.
        """

        return self.__latent_rows

    @property
    def dim(self) -> int:
        """
        Returns:
            The state dimension.
        """

        return self.__sde.dim

    @property
    def latent_dim(self) -> int:
        """
        Returns:
            The dimension of the latent vector.
        """

        return self.__sde.output_dim

    @property
    def gage_count(self) -> int:
        """
        Returns:
            The number of gages.
        """

        return self.__reduced.gage_count

    def state_slice(self, name: str) -> slice:
        """
        Args:
            name: One of ``thermal``, ``bias``, ``quoin`` and ``miter``.

        Returns:
            The state indices of the block group.
        """

        return self.__state_layout[name]

    def latent_slice(self, name: str) -> slice:
        """
        Args:
            name: One of ``thermal``, ``bias``, ``quoin`` and ``miter``.

        Returns:
            The latent indices of the block group.
        """

        return self.__latent_layout[name]

    def thermal_mean(self, t: float) -> FloatArray:
        """
        Args:
            t: A time.

        Returns:
            The prior thermal strain mean per gage, zero unless a table was configured.
        """

        table = self.__error.thermal_mean
        return np.zeros(self.gage_count) if table is None else table(t)

    def mean_load_vector(self, levels: Sequence[float]) -> FloatArray:
        """
        Args:
            levels: The water levels (h⁺, h⁻).

        Returns:
            The prior mean nodal boundary forces over the reduced DOFs.
        """

        vector = np.zeros(self.__reduced.size)
        for side, prior in self.__priors.items():
            vector[self.__reduced.side_indices(side)] = self.__reduced.tributary(side) * prior.mean(levels)
        return vector

    def height_factors(self, side: Side, levels: Sequence[float]) -> FloatArray:
        """
        Args:
            side: The boundary.
            levels: The water levels (h⁺, h⁻).

        Returns:
            The row ``√λ_hj·φ_hj(h)`` of the side's height basis.
        """

        return kl_factor_matrix(self.__priors[side].height_basis, [ [ float(level) for level in levels ] ])[0]

    def loadings(self, levels: Sequence[float]) -> FloatArray:
        """
        Args:
            levels: The water levels (h⁺, h⁻).

        Returns:
            The map from the latent vector to noise-free gage strain, shape ``(gages, latent_dim)``.
        """

        key = (float(levels[0]), float(levels[1]))
        cached = self.__loadings_cache.get(key)
        if cached is not None:
            return cached

        matrix = np.zeros((self.gage_count, self.latent_dim))
        matrix[:, self.latent_slice("thermal")] = self.__thermal_root
        matrix[:, self.latent_slice("bias")] = np.eye(self.gage_count)
        matrix[:, self.latent_slice(Side.QUOIN.value)] = self.__load_columns(Side.QUOIN, key)
        matrix[:, self.latent_slice(Side.MITER.value)] = self.__load_columns(Side.MITER, key)
        matrix.flags.writeable = False

        with self.__cache_lock:
            if len(self.__loadings_cache) >= OPERATOR_CACHE_SIZE:
                self.__loadings_cache.clear()
            return self.__loadings_cache.setdefault(key, matrix)

    def __load_columns(self, side: Side, levels: Tuple[float, float]) -> FloatArray:
        pairs = self.__pairs.get(side, ())
        if len(pairs) == 0:
            return np.zeros((self.gage_count, 0))

        height = self.height_factors(side, levels)
        spatial = self.__strain_factors[side]
        return np.column_stack([ spatial[:, pair.spatial] * height[pair.height] for pair in pairs ])

    def to_state(self, latent_map: FloatArray) -> FloatArray:
        """
        Args:
            latent_map: A matrix acting on the latent vector.

        Returns:
            The same map acting on the state.
        """

        return np.asarray((self.__latent_rows.T @ np.asarray(latent_map).T).T, dtype=np.float64)

    def component(self, quantity: Quantity, t: float, levels: Sequence[float]) -> Tuple[FloatArray, FloatArray]:
        """
        Strain-valued components of the observation model. Elastic, thermal and bias components add up to the
        predicted strain.

        Args:
            quantity: Any quantity except :attr:`~gatemon.types.Quantity.LOADS`.
            t: The time.
            levels: The water levels (h⁺, h⁻).

        Returns:
            The offset and the map acting on the state.

        Raises:
            AssemblyDomainError: for :attr:`~gatemon.types.Quantity.LOADS`, see :meth:`load_operator`.
        """

        if quantity is Quantity.LOADS:
            raise AssemblyDomainError("Loads are not strain-valued; use the load operator instead.")

        key = (quantity, float(levels[0]), float(levels[1]))
        cached = self.__operator_cache.get(key)
        if cached is None:
            cached = self.__static_component(quantity, levels)
            with self.__cache_lock:
                if len(self.__operator_cache) >= OPERATOR_CACHE_SIZE:
                    self.__operator_cache.clear()
                cached = self.__operator_cache.setdefault(key, cached)

        static_offset, operator = cached
        if quantity in (Quantity.THERMAL, Quantity.PREDICTED_STRAIN):
            return static_offset + self.thermal_mean(t), operator
        return static_offset, operator

    def __static_component(self, quantity: Quantity, levels: Sequence[float]) -> Tuple[FloatArray, FloatArray]:
        latent = self.loadings(levels)
        masked = np.zeros_like(latent)
        elastic = np.asarray(
            self.__reduced.Gr @ (self.__reduced.hydro_load(levels) + self.mean_load_vector(levels)),
            dtype=np.float64
        )

        if quantity is Quantity.THERMAL:
            names: Tuple[str, ...] = ("thermal",)
            offset = np.zeros(self.gage_count)
        elif quantity is Quantity.BIAS:
            names = ("bias",)
            offset = np.zeros(self.gage_count)
        elif quantity is Quantity.ELASTIC:
            names = (Side.QUOIN.value, Side.MITER.value)
            offset = elastic
        elif quantity is Quantity.PREDICTED_STRAIN:
            names = ("thermal", "bias", Side.QUOIN.value, Side.MITER.value)
            offset = elastic
        elif quantity is Quantity.LOADS:
            raise AssemblyDomainError("Loads are not strain-valued.")
        else:
            assert_never(quantity)

        for name in names:
            block = self.latent_slice(name)
            masked[:, block] = latent[:, block]

        operator = self.to_state(masked)
        offset.flags.writeable = False
        operator.flags.writeable = False
        return offset, operator

    def load_operator(
        self,
        side: Side,
        levels: Sequence[float],
        x: Optional[Sequence[float]] = None
    ) -> Tuple[FloatArray, FloatArray]:
        """
        Args:
            side: The loaded boundary.
            levels: The water levels (h⁺, h⁻).
            x: Arc-length coordinates along the boundary, the boundary DOFs by default.

        Returns:
            The prior mean traction at the query points and the map from the state to the traction.

        Raises:
            AssemblyDomainError: if the side carries no load prior.
        """

        prior = self.__priors.get(side)
        if prior is None:
            raise AssemblyDomainError(f"No load prior for the side '{side.value}'.")

        arc = self.__reduced.arc_lengths(side)
        queries = arc if x is None else np.asarray(x, dtype=np.float64).ravel()
        offset = np.interp(queries, arc, prior.mean(levels))

        latent = np.zeros((queries.size, self.latent_dim))
        pairs = self.__pairs.get(side, ())
        if len(pairs) > 0:
            spatial = kl_factor_matrix(prior.spatial_basis, queries)
            height = self.height_factors(side, levels)
            block = self.latent_slice(side.value)
            latent[:, block] = np.column_stack([
                spatial[:, pair.spatial] * height[pair.height] for pair in pairs
            ])

        return np.asarray(offset, dtype=np.float64), self.to_state(latent)

    def __repr__(self) -> str:
        pair_counts = ", ".join(f"{side.value}={len(pairs)}" for side, pairs in self.__pairs.items())
        return f"JointModel(dim={self.dim}, gages={self.gage_count}, pairs: {pair_counts})"


def build_joint_model(
    reduced: ReducedElasticModel,
    quoin: LoadPrior,
    miter: LoadPrior,
    err: ErrorModel,
    pair_rule: PairRule = PairRule.PRODUCT_ENERGY
) -> JointModel:
    """
    Assemble the joint latent model.

    Args:
        reduced: The reduced elastic model.
        quoin: The quoin load prior.
        miter: The miter load prior.
        err: The error model.
        pair_rule: The mode pair selection rule, see :func:`select_pairs`.

    Returns:
        The joint model with blocks ``[thermal per gage | bias | quoin pairs | miter pairs]``.

    Raises:
        AssemblyConstructionError: if the dimensions of the parts do not fit together.
        NotRealizable: if a temporal kernel has no state-space realization.
    """

    gages = reduced.gage_count
    if err.thermal.size != gages:
        raise AssemblyConstructionError(f"The thermal model covers {err.thermal.size} of {gages} gages.")
    noise = np.asarray(err.noise_var, dtype=np.float64).ravel()
    if noise.size != gages or np.any(noise <= 0):
        raise AssemblyConstructionError("The noise variance must be positive for every gage.")
    if np.asarray(err.bias_cov).shape != (gages, gages):
        raise AssemblyConstructionError(f"The bias covariance must be {gages}×{gages}.")

    priors = { Side.QUOIN: quoin, Side.MITER: miter }
    pairs: Dict[Side, Tuple[ModePair, ...]] = {}
    for side, prior in priors.items():
        if prior.side is not side:
            raise AssemblyConstructionError(f"The {side.value} prior is declared for '{prior.side.value}'.")
        arc = reduced.arc_lengths(side)
        seeds = prior.spatial_basis.seeds
        if seeds.shape != (arc.size, 1) or not np.allclose(seeds[:, 0], arc, rtol=1e-9, atol=1e-9):
            raise AssemblyConstructionError(f"The {side.value} spatial seeds do not match the boundary DOFs.")
        if prior.mean.values.shape[2:] != (arc.size,):
            raise AssemblyConstructionError(f"The {side.value} prior mean does not match the boundary DOFs.")
        if prior.height_basis.seeds.shape[1] != 2:
            raise AssemblyConstructionError(f"The {side.value} height basis must act on (h⁺, h⁻).")
        pairs[side] = select_pairs(prior.spatial_basis, prior.height_basis, pair_rule)

    blocks: List[Tuple[str, LtiSde]] = []
    realized: Dict[int, LtiSde] = {}
    for kernel in err.thermal.kernels:
        if id(kernel) not in realized:
            realized[id(kernel)] = to_sde(kernel)
        blocks.append(("thermal", realized[id(kernel)]))
    blocks.append(("bias", constant_sde(err.bias_cov)))
    for side, prior in priors.items():
        if len(pairs[side]) > 0:
            time_sde = to_sde(prior.time_kernel)
            blocks.extend((side.value, time_sde) for _ in pairs[side])

    model = JointModel(reduced, priors, err, pairs, blocks)

    logging.getLogger(JointModel.LOG_TAG).info(
        f"Joint model of dimension {model.dim}: {len(pairs[Side.QUOIN])} quoin and {len(pairs[Side.MITER])}"
        f" miter mode pairs for {gages} gages."
    )

    return model


def observation_operator(model: JointModel, t: float, h: Sequence[float]) -> Tuple[FloatArray, FloatArray]:
    """
    Args:
        model: The joint model.
        t: The time.
        h: The water levels (h⁺, h⁻).

    Returns:
        The deterministic strain mean ``μ_obs(t, h)`` and the observation matrix ``H(h)``.

    Raises:
        ExtrapolationError: if the levels lie outside the tabulated range.
    """

    return model.component(Quantity.PREDICTED_STRAIN, t, h)


def push_forward(offset: FloatArray, operator: FloatArray, mean: FloatArray, cov: FloatArray) -> Marginals:
    """
    Args:
        offset: The deterministic part of an affine map.
        operator: Its linear part acting on the state.
        mean: The state mean.
        cov: The state covariance.

    Returns:
        The pointwise marginals of the image.
    """

    variance = np.einsum("ij,jk,ik->i", operator, cov, operator)
    return Marginals(offset + operator @ mean, np.sqrt(np.clip(variance, 0.0, None)))


def loads_from_state(
    model: JointModel,
    mean: FloatArray,
    cov: FloatArray,
    h: Sequence[float],
    side: Side,
    x: Optional[Sequence[float]] = None
) -> Marginals:
    """
    Args:
        model: The joint model.
        mean: The state mean.
        cov: The state covariance.
        h: The water levels (h⁺, h⁻).
        side: The loaded boundary.
        x: Arc-length query coordinates, the boundary DOFs by default.

    Returns:
        The traction marginals at the query points.

    Raises:
        AssemblyDomainError: if the side carries no load prior.
    """

    if side not in LOAD_SIDES:
        raise AssemblyDomainError(f"The side '{side.value}' carries no loads.")

    offset, operator = model.load_operator(side, h, x)
    return push_forward(offset, operator, np.asarray(mean), np.asarray(cov))


def _block_root(matrix: FloatArray) -> FloatArray:
    if not np.any(matrix):
        return np.zeros_like(matrix)
    return psd_sqrt(0.5 * (matrix + matrix.T), tolerance=1e-8)


def simulate_prior(
    model: JointModel,
    times: Sequence[float],
    levels: FloatArray,
    rng: np.random.Generator,
    noise: bool = True
) -> Tuple[FloatArray, FloatArray]:
    """
    Draw one sample path of the joint prior and push it through the observation operator.

    Args:
        model: The joint model.
        times: Strictly increasing times.
        levels: Water levels per time, shape ``(len(times), 2)``.
        rng: The random generator.
        noise: Whether to add observation noise.

    Returns:
        The simulated strains, shape ``(len(times), gages)``, and the latent state path.
    """

    times_array = np.asarray(times, dtype=np.float64)
    levels = np.asarray(levels, dtype=np.float64).reshape(-1, 2)
    if levels.shape[0] != times_array.size:
        raise ValueError(f"Got {levels.shape[0]} water levels for {times_array.size} times.")
    if np.any(np.diff(times_array) <= 0):
        raise ValueError("Times must be strictly increasing.")

    blocks = model.blocks
    bounds = np.cumsum([ 0 ] + [ block.dim for block in blocks ])
    roots: Dict[float, List[Tuple[FloatArray, FloatArray]]] = {}

    state = np.concatenate([
        block.m0 + _block_root(block.P0) @ rng.standard_normal(block.dim) for block in blocks
    ])
    noise_std = np.sqrt(np.asarray(model.error.noise_var, dtype=np.float64))

    strains = np.empty((times_array.size, model.gage_count))
    states = np.empty((times_array.size, model.dim))
    for index, t in enumerate(times_array):
        if index > 0:
            dt = float(t - times_array[index - 1])
            key = model.transitions.key(dt)
            if key not in roots:
                roots[key] = [
                    (transition.Fbar, _block_root(transition.Qbar))
                    for transition in (discretize(block, dt) for block in blocks)
                ]
            state = np.concatenate([
                fbar @ state[bounds[b]:bounds[b + 1]] + root @ rng.standard_normal(root.shape[0])
                for b, (fbar, root) in enumerate(roots[key])
            ])

        offset, operator = observation_operator(model, float(t), levels[index])
        strains[index] = offset + operator @ state
        if noise:
            strains[index] += noise_std * rng.standard_normal(model.gage_count)
        states[index] = state

    return strains, states


class ModelAccounting(NamedTuple):
    # pylint: disable=invalid-name
    """
    Size report of a joint model for a given number of observation times.
    """

    state_dim: int
    block_dims: Dict[str, int]
    spatial_modes: Dict[str, int]
    height_modes: Dict[str, int]
    mode_pairs: Dict[str, int]
    captured_energy: Dict[str, float]
    n_times: int
    full_parameters: int
    reduced_parameters: int
    bias_parameters: int

    def to_json(self) -> Dict[str, object]:
        """
        Returns:
            A JSON-serializable dictionary of the report.
        """

        return { field: getattr(self, field) for field in self._fields }


def model_accounting(model: JointModel, n_times: int) -> ModelAccounting:
    """
    Args:
        model: The joint model.
        n_times: The number of observation times.

    Returns:
        The size report. Full parameters count the load DOFs and the per-gage thermal strain at every time;
        reduced parameters count the retained spatial modes of both sides instead of the load DOFs. Static
        biases are reported separately.
    """

    gages = model.gage_count
    spatial: Dict[str, int] = {}
    height: Dict[str, int] = {}
    captured: Dict[str, float] = {}
    load_dofs = 0
    for side, prior in model.priors.items():
        spatial[side.value] = prior.spatial_basis.size
        height[side.value] = prior.height_basis.size
        captured[f"{side.value}.spatial"] = prior.spatial_basis.captured_fraction
        captured[f"{side.value}.height"] = prior.height_basis.captured_fraction
        load_dofs += model.reduced.side_indices(side).size

    return ModelAccounting(
        state_dim=model.dim,
        block_dims={
            name: model.state_slice(name).stop - model.state_slice(name).start
            for name in ("thermal", "bias", Side.QUOIN.value, Side.MITER.value)
        },
        spatial_modes=spatial,
        height_modes=height,
        mode_pairs={ side.value: len(pairs) for side, pairs in model.pairs.items() },
        captured_energy=captured,
        n_times=n_times,
        full_parameters=n_times * (load_dofs + gages),
        reduced_parameters=n_times * (sum(spatial.values()) + gages),
        bias_parameters=gages
    )
