# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import logging
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse
from typing_extensions import Final

from .assembly import JointModel, Marginals, loads_from_state, observation_operator, push_forward
from .storage import InMemoryStorage, TrajectoryStorage
from .types import FloatArray, GatemonException, GaussianState, Quantity, Side, StateKind, StrainUnit


__all__ = [  # pylint: disable=unused-variable
    "FilterStep",
    "GageMismatch",
    "InnovationSingular",
    "KalmanSmoother",
    "MissingLevels",
    "NonIncreasingTimes",
    "ObservationSeries",
    "PosteriorTrajectory",
    "SmootherException",
    "TimeNotObserved",
    "UnknownQuantity",
    "extract_posterior",
    "kalman_filter",
    "rts_smooth",
    "smooth_series"
]


JITTER: Final = 1e-10
LOG_2PI: Final = math.log(2 * math.pi)


class SmootherException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the smoother module.
    """


class NonIncreasingTimes(SmootherException):
    """
    Raised by :class:`ObservationSeries` and :meth:`KalmanSmoother.step` in case a time does not lie strictly
    after its predecessor.
    """

    def __init__(self, message: str, row: int) -> None:
        super().__init__(message)
        self.row = row


class MissingLevels(SmootherException):
    """
    Raised by :class:`ObservationSeries` in case the water levels are missing before the first metered value.
    """


class GageMismatch(SmootherException):
    """
    Raised by the filter in case the number of gages of the observations and of the model differ.
    """


class InnovationSingular(SmootherException):
    """
    Raised by :meth:`KalmanSmoother.step` in case the innovation covariance is not positive definite.
    """

    def __init__(self, message: str, step: int) -> None:
        super().__init__(message)
        self.step = step


class TimeNotObserved(SmootherException):
    """
    Raised by :func:`extract_posterior` in case the requested time is not an observation time.
    """


class UnknownQuantity(SmootherException):
    """
    Raised by :func:`extract_posterior` in case the quantity is unknown or lacks its side.
    """


class ObservationSeries:
    """
    Strain observations at strictly increasing times, with the water levels at every time and a mask of the
    present entries. Strains are held in strain, levels are forward-filled.
    """

    def __init__(
        self,
        times: Sequence[float],
        levels: FloatArray,
        strains: FloatArray,
        gage_ids: Optional[Sequence[str]] = None,
        unit: StrainUnit = StrainUnit.STRAIN
    ) -> None:
        """
        Args:
            times: Observation times in days, strictly increasing.
            levels: Water levels (h⁺, h⁻) per time. Missing values repeat the last metered value.
            strains: Strains per time and gage in the declared unit, NaN where missing.
            gage_ids: Gage names, ``gage_0`` and so on by default.
            unit: The unit of ``strains``.

        Raises:
            NonIncreasingTimes: naming the first offending row.
            MissingLevels: if a level is missing before its first metered value.
        """

        self.__times = np.array(times, dtype=np.float64).ravel()
        strains = np.array(strains, dtype=np.float64, ndmin=2)
        if strains.shape[0] != self.__times.size:
            raise ValueError(f"Got {strains.shape[0]} strain rows for {self.__times.size} times.")

        steps = np.diff(self.__times)
        if not np.all(np.isfinite(self.__times)) or np.any(steps <= 0):
            bad = np.flatnonzero(~(steps > 0))
            row = int(bad[0]) + 1 if bad.size > 0 else int(np.flatnonzero(~np.isfinite(self.__times))[0])
            raise NonIncreasingTimes(f"Observation time in row {row} does not increase.", row)

        level_frame = pd.DataFrame(np.array(levels, dtype=np.float64).reshape(-1, 2)).ffill()
        if level_frame.shape[0] != self.__times.size:
            raise ValueError(f"Got {level_frame.shape[0]} level rows for {self.__times.size} times.")
        if level_frame.isna().to_numpy().any():
            raise MissingLevels("Water levels are missing before the first metered value.")

        self.__levels = level_frame.to_numpy(dtype=np.float64)
        self.__strains = strains * unit.scale
        self.__mask = np.isfinite(self.__strains)
        self.__gage_ids = tuple(gage_ids) if gage_ids is not None else tuple(
            f"gage_{index}" for index in range(strains.shape[1])
        )
        if len(self.__gage_ids) != strains.shape[1]:
            raise ValueError(f"Got {len(self.__gage_ids)} gage ids for {strains.shape[1]} gages.")

        for array in (self.__times, self.__levels, self.__strains, self.__mask):
            array.flags.writeable = False

    @property
    def times(self) -> FloatArray:
        """
        Returns:
            The observation times in days.
        """

        return self.__times

    @property
    def levels(self) -> FloatArray:
        """
        Returns:
            The forward-filled water levels, shape ``(n, 2)``.
        """

        return self.__levels

    @property
    def strains(self) -> FloatArray:
        """
        Returns:
            The strains in strain, NaN where missing.
        """

        return self.__strains

    @property
    def mask(self) -> np.ndarray:
        """
        Returns:
            Boolean mask of the present strains.
        """

        return self.__mask

    @property
    def gage_ids(self) -> Tuple[str, ...]:
        """
        Returns:
            The gage names.
        """

        return self.__gage_ids

    @property
    def gage_count(self) -> int:
        """
        Returns:
            The number of gages.
        """

        return len(self.__gage_ids)

    def __len__(self) -> int:
        return int(self.__times.size)


class FilterStep(NamedTuple):
    # pylint: disable=invalid-name
    """
    The forecast and analyzed states of one filter step, the predictive log density of its observation and
    the water levels it was taken at.
    """

    forecast: GaussianState
    analyzed: GaussianState
    log_density: float
    levels: Tuple[float, float]


def _symmetrized(matrix: FloatArray) -> FloatArray:
    return np.asarray(0.5 * (matrix + matrix.T), dtype=np.float64)


def _add_sparse(dense: FloatArray, sparse: scipy.sparse.spmatrix) -> FloatArray:
    coo = sparse.tocoo()
    np.add.at(dense, (coo.row, coo.col), coo.data)
    return dense


class PosteriorTrajectory:
    """
    Per-time Gaussian marginals of the joint latent state, backed by a trajectory store.
    """

    def __init__(
        self,
        model: JointModel,
        times: FloatArray,
        levels: FloatArray,
        storage: TrajectoryStorage,
        log_evidence: float,
        kind: StateKind
    ) -> None:
        """
        Args:
            model: The joint model.
            times: The observation times.
            levels: The water levels per time.
            storage: The store holding one state per time index.
            log_evidence: The summed predictive log densities.
            kind: Whether the states are smoothed or (filter-only) analyzed.
        """

        self.__model = model
        self.__times = np.asarray(times, dtype=np.float64)
        self.__levels = np.asarray(levels, dtype=np.float64)
        self.__storage = storage
        self.__log_evidence = float(log_evidence)
        self.__kind = kind

    @property
    def model(self) -> JointModel:
        """
        Returns:
            The joint model.
        """

        return self.__model

    @property
    def times(self) -> FloatArray:
        """
        Returns:
            The observation times.
        """

        return self.__times

    @property
    def levels(self) -> FloatArray:
        """
        Returns:
            The water levels per time.
        """

        return self.__levels

    @property
    def log_evidence(self) -> float:
        """
        Returns:
            The log marginal likelihood of the observations.
        """

        return self.__log_evidence

    @property
    def kind(self) -> StateKind:
        """
        Returns:
            The kind of the stored states.
        """

        return self.__kind

    def __len__(self) -> int:
        return int(self.__times.size)

    def state(self, index: int) -> GaussianState:
        """
        Args:
            index: The time index.

        Returns:
            The state at that time.
        """

        return self.__storage.load_state(index)

    def index_of(self, t: float) -> int:
        """
        Args:
            t: An observation time.

        Returns:
            Its index.

        Raises:
            TimeNotObserved: if ``t`` is not an observation time.
        """

        index = int(np.searchsorted(self.__times, t))
        for candidate in (index - 1, index):
            if 0 <= candidate < self.__times.size and math.isclose(
                self.__times[candidate], t, rel_tol=1e-12, abs_tol=1e-9
            ):
                return candidate
        raise TimeNotObserved(f"{t} is not an observation time.")

    def close(self) -> None:
        """
        Release the trajectory store.
        """

        self.__storage.close()


class KalmanSmoother:
    """
    Kalman filter and Rauch-Tung-Striebel smoother over a joint model. The filter is incremental; analyzed
    states are streamed into a trajectory store and replaced by smoothed states in the backward pass, during
    which the forecasts are recomputed.
    """

    LOG_TAG = "gatemon.smoother"

    def __init__(self, model: JointModel, storage: Optional[TrajectoryStorage] = None) -> None:
        """
        Args:
            model: The joint model.
            storage: The trajectory store, in memory by default.
        """

        self.__model = model
        self.__storage = InMemoryStorage() if storage is None else storage
        self.__times: List[float] = []
        self.__levels: List[Tuple[float, float]] = []
        self.__last: Optional[GaussianState] = None
        self.__log_evidence = 0.0
        self.__noise = np.asarray(model.error.noise_var, dtype=np.float64).ravel()

    @property
    def log_evidence(self) -> float:
        """
        Returns:
            The summed predictive log densities of the steps so far.
        """

        return self.__log_evidence

    @property
    def steps(self) -> int:
        """
        Returns:
            The number of filter steps so far.
        """

        return len(self.__times)

    def forecast(self, state: GaussianState, t: float) -> GaussianState:
        """
        Args:
            state: A state.
            t: A later time.

        Returns:
            The state propagated to ``t``.
        """

        transition, noise = self.__model.transitions.get(t - state.time)
        mean = transition @ state.mean
        half = transition @ state.cov
        cov = _add_sparse(np.asarray((transition @ half.T).T, dtype=np.float64), noise)
        return GaussianState(mean, _symmetrized(cov), float(t), StateKind.FORECAST)

    def step(self, t: float, levels: Sequence[float], strains: Sequence[float]) -> FilterStep:
        """
        Assimilate the observation at one time.

        Args:
            t: The observation time, after the previous one.
            levels: The water levels (h⁺, h⁻).
            strains: The strain per gage, NaN where missing.

        Returns:
            The forecast and analyzed states and the predictive log density.

        Raises:
            NonIncreasingTimes: if ``t`` does not lie after the previous time.
            GageMismatch: if the number of strains does not match the model.
            InnovationSingular: if the innovation covariance is not positive definite.
            ExtrapolationError: if the levels lie outside the tabulated range.
        """

        index = len(self.__times)
        observed = np.asarray(strains, dtype=np.float64).ravel()
        if observed.size != self.__model.gage_count:
            raise GageMismatch(f"Got {observed.size} strains for a model of {self.__model.gage_count} gages.")

        if self.__last is None:
            sde = self.__model.sde
            forecast = GaussianState(np.array(sde.m0), np.array(sde.P0), float(t), StateKind.FORECAST)
        else:
            if not t > self.__last.time:
                raise NonIncreasingTimes(f"Observation time {t} at step {index} does not increase.", index)
            forecast = self.forecast(self.__last, t)

        present = np.isfinite(observed)
        log_density = 0.0
        if not present.any():
            analyzed = forecast._replace(kind=StateKind.ANALYZED)
        else:
            offset, operator = observation_operator(self.__model, float(t), levels)
            rows = operator[present]
            noise = self.__noise[present]
            innovation = observed[present] - offset[present] - rows @ forecast.mean

            projected = rows @ forecast.cov
            covariance = _symmetrized(projected @ rows.T + np.diag(noise))
            try:
                factor = scipy.linalg.cho_factor(covariance, lower=True)
            except np.linalg.LinAlgError as e:
                raise InnovationSingular(f"Innovation covariance singular at step {index}.", index) from e

            gain = scipy.linalg.cho_solve(factor, projected).T
            mean = forecast.mean + gain @ innovation

            reduced = forecast.cov - gain @ projected
            cov = reduced - (reduced @ rows.T) @ gain.T + (gain * noise) @ gain.T

            whitened = scipy.linalg.cho_solve(factor, innovation)
            log_det = 2 * float(np.sum(np.log(np.diag(factor[0]))))
            log_density = -0.5 * (float(innovation @ whitened) + log_det + innovation.size * LOG_2PI)

            analyzed = GaussianState(mean, _symmetrized(cov), float(t), StateKind.ANALYZED)

        level_pair = (float(levels[0]), float(levels[1]))
        self.__storage.store(index, analyzed)
        self.__times.append(float(t))
        self.__levels.append(level_pair)
        self.__last = analyzed
        self.__log_evidence += log_density

        logging.getLogger(KalmanSmoother.LOG_TAG).debug(
            f"Step {index} at t={t:.6f}: {int(present.sum())} gage(s), log density {log_density:.4f}."
        )

        return FilterStep(forecast, analyzed, log_density, level_pair)

    def filter(self, obs: ObservationSeries) -> float:
        """
        Run the filter over a whole series.

        Args:
            obs: The observations.

        Returns:
            The accumulated log evidence.
        """

        if obs.gage_count != self.__model.gage_count:
            raise GageMismatch(f"Got {obs.gage_count} gages for a model of {self.__model.gage_count} gages.")

        for t, levels, strains in zip(obs.times, obs.levels, obs.strains):
            self.step(float(t), levels, strains)

        logging.getLogger(KalmanSmoother.LOG_TAG).info(
            f"Filtered {len(obs)} times, log evidence {self.__log_evidence:.6g}."
        )
        return self.__log_evidence

    def smoothing_gain(self, analyzed: GaussianState, forecast: GaussianState) -> FloatArray:
        """
        Args:
            analyzed: The analyzed state at one time.
            forecast: Its forecast to the next time.

        Returns:
            The gain ``Σᵃ·F̄ᵀ·Σ⁻¹`` of the backward recursion. Falls back to a jittered solve if the
            forecast covariance is singular.
        """

        transition, _ = self.__model.transitions.get(forecast.time - analyzed.time)
        propagated = np.asarray(transition @ analyzed.cov, dtype=np.float64)
        try:
            factor = scipy.linalg.cho_factor(forecast.cov, lower=True)
        except np.linalg.LinAlgError:
            jitter = JITTER * float(np.trace(forecast.cov))
            logging.getLogger(KalmanSmoother.LOG_TAG).warning(
                f"Forecast covariance at t={forecast.time:.6f} is singular; regularizing with {jitter:.3e}."
            )
            factor = scipy.linalg.cho_factor(forecast.cov + jitter * np.eye(forecast.cov.shape[0]), lower=True)

        return np.asarray(scipy.linalg.cho_solve(factor, propagated).T, dtype=np.float64)

    def smooth(self) -> PosteriorTrajectory:
        """
        Run the backward pass over the filtered steps.

        Returns:
            The smoothed trajectory. The states in the store are replaced by smoothed ones.
        """

        count = len(self.__times)
        if count == 0:
            raise ValueError("Nothing to smooth before the first filter step.")

        following = self.__storage.load_state(count - 1)._replace(kind=StateKind.SMOOTHED)
        self.__storage.store(count - 1, following)

        for index in range(count - 2, -1, -1):
            analyzed = self.__storage.load_state(index)
            forecast = self.forecast(analyzed, self.__times[index + 1])
            gain = self.smoothing_gain(analyzed, forecast)

            mean = analyzed.mean + gain @ (following.mean - forecast.mean)
            cov = analyzed.cov + gain @ (following.cov - forecast.cov) @ gain.T
            following = GaussianState(mean, _symmetrized(cov), analyzed.time, StateKind.SMOOTHED)
            self.__storage.store(index, following)

        logging.getLogger(KalmanSmoother.LOG_TAG).info(f"Smoothed {count} times.")

        return self.trajectory(StateKind.SMOOTHED)

    def trajectory(self, kind: StateKind = StateKind.ANALYZED) -> PosteriorTrajectory:
        """
        Args:
            kind: The kind of the stored states.

        Returns:
            A trajectory over the current store, e.g. the filter-only result before smoothing.
        """

        return PosteriorTrajectory(
            self.__model,
            np.array(self.__times),
            np.array(self.__levels).reshape(-1, 2),
            self.__storage,
            self.__log_evidence,
            kind
        )


def kalman_filter(model: JointModel, obs: ObservationSeries) -> List[FilterStep]:
    """
    Args:
        model: The joint model.
        obs: The observations.

    Returns:
        The forecast and analyzed state of every observation time.
    """

    if obs.gage_count != model.gage_count:
        raise GageMismatch(f"Got {obs.gage_count} gages for a model of {model.gage_count} gages.")

    smoother = KalmanSmoother(model)
    return [
        smoother.step(float(t), levels, strains)
        for t, levels, strains in zip(obs.times, obs.levels, obs.strains)
    ]


def rts_smooth(model: JointModel, filtered: Sequence[FilterStep]) -> PosteriorTrajectory:
    """
    Args:
        model: The joint model.
        filtered: The complete output of :func:`kalman_filter`.

    Returns:
        The smoothed trajectory.
    """

    if len(filtered) == 0:
        raise ValueError("Nothing to smooth.")

    storage = InMemoryStorage()
    smoother = KalmanSmoother(model, storage)
    count = len(filtered)
    times = np.array([ step.analyzed.time for step in filtered ])
    log_evidence = sum(step.log_density for step in filtered)

    following = filtered[-1].analyzed._replace(kind=StateKind.SMOOTHED)
    storage.store(count - 1, following)
    for index in range(count - 2, -1, -1):
        analyzed = filtered[index].analyzed
        forecast = filtered[index + 1].forecast
        gain = smoother.smoothing_gain(analyzed, forecast)

        mean = analyzed.mean + gain @ (following.mean - forecast.mean)
        cov = analyzed.cov + gain @ (following.cov - forecast.cov) @ gain.T
        following = GaussianState(mean, _symmetrized(cov), analyzed.time, StateKind.SMOOTHED)
        storage.store(index, following)

    levels = np.array([ step.levels for step in filtered ], dtype=np.float64)
    return PosteriorTrajectory(model, times, levels, storage, log_evidence, StateKind.SMOOTHED)


def smooth_series(
    model: JointModel,
    obs: ObservationSeries,
    storage: Optional[TrajectoryStorage] = None,
    filter_only: bool = False
) -> PosteriorTrajectory:
    """
    Filter and, unless ``filter_only`` is set, smooth a whole series.

    Args:
        model: The joint model.
        obs: The observations.
        storage: The trajectory store, in memory by default.
        filter_only: Whether to skip the backward pass and return the analyzed states.

    Returns:
        The posterior trajectory.
    """

    smoother = KalmanSmoother(model, storage)
    smoother.filter(obs)
    if filter_only:
        return smoother.trajectory(StateKind.ANALYZED)
    return smoother.smooth()


def extract_posterior(
    traj: PosteriorTrajectory,
    what: Union[Quantity, str],
    t: float,
    side: Optional[Side] = None,
    x: Optional[Sequence[float]] = None
) -> Marginals:
    """
    Push the state at an observation time through the map of one physical quantity.

    Args:
        traj: The posterior trajectory.
        what: The quantity.
        t: An observation time.
        side: The boundary, required for loads.
        x: Arc-length coordinates for loads, the boundary DOFs by default.

    Returns:
        Pointwise means and standard deviations.

    Raises:
        UnknownQuantity: if the quantity is unknown, or loads are requested without a side.
        TimeNotObserved: if ``t`` is not an observation time.
    """

    try:
        quantity = Quantity(what.value if isinstance(what, Quantity) else what)
    except ValueError:
        raise UnknownQuantity(f"Unknown quantity '{what}'.") from None

    index = traj.index_of(t)
    state = traj.state(index)
    levels = traj.levels[index]

    if quantity is Quantity.LOADS:
        if side is None:
            raise UnknownQuantity("Loads need a side.")
        return loads_from_state(traj.model, state.mean, state.cov, levels, side, x)

    offset, operator = traj.model.component(quantity, traj.times[index], levels)
    return push_forward(offset, operator, state.mean, state.cov)
