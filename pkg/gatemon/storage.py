# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

from abc import ABC, abstractmethod
import logging
import os
import shutil
import tempfile
from types import TracebackType
from typing import Dict, Optional, Type

import numpy as np
from typing_extensions import Final

from .types import GatemonException, GaussianState, StateKind


__all__ = [  # pylint: disable=unused-variable
    "DiskStorage",
    "InMemoryStorage",
    "StorageException",
    "TrajectoryStorage",
    "select_storage"
]


LOG_TAG: Final = "gatemon.storage"


class StorageException(GatemonException):
    """
    Parent type for all exceptions specifically raised by methods of :class:`TrajectoryStorage`.
    """


def _freeze(state: GaussianState) -> GaussianState:
    mean = np.array(state.mean, dtype=np.float64)
    cov = np.array(state.cov, dtype=np.float64)
    mean.flags.writeable = False
    cov.flags.writeable = False
    return GaussianState(mean, cov, float(state.time), state.kind)


class TrajectoryStorage(ABC):
    """
    Key/value storage of Gaussian states, keyed by the index of the observation time.

    Warning:
        Writing (and deletion) operations must be performed right away, before returning from the method. Such
        operations must not be deferred.

    Note:
        States are frozen on store: their arrays become read-only copies, decoupling stored values from the
        application logic.
    """

    @abstractmethod
    def _load(self, key: int) -> Optional[GaussianState]:
        """
        Load a state.

        Args:
            key: The time index.

        Returns:
            The loaded state, or ``None`` if nothing is stored under the key.

        Raises:
            StorageException: if any kind of storage operation failed. Feel free to raise a subclass instead.
        """

    @abstractmethod
    def _store(self, key: int, state: GaussianState) -> None:
        """
        Store a state.

        Args:
            key: The time index.
            state: The frozen state to store under the given key.

        Raises:
            StorageException: if any kind of storage operation failed. Feel free to raise a subclass instead.
        """

    @abstractmethod
    def _delete(self, key: int) -> None:
        """
        Delete a state, if it exists.

        Args:
            key: The time index.

        Raises:
            StorageException: if any kind of storage operation failed. Feel free to raise a subclass instead.
                Do not raise if the key doesn't exist.
        """

    @abstractmethod
    def __len__(self) -> int:
        """
        Returns:
            The number of stored states.
        """

    def load(self, key: int) -> Optional[GaussianState]:
        """
        Load a state.

        Args:
            key: The time index.

        Returns:
            The loaded state, or ``None`` if nothing is stored under the key.

        Raises:
            StorageException: if any kind of storage operation failed. Forwarded from :meth:`_load`.
        """

        return self._load(key)

    def load_state(self, key: int) -> GaussianState:
        """
        Variation of :meth:`load` for states that must exist.

        Args:
            key: The time index.

        Returns:
            The stored state.

        Raises:
            StorageException: if no state is stored under the key, or forwarded from :meth:`_load`.
        """

        state = self.load(key)
        if state is None:
            raise StorageException(f"No state stored for time index {key}.")
        return state

    def store(self, key: int, state: GaussianState) -> None:
        """
        Store a state.

        Args:
            key: The time index.
            state: The state to store under the given key.

        Raises:
            StorageException: if any kind of storage operation failed. Forwarded from :meth:`_store`.
        """

        self._store(key, _freeze(state))

    def delete(self, key: int) -> None:
        """
        Delete a state, if it exists.

        Args:
            key: The time index.

        Raises:
            StorageException: if any kind of storage operation failed. Does not raise if the key doesn't
                exist. Forwarded from :meth:`_delete`.
        """

        self._delete(key)

    def close(self) -> None:
        """
        Release the resources held by the storage. The default implementation does nothing.
        """

    def __enter__(self) -> TrajectoryStorage:
        return self

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc_value: Optional[BaseException],
        traceback: Optional[TracebackType]
    ) -> None:
        self.close()


class InMemoryStorage(TrajectoryStorage):
    """
    Dictionary-backed storage.
    """

    def __init__(self) -> None:
        self.__states: Dict[int, GaussianState] = {}

    def _load(self, key: int) -> Optional[GaussianState]:
        return self.__states.get(key)

    def _store(self, key: int, state: GaussianState) -> None:
        self.__states[key] = state

    def _delete(self, key: int) -> None:
        self.__states.pop(key, None)

    def __len__(self) -> int:
        return len(self.__states)


class DiskStorage(TrajectoryStorage):
    """
    Storage writing one ``.npz`` file per state into a directory, for trajectories that exceed the memory
    budget.
    """

    def __init__(self, directory: Optional[str] = None) -> None:
        """
        Args:
            directory: Parent directory for the state files. A fresh temporary directory is created inside
                it, or inside the system default if omitted, and removed on :meth:`close`.
        """

        if directory is not None:
            os.makedirs(directory, exist_ok=True)
        self.__directory: Optional[str] = tempfile.mkdtemp(prefix="gatemon-states-", dir=directory)
        self.__count = 0

    @property
    def directory(self) -> str:
        """
        Returns:
            The directory holding the state files.

        Raises:
            StorageException: if the storage was closed.
        """

        if self.__directory is None:
            raise StorageException("The storage is closed.")
        return self.__directory

    def __path(self, key: int) -> str:
        return os.path.join(self.directory, f"state-{key:09d}.npz")

    def _load(self, key: int) -> Optional[GaussianState]:
        path = self.__path(key)
        if not os.path.exists(path):
            return None

        try:
            with np.load(path) as archive:
                state = GaussianState(
                    archive["mean"],
                    archive["cov"],
                    float(archive["time"]),
                    StateKind(str(archive["kind"]))
                )
        except (OSError, KeyError, ValueError) as e:
            raise StorageException(f"Could not read the state file {path}: {e}") from e

        return _freeze(state)

    def _store(self, key: int, state: GaussianState) -> None:
        path = self.__path(key)
        existed = os.path.exists(path)
        try:
            with open(path, "wb") as f:
                np.savez(f, mean=state.mean, cov=state.cov, time=state.time, kind=state.kind.value)
        except OSError as e:
            raise StorageException(f"Could not write the state file {path}: {e}") from e

        if not existed:
            self.__count += 1

    def _delete(self, key: int) -> None:
        path = self.__path(key)
        if os.path.exists(path):
            os.remove(path)
            self.__count -= 1

    def __len__(self) -> int:
        return self.__count

    def close(self) -> None:
        if self.__directory is not None:
            shutil.rmtree(self.__directory, ignore_errors=True)
            self.__directory = None


def select_storage(
    state_dim: int,
    n_times: int,
    memory_budget_mb: float,
    directory: Optional[str] = None
) -> TrajectoryStorage:
    """
    Args:
        state_dim: The dimension of the stored states.
        n_times: The number of states to store.
        memory_budget_mb: The budget for dense covariances in memory, in MiB.
        directory: Parent directory for disk-backed storage.

    Returns:
        In-memory storage if ``8·state_dim²·n_times`` bytes fit the budget, disk-backed storage otherwise.
    """

    required = 8 * state_dim ** 2 * n_times
    budget = memory_budget_mb * 2 ** 20
    if required <= budget:
        return InMemoryStorage()

    logging.getLogger(LOG_TAG).warning(
        f"Trajectory needs {required / 2 ** 20:.1f} MiB, exceeding the budget of {memory_budget_mb} MiB;"
        f" storing states on disk."
    )
    return DiskStorage(directory)
