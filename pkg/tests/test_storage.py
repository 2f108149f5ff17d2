import os

import numpy as np
import pytest

from gatemon.storage import (
    DiskStorage,
    InMemoryStorage,
    StorageException,
    TrajectoryStorage,
    select_storage
)
from gatemon.types import GaussianState, StateKind


__all__ = [  # pylint: disable=unused-variable
    "test_disk_storage",
    "test_in_memory_storage",
    "test_select_storage"
]


def state(time: float) -> GaussianState:
    rng = np.random.default_rng(int(time * 10))
    root = rng.standard_normal((4, 4))
    return GaussianState(rng.standard_normal(4), root @ root.T, time, StateKind.ANALYZED)


def exercise(storage: TrajectoryStorage) -> None:
    assert len(storage) == 0
    assert storage.load(0) is None
    with pytest.raises(StorageException):
        storage.load_state(0)

    original = state(1.5)
    storage.store(0, original)
    storage.store(1, state(2.5))
    assert len(storage) == 2

    loaded = storage.load_state(0)
    np.testing.assert_array_equal(loaded.mean, original.mean)
    np.testing.assert_array_equal(loaded.cov, original.cov)
    assert loaded.time == 1.5
    assert loaded.kind is StateKind.ANALYZED
    with pytest.raises(ValueError):
        loaded.mean[0] = 0.0

    storage.store(0, original._replace(kind=StateKind.SMOOTHED))
    assert len(storage) == 2
    assert storage.load_state(0).kind is StateKind.SMOOTHED

    storage.delete(1)
    storage.delete(1)
    assert len(storage) == 1
    assert storage.load(1) is None


def test_in_memory_storage() -> None:
    """
    Test the dictionary-backed storage.
    """

    exercise(InMemoryStorage())


def test_disk_storage(tmp_path) -> None:
    """
    Test the file-backed storage and the removal of its files on close.
    """

    with DiskStorage(str(tmp_path)) as storage:
        assert isinstance(storage, DiskStorage)
        directory = storage.directory
        assert os.path.dirname(directory) == str(tmp_path)
        exercise(storage)
        assert len(os.listdir(directory)) == 1

    assert not os.path.exists(directory)
    with pytest.raises(StorageException):
        storage.directory  # pylint: disable=pointless-statement


def test_select_storage(tmp_path) -> None:
    """
    Test the choice between memory and disk by the size of the dense covariances.
    """

    in_memory = select_storage(100, 1000, 1024.0)
    assert isinstance(in_memory, InMemoryStorage)

    on_disk = select_storage(1000, 1000, 1.0, str(tmp_path))
    try:
        assert isinstance(on_disk, DiskStorage)
    finally:
        on_disk.close()
