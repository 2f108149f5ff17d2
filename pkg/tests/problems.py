from typing import List, NamedTuple, Tuple

import numpy as np
import scipy.sparse

from gatemon.condense import DofInfo, LevelTable
from gatemon.types import Side


__all__ = [  # pylint: disable=unused-variable
    "RandomSystem",
    "boundary_load",
    "random_system"
]


class RandomSystem(NamedTuple):
    # pylint: disable=invalid-name
    """
    A random sparse SPD system with a strain map, a boundary and a hydrostatic table over (h⁺, h⁻).
    """

    K: scipy.sparse.csr_matrix
    B: scipy.sparse.csr_matrix
    boundary: Tuple[DofInfo, ...]
    hydro: LevelTable


def random_system(seed: int, size: int = 40, per_side: int = 6, gages: int = 3) -> RandomSystem:
    """
    Args:
        seed: The seed of the random generator.
        size: The number of DOFs.
        per_side: The number of boundary DOFs per side.
        gages: The number of gages.

    Returns:
        The system. Quoin DOFs come first, miter DOFs next, both on straight vertical lines. The gages touch
        a handful of DOFs behind the boundary.
    """

    rng = np.random.default_rng(seed)

    factor = scipy.sparse.random(size, size, density=0.15, random_state=rng) + scipy.sparse.identity(size)
    K = (factor @ factor.T + size * scipy.sparse.identity(size)).tocsr()  # pylint: disable=invalid-name

    boundary: List[DofInfo] = []
    for offset, side in ((0, Side.QUOIN), (per_side, Side.MITER)):
        for position in range(per_side):
            boundary.append(DofInfo(offset + position, side, (float(offset), 0.5 * position)))

    columns = rng.choice(np.arange(2 * per_side, size), size=(gages, 2), replace=False)
    rows = np.repeat(np.arange(gages), 2)
    B = scipy.sparse.csr_matrix(  # pylint: disable=invalid-name
        (rng.standard_normal(2 * gages), (rows, columns.ravel())),
        shape=(gages, size)
    )

    hydro = LevelTable([ 0.0, 1.0 ], [ 0.0, 2.0 ], rng.standard_normal((2, 2, size)))
    return RandomSystem(K, B, tuple(boundary), hydro)


def boundary_load(system: RandomSystem, rng: np.random.Generator) -> np.ndarray:
    """
    Args:
        system: The system.
        rng: The random generator.

    Returns:
        A random load on the boundary DOFs of the full system, zero elsewhere.
    """

    load = np.zeros(system.K.shape[0])
    load[[ dof.dof_id for dof in system.boundary ]] = rng.standard_normal(len(system.boundary))
    return load
