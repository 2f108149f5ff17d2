# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import logging
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from typing_extensions import Final

from .types import FloatArray, GatemonException, IntArray, Side


__all__ = [  # pylint: disable=unused-variable
    "CondensationException",
    "DofInfo",
    "ExtrapolationError",
    "FactorizationFailed",
    "LevelTable",
    "ReducedElasticModel",
    "ReductionDomainError",
    "dirichlet_reactions",
    "reduced_strain",
    "schur_reduce",
    "tributary_lengths"
]


LOG_TAG: Final = "gatemon.condense"


class CondensationException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the condense module.
    """


class FactorizationFailed(CondensationException):
    """
    Raised by :func:`schur_reduce` and :func:`dirichlet_reactions` in case a stiffness block is singular or
    the condensed stiffness is not positive definite.
    """


class ReductionDomainError(CondensationException):
    """
    Raised by :func:`schur_reduce` in case a reduced index lies outside the system or the reduced set is
    empty.
    """


class ExtrapolationError(CondensationException):
    """
    Raised by :class:`LevelTable` lookups in case a water level lies outside the tabulated range.
    """

    def __init__(self, message: str, levels: Tuple[float, float]) -> None:
        super().__init__(message)
        self.levels = levels


class DofInfo(NamedTuple):
    # pylint: disable=invalid-name
    """
    A reduced degree of freedom: its index in the full system, the boundary it belongs to and the
    coordinates of its node.
    """

    dof_id: int
    side: Side
    coords: Tuple[float, ...]


class LevelTable:
    """
    Values tabulated on a tensor grid of water levels (h⁺, h⁻), interpolated bilinearly. A grid axis with a
    single level is degenerate and only admits that level.
    """

    def __init__(self, h_plus: Sequence[float], h_minus: Sequence[float], values: FloatArray) -> None:
        """
        Args:
            h_plus: Strictly increasing grid of the upper pool level.
            h_minus: Strictly increasing grid of the lower pool level.
            values: Array of shape ``(len(h_plus), len(h_minus), ...)``.
        """

        self.__h_plus = np.array(h_plus, dtype=np.float64).ravel()
        self.__h_minus = np.array(h_minus, dtype=np.float64).ravel()
        self.__values = np.array(values, dtype=np.float64)

        for name, grid in (("h_plus", self.__h_plus), ("h_minus", self.__h_minus)):
            if grid.size == 0 or np.any(np.diff(grid) <= 0) or not np.all(np.isfinite(grid)):
                raise ValueError(f"The {name} grid must be non-empty, finite and strictly increasing.")
        if self.__values.shape[:2] != (self.__h_plus.size, self.__h_minus.size):
            raise ValueError(
                f"Table values of shape {self.__values.shape} do not match a"
                f" {self.__h_plus.size}×{self.__h_minus.size} level grid."
            )
        if not np.all(np.isfinite(self.__values)):
            raise ValueError("Table values must be finite.")

        for array in (self.__h_plus, self.__h_minus, self.__values):
            array.flags.writeable = False

    @staticmethod
    def from_samples(levels: FloatArray, samples: FloatArray) -> LevelTable:
        """
        Args:
            levels: Water levels of shape ``(n, 2)`` forming a complete tensor grid in any order.
            samples: One value row per level, shape ``(n, ...)``.

        Returns:
            The table.
        """

        levels = np.asarray(levels, dtype=np.float64).reshape(-1, 2)
        samples = np.asarray(samples, dtype=np.float64)
        h_plus = np.unique(levels[:, 0])
        h_minus = np.unique(levels[:, 1])
        if h_plus.size * h_minus.size != levels.shape[0] or samples.shape[0] != levels.shape[0]:
            raise ValueError("The sampled water levels do not form a complete tensor grid.")

        values = np.empty((h_plus.size, h_minus.size) + samples.shape[1:])
        filled = np.zeros((h_plus.size, h_minus.size), dtype=bool)
        for row, (plus, minus) in enumerate(levels):
            i = int(np.searchsorted(h_plus, plus))
            j = int(np.searchsorted(h_minus, minus))
            if filled[i, j]:
                raise ValueError(f"The water level ({plus}, {minus}) is sampled twice.")
            filled[i, j] = True
            values[i, j] = samples[row]

        return LevelTable(h_plus, h_minus, values)

    @property
    def h_plus(self) -> FloatArray:
        """
        Returns:
            The upper pool level grid.
        """

        return self.__h_plus

    @property
    def h_minus(self) -> FloatArray:
        """
        Returns:
            The lower pool level grid.
        """

        return self.__h_minus

    @property
    def values(self) -> FloatArray:
        """
        Returns:
            The tabulated values.
        """

        return self.__values

    @property
    def levels(self) -> FloatArray:
        """
        Returns:
            All grid levels as an ``(n, 2)`` array, h⁺ varying slowest.
        """

        grid_plus, grid_minus = np.meshgrid(self.__h_plus, self.__h_minus, indexing="ij")
        return np.column_stack([ grid_plus.ravel(), grid_minus.ravel() ])

    @property
    def ranges(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """
        Returns:
            The covered ranges of h⁺ and h⁻.
        """

        return (
            (float(self.__h_plus[0]), float(self.__h_plus[-1])),
            (float(self.__h_minus[0]), float(self.__h_minus[-1]))
        )

    def map(self, function: Callable[[FloatArray], FloatArray]) -> LevelTable:
        """
        Args:
            function: Callable applied to the value array as a whole.

        Returns:
            A table on the same grid holding the transformed values.
        """

        return LevelTable(self.__h_plus, self.__h_minus, function(self.__values))

    def __call__(self, levels: Sequence[float]) -> FloatArray:
        """
        Args:
            levels: The water levels (h⁺, h⁻).

        Returns:
            The bilinearly interpolated value.

        Raises:
            ExtrapolationError: if a level lies outside its grid.
        """

        plus, minus = (float(level) for level in levels)
        i, s = self.__locate(self.__h_plus, plus, (plus, minus))
        j, u = self.__locate(self.__h_minus, minus, (plus, minus))

        def corner(a: int, b: int) -> FloatArray:
            return np.asarray(self.__values[min(a, self.__h_plus.size - 1), min(b, self.__h_minus.size - 1)])

        return np.asarray(
            (1 - s) * (1 - u) * corner(i, j)
            + s * (1 - u) * corner(i + 1, j)
            + (1 - s) * u * corner(i, j + 1)
            + s * u * corner(i + 1, j + 1),
            dtype=np.float64
        )

    @staticmethod
    def __locate(grid: FloatArray, value: float, levels: Tuple[float, float]) -> Tuple[int, float]:
        tolerance = 1e-9 * max(1.0, abs(float(grid[-1])), abs(float(grid[0])))
        if not grid[0] - tolerance <= value <= grid[-1] + tolerance:
            raise ExtrapolationError(
                f"Water level {value} outside the tabulated range [{grid[0]}, {grid[-1]}].",
                levels
            )
        if grid.size == 1:
            return 0, 0.0

        index = int(np.clip(np.searchsorted(grid, value, side="right") - 1, 0, grid.size - 2))
        fraction = (value - grid[index]) / (grid[index + 1] - grid[index])
        return index, float(np.clip(fraction, 0.0, 1.0))


def tributary_lengths(arc_lengths: Sequence[float]) -> FloatArray:
    """
    Args:
        arc_lengths: Non-decreasing arc-length coordinates of the DOFs along one boundary.

    Returns:
        The lumped tributary length of every DOF: half the distance to each neighbour. A single DOF gets
        unit length.
    """

    arc = np.asarray(arc_lengths, dtype=np.float64).ravel()
    if arc.size == 1:
        return np.ones(1)

    midpoints = 0.5 * (arc[1:] + arc[:-1])
    edges = np.concatenate([ [ arc[0] ], midpoints, [ arc[-1] ] ])
    return np.asarray(np.diff(edges), dtype=np.float64)


class ReducedElasticModel:
    """
    The condensed elastic model: dense reduced stiffness, strain map and solve operator, the hydrostatic
    load tabulated over water levels and the bookkeeping of the reduced degrees of freedom.
    """

    # pylint: disable=invalid-name

    def __init__(
        self,
        Kr: FloatArray,
        Br: FloatArray,
        Gr: FloatArray,
        hydro: Optional[LevelTable],
        dofs: Sequence[DofInfo]
    ) -> None:
        """
        Args:
            Kr: The condensed stiffness.
            Br: The condensed strain map.
            Gr: The solve operator ``Br·Kr⁻¹``.
            hydro: The reduced hydrostatic load tabulated over water levels, or ``None`` if there is none.
            dofs: One entry per reduced DOF, in reduced order.
        """

        self.__Kr = _frozen(Kr)
        self.__Br = _frozen(Br)
        self.__Gr = _frozen(Gr)
        self.__hydro = hydro
        self.__dofs = tuple(dofs)

        size = self.__Kr.shape[0]
        if self.__Kr.shape != (size, size) or self.__Br.shape[1] != size or self.__Gr.shape != self.__Br.shape:
            raise ValueError("Inconsistent reduced model dimensions.")
        if len(self.__dofs) != size or len({ dof.dof_id for dof in self.__dofs }) != size:
            raise ValueError("The DOF index must be a bijection onto the reduced DOFs.")
        if hydro is not None and hydro.values.shape[2:] != (size,):
            raise ValueError("The hydrostatic table does not match the reduced DOFs.")

        self.__side_indices: Dict[Side, IntArray] = {
            side: np.array([ i for i, dof in enumerate(self.__dofs) if dof.side is side ], dtype=np.int64)
            for side in Side
        }

    @property
    def Kr(self) -> FloatArray:
        """
        Returns:
            The condensed stiffness.
        """

        return self.__Kr

    @property
    def Br(self) -> FloatArray:
        """
        Returns:
            The condensed strain map.
        """

        return self.__Br

    @property
    def Gr(self) -> FloatArray:
        """
        Returns:
            The precomputed solve operator ``Br·Kr⁻¹``.
        """

        return self.__Gr

    @property
    def hydro(self) -> Optional[LevelTable]:
        """
        Returns:
            The tabulated reduced hydrostatic load, if any.
        """

        return self.__hydro

    @property
    def dofs(self) -> Tuple[DofInfo, ...]:
        """
        Returns:
            The reduced DOF index.
        """

        return self.__dofs

    @property
    def size(self) -> int:
        """
        Returns:
            The number of reduced DOFs.
        """

        return len(self.__dofs)

    @property
    def gage_count(self) -> int:
        """
        Returns:
            The number of strain gages.
        """

        return int(self.__Br.shape[0])

    def side_indices(self, side: Side) -> IntArray:
        """
        Args:
            side: The boundary.

        Returns:
            Reduced indices of the boundary's DOFs, in boundary order.
        """

        return self.__side_indices[side]

    def arc_lengths(self, side: Side) -> FloatArray:
        """
        Args:
            side: The boundary.

        Returns:
            The arc-length coordinate of every DOF of the boundary, starting at zero.
        """

        indices = self.__side_indices[side]
        if indices.size == 0:
            return np.zeros(0)

        coords = np.array([ self.__dofs[i].coords for i in indices ], dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] == 0:
            raise ValueError(f"The {side.value} DOFs carry no coordinates.")
        steps = np.linalg.norm(np.diff(coords, axis=0), axis=1)
        return np.concatenate([ [ 0.0 ], np.cumsum(steps) ])

    def tributary(self, side: Side) -> FloatArray:
        """
        Args:
            side: The boundary.

        Returns:
            The lumped tributary length of every DOF of the boundary, converting tractions to nodal forces.
        """

        indices = self.__side_indices[side]
        if indices.size == 0:
            return np.zeros(0)
        return tributary_lengths(self.arc_lengths(side))

    def hydro_load(self, levels: Sequence[float]) -> FloatArray:
        """
        Args:
            levels: The water levels (h⁺, h⁻).

        Returns:
            The reduced hydrostatic load ``f_r(h)``.

        Raises:
            ExtrapolationError: if the levels lie outside the tabulated range.
        """

        if self.__hydro is None:
            return np.zeros(self.size)
        return self.__hydro(levels)

    def __repr__(self) -> str:
        counts = ", ".join(f"{side.value}={self.__side_indices[side].size}" for side in Side)
        return f"ReducedElasticModel(gages={self.gage_count}, dofs={self.size}: {counts})"


def _frozen(array: FloatArray) -> FloatArray:
    result = np.array(array, dtype=np.float64)
    result.flags.writeable = False
    return result


def schur_reduce(
    K: scipy.sparse.spmatrix,
    B: scipy.sparse.spmatrix,
    dofs: Sequence[DofInfo],
    hydro: Optional[LevelTable] = None,
    include_strain_dofs: bool = True
) -> ReducedElasticModel:
    """
    Condense a stiffness system and its strain map onto boundary and gage degrees of freedom.

    The retained set consists of the given boundary DOFs followed by every further DOF the strain map
    touches, the latter tagged as gage region.

    Args:
        K: The sparse symmetric positive definite stiffness.
        B: The sparse strain map, one row per gage.
        dofs: The boundary DOFs to retain, in boundary order per side.
        hydro: The full hydrostatic load vectors tabulated over water levels, values of shape
            ``(n⁺, n⁻, N)``.
        include_strain_dofs: Whether to retain all DOFs the strain map touches.

    Returns:
        The reduced model.

    Raises:
        ReductionDomainError: if the reduced set is empty or an index is out of range.
        FactorizationFailed: if the condensed block is singular or the condensed stiffness not SPD.
    """

    # pylint: disable=invalid-name
    K = scipy.sparse.csc_matrix(K, dtype=np.float64)
    B = scipy.sparse.csc_matrix(B, dtype=np.float64)
    size = K.shape[0]
    if K.shape != (size, size) or B.shape[1] != size:
        raise ValueError(f"Stiffness of shape {K.shape} and strain map of shape {B.shape} do not match.")

    reduced_dofs: List[DofInfo] = list(dofs)
    for dof in reduced_dofs:
        if not 0 <= dof.dof_id < size:
            raise ReductionDomainError(f"Reduced DOF {dof.dof_id} outside the system of size {size}.")
    if include_strain_dofs:
        listed = { dof.dof_id for dof in reduced_dofs }
        for dof_id in np.unique(B.nonzero()[1]):
            if int(dof_id) not in listed:
                reduced_dofs.append(DofInfo(int(dof_id), Side.GAGE_REGION, ()))
    if len(reduced_dofs) == 0:
        raise ReductionDomainError("The reduced set is empty.")

    reduced = np.array([ dof.dof_id for dof in reduced_dofs ], dtype=np.int64)
    if np.unique(reduced).size != reduced.size:
        raise ReductionDomainError("A DOF is listed more than once.")
    condensed = np.setdiff1d(np.arange(size), reduced)

    K22 = K[reduced, :][:, reduced].toarray()
    hydro_full = None if hydro is None else hydro.values.reshape(-1, size).T

    if condensed.size > 0:
        K11 = K[condensed, :][:, condensed].tocsc()
        K12 = K[condensed, :][:, reduced].toarray()
        try:
            factor = scipy.sparse.linalg.splu(K11)
        except RuntimeError as e:
            raise FactorizationFailed(f"Condensed stiffness block of size {condensed.size} is singular.") from e

        K11_inv_K12 = factor.solve(K12)
        Kr = K22 - K12.T @ K11_inv_K12
        if hydro_full is not None:
            reduced_hydro = hydro_full[reduced] - K11_inv_K12.T @ hydro_full[condensed]
    else:
        Kr = K22
        if hydro_full is not None:
            reduced_hydro = hydro_full[reduced]

    Kr = 0.5 * (Kr + Kr.T)
    Br = B[:, reduced].toarray()
    if condensed.size > 0 and B[:, condensed].count_nonzero() > 0:
        raise ReductionDomainError("The strain map touches condensed DOFs.")

    try:
        Kr_factor = scipy.linalg.cho_factor(Kr)
    except np.linalg.LinAlgError as e:
        raise FactorizationFailed("The condensed stiffness is not positive definite.") from e

    Gr = scipy.linalg.cho_solve(Kr_factor, Br.T).T

    reduced_table = None
    if hydro is not None:
        reduced_table = LevelTable(
            hydro.h_plus,
            hydro.h_minus,
            reduced_hydro.T.reshape(hydro.h_plus.size, hydro.h_minus.size, reduced.size)
        )

    logging.getLogger(LOG_TAG).info(
        f"Condensed {size} DOFs onto {reduced.size} ({condensed.size} eliminated) for {Br.shape[0]} gages."
    )

    return ReducedElasticModel(Kr, Br, Gr, reduced_table, reduced_dofs)


def reduced_strain(model: ReducedElasticModel, levels: Sequence[float], w_r: FloatArray) -> FloatArray:
    """
    Args:
        model: The reduced model.
        levels: The water levels (h⁺, h⁻).
        w_r: The boundary load vector over the reduced DOFs, zero on gage-region DOFs.

    Returns:
        The gage strains ``Gr·(f_r(h) + w_r)``.

    Raises:
        ExtrapolationError: if the levels lie outside the tabulated hydrostatic range.
    """

    w_r = np.asarray(w_r, dtype=np.float64).ravel()
    if w_r.size != model.size:
        raise ValueError(f"Expected a load vector of length {model.size}, got {w_r.size}.")
    return np.asarray(model.Gr @ (model.hydro_load(levels) + w_r), dtype=np.float64)


def dirichlet_reactions(
    K: scipy.sparse.spmatrix,
    f: FloatArray,
    side_dofs: Sequence[int]
) -> FloatArray:
    """
    Reaction forces on the given DOFs when they are held fixed and the rest of the system is loaded by
    ``f``. These are the boundary forces a rigid contact would exert, used as prior load means.

    Args:
        K: The sparse symmetric stiffness, non-singular once the given DOFs are fixed.
        f: The applied load vector.
        side_dofs: The fixed DOFs.

    Returns:
        The reactions ``K_sf·u_f − f_s`` in the order of ``side_dofs``.

    Raises:
        FactorizationFailed: if the free block is singular.
    """

    # pylint: disable=invalid-name
    K = scipy.sparse.csc_matrix(K, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64).ravel()
    fixed = np.asarray(side_dofs, dtype=np.int64)
    free = np.setdiff1d(np.arange(K.shape[0]), fixed)

    try:
        free_displacement = scipy.sparse.linalg.splu(K[free, :][:, free].tocsc()).solve(f[free])
    except RuntimeError as e:
        raise FactorizationFailed("The free stiffness block is singular.") from e

    return np.asarray(K[fixed, :][:, free] @ free_displacement - f[fixed], dtype=np.float64)
