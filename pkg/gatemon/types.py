# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import enum
from typing import List, Mapping, NamedTuple, Union

import numpy as np
import numpy.typing as npt


__all__ = [  # pylint: disable=unused-variable
    "FloatArray",
    "GatemonException",
    "GaussianState",
    "IntArray",
    "JSONType",
    "Quantity",
    "Side",
    "StateKind",
    "StrainUnit"
]


class GatemonException(Exception):
    """
    Parent type for all custom exceptions in this library.
    """


@enum.unique
class Side(enum.Enum):
    """
    The boundary a reduced degree of freedom belongs to.
    """

    QUOIN: str = "quoin"
    MITER: str = "miter"
    GAGE_REGION: str = "gage-region"


@enum.unique
class StateKind(enum.Enum):
    """
    The stage of the filtering/smoothing recursion a Gaussian state belongs to.
    """

    FORECAST: str = "forecast"
    ANALYZED: str = "analyzed"
    SMOOTHED: str = "smoothed"


@enum.unique
class Quantity(enum.Enum):
    """
    Physical quantities that can be extracted from a posterior trajectory.
    """

    LOADS: str = "loads"
    THERMAL: str = "thermal"
    BIAS: str = "bias"
    ELASTIC: str = "elastic"
    PREDICTED_STRAIN: str = "predicted-strain"


@enum.unique
class StrainUnit(enum.Enum):
    """
    Units strain values and strain variances can be declared in.
    """

    STRAIN: str = "strain"
    MICROSTRAIN: str = "microstrain"

    @property
    def scale(self) -> float:
        """
        Returns:
            The factor converting a value in this unit to strain.
        """

        return 1.0 if self is StrainUnit.STRAIN else 1e-6


FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


# An incomplete JSON type with finite levels of depth, enough for manifests and configuration echoes.
Primitives = Union[None, float, int, str, bool]
JSONType2 = Union[Primitives, List[Primitives], Mapping[str, Primitives]]
JSONType1 = Union[Primitives, List[JSONType2], Mapping[str, JSONType2]]
JSONType = Union[Primitives, List[JSONType1], Mapping[str, JSONType1]]


class GaussianState(NamedTuple):
    # pylint: disable=invalid-name
    """
    A Gaussian marginal of the joint latent state at one observation time.
    """

    mean: FloatArray
    cov: FloatArray
    time: float
    kind: StateKind
