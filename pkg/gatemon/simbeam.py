# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.interpolate
import scipy.sparse
import scipy.sparse.linalg
from typing_extensions import Final

from .assembly import ErrorModel, JointModel, LoadPrior, build_joint_model, simulate_prior
from .condense import DofInfo, LevelTable, ReducedElasticModel, dirichlet_reactions, schur_reduce, tributary_lengths
from .kernels import Constant, CoregionalModel, Kernel, Matern, MeanScaled, Periodic, Product, ScaleTable, Sum
from .klreduce import coordinate_seeds, level_grid_seeds, nystrom_eig, truncate_energy
from .smoother import ObservationSeries
from .types import FloatArray, GatemonException, IntArray, Side, StrainUnit


__all__ = [  # pylint: disable=unused-variable
    "BeamConfig",
    "BeamFem",
    "BeamProblem",
    "DegenerateElement",
    "GateConfig",
    "GateProblem",
    "HeatSolution",
    "Mesh",
    "SignalCoverage",
    "SimulationException",
    "SyntheticData",
    "SyntheticTruth",
    "assemble_beam_fem",
    "assemble_stiffness",
    "beam_error_model",
    "beam_load_priors",
    "build_beam_problem",
    "build_gate_problem",
    "edge_nodes",
    "elastic_strain",
    "gate_levels",
    "gate_thermal_model",
    "generate_synthetic",
    "lumped_edge_load",
    "nearest_elements",
    "observation_times",
    "plane_stress_matrix",
    "rectangle_mesh",
    "simulate_heat",
    "start_timestamp",
    "strain_rows",
    "temperature_signal",
    "timestamps_from_days",
    "true_loads",
    "water_levels"
]


LOG_TAG: Final = "gatemon.simbeam"

SECONDS_PER_DAY: Final = 86400.0
MINUTES_PER_DAY: Final = 1440.0

# Reference corners of the bilinear element, counter-clockwise.
_CORNERS: Final = np.array([ [ -1.0, -1.0 ], [ 1.0, -1.0 ], [ 1.0, 1.0 ], [ -1.0, 1.0 ] ])
_GAUSS: Final = 1.0 / math.sqrt(3.0)


class SimulationException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the simbeam module.
    """


class DegenerateElement(SimulationException):
    """
    Raised by :func:`assemble_stiffness` and :func:`strain_rows` in case an element has a non-positive
    Jacobian determinant.
    """


class SignalCoverage(SimulationException):
    """
    Raised by :func:`temperature_signal` in case a temperature table does not cover the simulated times.
    """


class Mesh(NamedTuple):
    # pylint: disable=invalid-name
    """
    A structured mesh of bilinear quadrilaterals. Node ``(i, j)`` has index ``j·(nx+1) + i``; element corners
    are listed counter-clockwise starting at the lower left.
    """

    nodes: FloatArray
    elements: IntArray
    nx: int
    ny: int


def rectangle_mesh(width: float, height: float, nx: int, ny: int) -> Mesh:
    """
    Args:
        width: Extent along x₁.
        height: Extent along x₂.
        nx: Elements along x₁.
        ny: Elements along x₂.

    Returns:
        The mesh of the rectangle ``[0, width] × [0, height]``.
    """

    if nx < 1 or ny < 1 or not width > 0 or not height > 0:
        raise ValueError(f"Invalid rectangle {width}×{height} with {nx}×{ny} elements.")

    grid_x, grid_y = np.meshgrid(np.linspace(0.0, width, nx + 1), np.linspace(0.0, height, ny + 1))
    nodes = np.column_stack([ grid_x.ravel(), grid_y.ravel() ])

    column, row = np.meshgrid(np.arange(nx), np.arange(ny))
    lower_left = (row * (nx + 1) + column).ravel()
    elements = np.column_stack([ lower_left, lower_left + 1, lower_left + nx + 2, lower_left + nx + 1 ])

    return Mesh(nodes, elements.astype(np.int64), nx, ny)


def plane_stress_matrix(youngs: float, poisson: float) -> FloatArray:
    """
    Args:
        youngs: Young's modulus.
        poisson: Poisson's ratio.

    Returns:
        The plane-stress elasticity matrix in Voigt notation ``(ε₁₁, ε₂₂, γ₁₂)``.
    """

    if not youngs > 0 or not -1.0 < poisson < 0.5:
        raise ValueError(f"Invalid material constants E={youngs}, ν={poisson}.")

    factor = youngs / (1.0 - poisson ** 2)
    return factor * np.array([
        [ 1.0, poisson, 0.0 ],
        [ poisson, 1.0, 0.0 ],
        [ 0.0, 0.0, 0.5 * (1.0 - poisson) ]
    ])


def _physical_gradients(mesh: Mesh, elements: IntArray, xi: float, eta: float) -> Tuple[FloatArray, FloatArray]:
    local = 0.25 * np.array([
        _CORNERS[:, 0] * (1.0 + _CORNERS[:, 1] * eta),
        _CORNERS[:, 1] * (1.0 + _CORNERS[:, 0] * xi)
    ])
    corners = mesh.nodes[mesh.elements[elements]]
    jacobian = np.einsum("ak,mkb->mab", local, corners)
    determinant = np.linalg.det(jacobian)
    if np.any(determinant <= 0):
        raise DegenerateElement(f"Element {int(elements[np.argmin(determinant)])} is degenerate.")

    gradients = np.linalg.solve(jacobian, np.broadcast_to(local, (elements.size, 2, 4)))
    return gradients, determinant


def _strain_matrices(gradients: FloatArray) -> FloatArray:
    strain = np.zeros((gradients.shape[0], 3, 8))
    strain[:, 0, 0::2] = gradients[:, 0]
    strain[:, 1, 1::2] = gradients[:, 1]
    strain[:, 2, 0::2] = gradients[:, 1]
    strain[:, 2, 1::2] = gradients[:, 0]
    return strain


def assemble_stiffness(
    mesh: Mesh,
    youngs: float,
    poisson: float,
    thickness: float = 1.0
) -> scipy.sparse.csr_matrix:
    """
    Assemble the unconstrained plane-stress stiffness. Normal strains are integrated with the 2×2 Gauss rule,
    the shear strain with the one-point rule, which removes parasitic shear in bending.

    Args:
        mesh: The mesh.
        youngs: Young's modulus.
        poisson: Poisson's ratio.
        thickness: The out-of-plane thickness.

    Returns:
        The symmetric stiffness over two DOFs per node, x₁ first.

    Raises:
        DegenerateElement: if an element has a non-positive Jacobian.
    """

    material = plane_stress_matrix(youngs, poisson)
    normal = material.copy()
    normal[2, 2] = 0.0
    shear = np.zeros_like(material)
    shear[2, 2] = material[2, 2]

    elements = np.arange(mesh.elements.shape[0])
    stiffness = np.zeros((elements.size, 8, 8))
    for xi in (-_GAUSS, _GAUSS):
        for eta in (-_GAUSS, _GAUSS):
            gradients, determinant = _physical_gradients(mesh, elements, xi, eta)
            strain = _strain_matrices(gradients)
            stiffness += determinant[:, None, None] * np.einsum("mki,kl,mlj->mij", strain, normal, strain)

    gradients, determinant = _physical_gradients(mesh, elements, 0.0, 0.0)
    strain = _strain_matrices(gradients)
    stiffness += 4.0 * determinant[:, None, None] * np.einsum("mki,kl,mlj->mij", strain, shear, strain)
    stiffness *= thickness

    dofs = np.empty((elements.size, 8), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.elements
    dofs[:, 1::2] = 2 * mesh.elements + 1

    size = 2 * mesh.nodes.shape[0]
    matrix = scipy.sparse.coo_matrix(
        (stiffness.ravel(), (np.repeat(dofs, 8, axis=1).ravel(), np.tile(dofs, (1, 8)).ravel())),
        shape=(size, size)
    ).tocsr()

    logging.getLogger(LOG_TAG).debug(f"Assembled {elements.size} elements into {size} DOFs.")

    return matrix


def strain_rows(mesh: Mesh, elements: Sequence[int]) -> scipy.sparse.csr_matrix:
    """
    Args:
        mesh: The mesh.
        elements: Element indices.

    Returns:
        One row per element evaluating the axial strain ε₁₁ at the element center.
    """

    elements = np.asarray(elements, dtype=np.int64)
    gradients, _ = _physical_gradients(mesh, elements, 0.0, 0.0)
    rows = np.repeat(np.arange(elements.size), 4)
    columns = (2 * mesh.elements[elements]).ravel()
    return scipy.sparse.csr_matrix(
        (gradients[:, 0].ravel(), (rows, columns)),
        shape=(elements.size, 2 * mesh.nodes.shape[0])
    )


def element_centers(mesh: Mesh) -> FloatArray:
    """
    Args:
        mesh: The mesh.

    Returns:
        The center of every element.
    """

    return np.asarray(mesh.nodes[mesh.elements].mean(axis=1), dtype=np.float64)


def nearest_elements(mesh: Mesh, positions: Sequence[Tuple[float, float]]) -> IntArray:
    """
    Args:
        mesh: The mesh.
        positions: Points inside the meshed rectangle.

    Returns:
        The element whose center lies nearest to every point, the first one on ties.
    """

    points = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    lower = mesh.nodes.min(axis=0)
    upper = mesh.nodes.max(axis=0)
    outside = np.any((points < lower) | (points > upper), axis=1)
    if outside.any():
        raise ValueError(f"The position {tuple(points[np.argmax(outside)])} lies outside the domain.")

    centers = element_centers(mesh)
    distances = np.linalg.norm(centers[np.newaxis, :, :] - points[:, np.newaxis, :], axis=2)
    return np.asarray(np.argmin(distances, axis=1), dtype=np.int64)


def edge_nodes(mesh: Mesh, edge: str) -> IntArray:
    """
    Args:
        mesh: The mesh.
        edge: One of ``left``, ``right``, ``bottom`` and ``top``.

    Returns:
        The nodes on the edge, ordered by increasing coordinate along it.
    """

    columns = mesh.nx + 1
    if edge == "left":
        return np.arange(mesh.ny + 1, dtype=np.int64) * columns
    if edge == "right":
        return np.arange(mesh.ny + 1, dtype=np.int64) * columns + mesh.nx
    if edge == "bottom":
        return np.arange(columns, dtype=np.int64)
    if edge == "top":
        return np.arange(columns, dtype=np.int64) + mesh.ny * columns
    raise ValueError(f"Unknown edge '{edge}'.")


def lumped_edge_load(mesh: Mesh, nodes: Sequence[int], component: int) -> FloatArray:
    """
    Args:
        mesh: The mesh.
        nodes: Nodes along a straight line, in order.
        component: 0 for x₁, 1 for x₂.

    Returns:
        The nodal forces of a unit traction along the line, lumped by tributary length.
    """

    nodes = np.asarray(nodes, dtype=np.int64)
    positions = mesh.nodes[nodes]
    arc = np.concatenate([ [ 0.0 ], np.cumsum(np.linalg.norm(np.diff(positions, axis=0), axis=1)) ])

    vector = np.zeros(2 * mesh.nodes.shape[0])
    vector[2 * nodes + component] = tributary_lengths(arc)
    return vector


class BeamConfig(NamedTuple):
    # pylint: disable=invalid-name
    """
    The cantilever beam experiment. Lengths in metres, forces in newtons, temperatures in degrees Celsius,
    times in days unless noted otherwise.
    """

    length: float = 12.0
    height: float = 1.0
    nx: int = 48
    ny: int = 4
    youngs: float = 200e9
    poisson: float = 0.3
    expansion: float = 1.2e-5
    heat_capacity: float = 3.6e6
    conductivity: float = 45.0
    reference_temperature: float = 20.0
    heat_nodes: int = 41
    max_heat_step: float = 3600.0
    gage_positions: Tuple[Tuple[float, float], ...] = ((2.0, 0.5), (6.0, 0.5), (10.0, 0.5))
    water_period: float = 0.25
    water_levels: Tuple[float, float] = (0.3, 0.9)
    unit_weight: float = 1e6
    temperature_amplitudes: Tuple[float, float] = (8.0, 5.0)
    temperature_phases: Tuple[float, float] = (0.3, 0.4)
    temperature_trend: float = 0.5
    temperature_csv: Optional[str] = None
    normal_mean: float = 0.0
    tangential_mean: float = -5e6
    load_bump: float = 1e6
    bump_centers: Tuple[float, float] = (0.5, 0.7)
    bump_width: float = 0.3
    load_variance: float = 2e12
    load_length: float = 5.0
    thermal_variance: float = 5e-9
    thermal_correlation: float = 0.9
    bias_variance: float = 1e-2
    bias: Tuple[float, ...] = (2e-4, -2e-4, 1e-4)
    noise_var: float = 1e-10
    n_times: int = 7200
    cadence_minutes: float = 1.0
    start: str = "2016-09-01T00:00:00+00:00"
    seed: int = 0


class BeamFem(NamedTuple):
    # pylint: disable=invalid-name
    """
    The assembled beam, restricted to the DOFs left free by the clamp on the right edge. Load vectors are
    nodal forces over the free DOFs.
    """

    mesh: Mesh
    K: scipy.sparse.csr_matrix
    B: scipy.sparse.csr_matrix
    free: IntArray
    boundary: Tuple[DofInfo, ...]
    normal: FloatArray
    tangential: FloatArray
    hydro: FloatArray
    gage_elements: IntArray
    gage_heights: FloatArray


def assemble_beam_fem(config: BeamConfig) -> BeamFem:
    """
    Assemble the clamped plane-stress beam, its gage strain map and its load vectors: unit normal and
    tangential tractions on the left edge, whose x₁ and x₂ DOFs form the quoin and miter sides, and the
    hydrostatic pressure on the bottom edge per unit water level.

    Args:
        config: The beam configuration.

    Returns:
        The assembled beam.

    Raises:
        DegenerateElement: if an element is degenerate.
    """

    if config.nx < 2 or config.ny < 2:
        raise ValueError(f"The beam needs at least 2×2 elements, got {config.nx}×{config.ny}.")
    if config.noise_var < 0:
        raise ValueError("The noise variance must be non-negative.")

    mesh = rectangle_mesh(config.length, config.height, config.nx, config.ny)
    stiffness = assemble_stiffness(mesh, config.youngs, config.poisson)
    size = stiffness.shape[0]

    clamped = edge_nodes(mesh, "right")
    free = np.setdiff1d(np.arange(size), np.concatenate([ 2 * clamped, 2 * clamped + 1 ]))
    position = np.full(size, -1, dtype=np.int64)
    position[free] = np.arange(free.size)

    gage_elements = nearest_elements(mesh, config.gage_positions)
    left = edge_nodes(mesh, "left")
    boundary = tuple(
        [ DofInfo(int(position[2 * node]), Side.QUOIN, tuple(mesh.nodes[node])) for node in left ]
        + [ DofInfo(int(position[2 * node + 1]), Side.MITER, tuple(mesh.nodes[node])) for node in left ]
    )

    return BeamFem(
        mesh=mesh,
        K=stiffness[free, :][:, free].tocsr(),
        B=strain_rows(mesh, gage_elements)[:, free].tocsr(),
        free=free,
        boundary=boundary,
        normal=lumped_edge_load(mesh, left, 0)[free],
        tangential=lumped_edge_load(mesh, left, 1)[free],
        hydro=config.unit_weight * lumped_edge_load(mesh, edge_nodes(mesh, "bottom"), 1)[free],
        gage_elements=gage_elements,
        gage_heights=element_centers(mesh)[gage_elements, 1]
    )


def water_levels(config: BeamConfig, times: Sequence[float]) -> FloatArray:
    """
    Args:
        config: The beam configuration.
        times: Times in days.

    Returns:
        The upper pool level h⁺ of the square wave, low during the first half of every period.
    """

    phase = np.mod(np.asarray(times, dtype=np.float64), config.water_period) / config.water_period
    low, high = config.water_levels
    return np.where(phase < 0.5, low, high) * config.height


def true_loads(config: BeamConfig, h_plus: Sequence[float]) -> Tuple[FloatArray, FloatArray]:
    """
    Args:
        config: The beam configuration.
        h_plus: Upper pool levels.

    Returns:
        The true normal and tangential tractions, uniform along the edge: the prior means plus one smooth
        bump in h⁺ each.
    """

    relative = np.asarray(h_plus, dtype=np.float64) / config.height
    bumps = [
        config.load_bump * np.exp(-((relative - center) / config.bump_width) ** 2)
        for center in config.bump_centers
    ]
    return config.normal_mean + bumps[0], config.tangential_mean + bumps[1]


def elastic_strain(
    fem: BeamFem,
    h_plus: Sequence[float],
    normal: Sequence[float],
    tangential: Sequence[float]
) -> FloatArray:
    """
    Solve the beam once per distinct load case, sharing one factorization.

    Args:
        fem: The assembled beam.
        h_plus: Upper pool level per time.
        normal: Normal traction per time.
        tangential: Tangential traction per time.

    Returns:
        The elastic gage strains, shape ``(times, gages)``.
    """

    cases = np.column_stack([
        np.asarray(h_plus, dtype=np.float64),
        np.asarray(normal, dtype=np.float64),
        np.asarray(tangential, dtype=np.float64)
    ])
    unique, inverse = np.unique(cases, axis=0, return_inverse=True)
    forces = (
        np.outer(fem.hydro, unique[:, 0])
        + np.outer(fem.normal, unique[:, 1])
        + np.outer(fem.tangential, unique[:, 2])
    )
    displacements = scipy.sparse.linalg.splu(fem.K.tocsc()).solve(forces)
    strains = np.asarray((fem.B @ displacements).T, dtype=np.float64)
    return strains[inverse.ravel()]


def start_timestamp(start: str) -> pd.Timestamp:
    """
    Args:
        start: An ISO-8601 timestamp.

    Returns:
        The timestamp in UTC; naive timestamps are taken as UTC.
    """

    stamp = pd.Timestamp(start)
    return stamp.tz_localize("UTC") if stamp.tzinfo is None else stamp.tz_convert("UTC")


def timestamps_from_days(start: pd.Timestamp, days: Sequence[float]) -> pd.DatetimeIndex:
    """
    Args:
        start: The time origin.
        days: Offsets from the origin in days.

    Returns:
        The timestamps, rounded to whole seconds.
    """

    offsets = pd.to_timedelta(np.asarray(days, dtype=np.float64) * SECONDS_PER_DAY, unit="s").round("s")
    return pd.DatetimeIndex(start + offsets)


def temperature_signal(config: BeamConfig, times: Sequence[float]) -> Tuple[FloatArray, FloatArray]:
    """
    Args:
        config: The beam configuration.
        times: Times in days since the configured start.

    Returns:
        The top and bottom surface temperatures. Without a CSV these are daily sinusoids around the
        reference temperature plus a linear trend centered on the simulated span.

    Raises:
        SignalCoverage: if the CSV lacks columns or does not cover the times.
    """

    times_array = np.asarray(times, dtype=np.float64)

    if config.temperature_csv is None:
        middle = 0.5 * (times_array.min() + times_array.max()) if times_array.size > 0 else 0.0
        trend = config.temperature_trend * (times_array - middle)
        top, bottom = (
            config.reference_temperature
            + amplitude * np.sin(2.0 * np.pi * (times_array - phase))
            + trend
            for amplitude, phase in zip(config.temperature_amplitudes, config.temperature_phases)
        )
        return top, bottom

    frame = pd.read_csv(config.temperature_csv)
    missing = { "time_iso8601", "t_top", "t_bottom" } - set(frame.columns)
    if missing:
        raise SignalCoverage(f"The temperature table lacks the column(s) {sorted(missing)}.")

    stamps = pd.to_datetime(frame["time_iso8601"], utc=True, format="ISO8601")
    days = ((stamps - start_timestamp(config.start)) / pd.Timedelta(days=1)).to_numpy(dtype=np.float64)
    order = np.argsort(days, kind="stable")
    days = days[order]
    if times_array.size > 0 and (times_array.min() < days[0] or times_array.max() > days[-1]):
        raise SignalCoverage("The temperature table does not cover the simulated times.")

    return (
        np.interp(times_array, days, frame["t_top"].to_numpy(dtype=np.float64)[order]),
        np.interp(times_array, days, frame["t_bottom"].to_numpy(dtype=np.float64)[order])
    )


class HeatSolution(NamedTuple):
    # pylint: disable=invalid-name
    """
    The temperature across the beam height over time and the resulting free thermal strain at the gages.
    """

    heights: FloatArray
    temperatures: FloatArray
    thermal_strain: FloatArray


def simulate_heat(
    config: BeamConfig,
    times: Sequence[float],
    gage_heights: Optional[Sequence[float]] = None,
    surface_temperatures: Optional[Tuple[Sequence[float], Sequence[float]]] = None
) -> HeatSolution:
    """
    Implicit Euler conduction across the beam height with prescribed surface temperatures. The ends are
    insulated, so the temperature varies with height only. The profile starts linear between the surfaces.

    Args:
        config: The beam configuration.
        times: Strictly increasing times in days.
        gage_heights: The heights at which thermal strain is sampled, the configured gage heights by default.
        surface_temperatures: The top and bottom temperatures per time, :func:`temperature_signal` by default.

    Returns:
        The solution; the thermal strain is ``a·(T(x₂) − T₀)``.
    """

    times_array = np.asarray(times, dtype=np.float64)
    if config.heat_nodes < 3:
        raise ValueError("The conduction grid needs at least three nodes.")
    if np.any(np.diff(times_array) <= 0):
        raise ValueError("Times must be strictly increasing.")

    if surface_temperatures is None:
        top, bottom = temperature_signal(config, times_array)
    else:
        top = np.asarray(surface_temperatures[0], dtype=np.float64)
        bottom = np.asarray(surface_temperatures[1], dtype=np.float64)
    heights = np.linspace(0.0, config.height, config.heat_nodes)
    if gage_heights is None:
        gage_heights = [ position[1] for position in config.gage_positions ]

    coupling = config.conductivity / (heights[1] - heights[0]) ** 2
    interior = config.heat_nodes - 2
    laplacian = coupling * scipy.sparse.diags(
        [ -np.ones(interior - 1), 2.0 * np.ones(interior), -np.ones(interior - 1) ],
        [ -1, 0, 1 ],
        format="csc"
    )
    identity = scipy.sparse.identity(interior, format="csc")
    factors: Dict[float, scipy.sparse.linalg.SuperLU] = {}

    temperatures = np.empty((times_array.size, config.heat_nodes))
    if times_array.size == 0:
        return HeatSolution(heights, temperatures, np.empty((0, len(gage_heights))))

    current = bottom[0] + (top[0] - bottom[0]) * heights / config.height
    temperatures[0] = current
    resampled = False
    for index in range(1, times_array.size):
        seconds = (times_array[index] - times_array[index - 1]) * SECONDS_PER_DAY
        substeps = max(1, int(math.ceil(seconds / config.max_heat_step)))
        if substeps > 1 and not resampled:
            logging.getLogger(LOG_TAG).warning(
                f"A step of {seconds:.0f} s exceeds the conduction step of {config.max_heat_step:.0f} s;"
                f" resampling the surface temperatures linearly."
            )
            resampled = True

        step = seconds / substeps
        key = round(step, 9)
        factor = factors.get(key)
        if factor is None:
            factor = factors[key] = scipy.sparse.linalg.splu(
                (config.heat_capacity / step * identity + laplacian).tocsc()
            )

        for substep in range(1, substeps + 1):
            fraction = substep / substeps
            surface_top = top[index - 1] + fraction * (top[index] - top[index - 1])
            surface_bottom = bottom[index - 1] + fraction * (bottom[index] - bottom[index - 1])
            rhs = config.heat_capacity / step * current[1:-1]
            rhs[0] += coupling * surface_bottom
            rhs[-1] += coupling * surface_top
            current = np.concatenate([ [ surface_bottom ], factor.solve(rhs), [ surface_top ] ])
        temperatures[index] = current

    sampled = scipy.interpolate.interp1d(heights, temperatures, axis=1)(np.asarray(gage_heights, dtype=np.float64))
    thermal_strain = config.expansion * (sampled - config.reference_temperature)

    return HeatSolution(heights, temperatures, thermal_strain)


class SyntheticTruth(NamedTuple):
    # pylint: disable=invalid-name
    """
    The separate components of synthetic observations. Elastic, thermal and bias components sum to the
    noise-free strain.
    """

    elastic: FloatArray
    thermal: FloatArray
    bias: FloatArray
    noise: FloatArray
    normal: FloatArray
    tangential: FloatArray


class SyntheticData(NamedTuple):
    # pylint: disable=invalid-name
    """
    Synthetic observations with their wall-clock timestamps and the truth they were generated from.
    """

    timestamps: pd.DatetimeIndex
    series: ObservationSeries
    truth: SyntheticTruth


def observation_times(n_times: int, cadence_minutes: float) -> FloatArray:
    """
    Args:
        n_times: The number of observations.
        cadence_minutes: The spacing in minutes.

    Returns:
        The observation times in days, starting at zero.
    """

    if n_times < 1 or not cadence_minutes > 0:
        raise ValueError(f"Invalid observation schedule of {n_times} times every {cadence_minutes} minutes.")
    return np.arange(n_times) * cadence_minutes / MINUTES_PER_DAY


def generate_synthetic(config: BeamConfig, fem: Optional[BeamFem] = None) -> SyntheticData:
    """
    Simulate the beam experiment: elastic strain under the true loads and the hydrostatic load, thermal strain
    from conduction, the gage biases and white noise. Deterministic given the configured seed.

    Args:
        config: The beam configuration.
        fem: The assembled beam, assembled from the configuration if omitted.

    Returns:
        The observations and their truth.
    """

    if fem is None:
        fem = assemble_beam_fem(config)
    gages = fem.B.shape[0]
    bias = np.asarray(config.bias, dtype=np.float64)
    if bias.shape != (gages,):
        raise ValueError(f"Expected {gages} gage biases, got {bias.size}.")

    times = observation_times(config.n_times, config.cadence_minutes)
    h_plus = water_levels(config, times)
    normal, tangential = true_loads(config, h_plus)

    elastic = elastic_strain(fem, h_plus, normal, tangential)
    thermal = simulate_heat(config, times, fem.gage_heights).thermal_strain

    rng = np.random.default_rng(config.seed)
    noise = math.sqrt(config.noise_var) * rng.standard_normal((times.size, gages))
    strains = elastic + thermal + bias + noise

    levels = np.column_stack([ h_plus, np.zeros(times.size) ])
    timestamps = timestamps_from_days(start_timestamp(config.start), times)

    logging.getLogger(LOG_TAG).info(
        f"Generated {times.size} synthetic observations of {gages} gages starting {timestamps[0].isoformat()}."
    )

    return SyntheticData(
        pd.DatetimeIndex(timestamps),
        ObservationSeries(times, levels, strains),
        SyntheticTruth(elastic, thermal, bias, noise, normal, tangential)
    )


class BeamProblem(NamedTuple):
    # pylint: disable=invalid-name
    """
    The beam experiment's inference problem.
    """

    fem: BeamFem
    reduced: ReducedElasticModel
    model: JointModel


def beam_load_priors(
    config: BeamConfig,
    reduced: ReducedElasticModel,
    spatial_energy: float = 0.99,
    height_energy: float = 0.9999
) -> Tuple[LoadPrior, LoadPrior]:
    """
    Load priors uniform along the edge (a constant spatial kernel carrying the load variance), Matérn 5/2 in
    h⁺ and static in time. The normal traction forms the quoin prior, the tangential traction the miter prior.

    Args:
        config: The beam configuration.
        reduced: The reduced beam.
        spatial_energy: The energy fraction kept by the spatial truncation.
        height_energy: The energy fraction kept by the water level truncation.

    Returns:
        The quoin and the miter prior.
    """

    levels = [ 0.0, config.height ]
    height_seeds, height_weights = level_grid_seeds((0.0, config.height), (0.0, 0.0))
    height_basis = truncate_energy(
        nystrom_eig(Matern(2.5, config.load_length, 1.0), height_seeds, height_weights),
        height_energy
    )

    priors: List[LoadPrior] = []
    for side, mean in ((Side.QUOIN, config.normal_mean), (Side.MITER, config.tangential_mean)):
        arc = reduced.arc_lengths(side)
        seeds, weights = coordinate_seeds(arc)
        spatial = truncate_energy(nystrom_eig(Constant(config.load_variance), seeds, weights), spatial_energy)
        table = LevelTable(levels, [ 0.0 ], np.full((2, 1, arc.size), mean))
        priors.append(LoadPrior(side, table, spatial, height_basis, Constant(1.0)))

    return priors[0], priors[1]


def beam_error_model(config: BeamConfig) -> ErrorModel:
    """
    Args:
        config: The beam configuration.

    Returns:
        The error model: one shared quasi-periodic thermal kernel plus a slow Matérn trend, mixed by
        ``Σ_T``, independent gage biases and the configured noise.
    """

    gages = len(config.gage_positions)
    kernel = Sum([
        Product([ Periodic(1.0, 0.8, 1.0), Matern(2.5, 0.8, 0.5) ]),
        Matern(1.5, 5.0, 0.5)
    ])
    thermal = CoregionalModel.shared(
        CoregionalModel.correlation_matrix(
            np.full(gages, math.sqrt(config.thermal_variance)),
            config.thermal_correlation
        ),
        kernel
    )
    return ErrorModel(thermal, config.bias_variance * np.eye(gages), np.full(gages, config.noise_var))


def build_beam_problem(config: BeamConfig, fem: Optional[BeamFem] = None) -> BeamProblem:
    """
    Condense the beam onto its left edge and gage regions and assemble the joint model.

    Args:
        config: The beam configuration.
        fem: The assembled beam, assembled from the configuration if omitted.

    Returns:
        The inference problem.
    """

    if fem is None:
        fem = assemble_beam_fem(config)

    samples = np.stack([ 0.0 * fem.hydro, config.height * fem.hydro ])
    hydro = LevelTable([ 0.0, config.height ], [ 0.0 ], samples[:, np.newaxis, :])
    reduced = schur_reduce(fem.K, fem.B, fem.boundary, hydro)
    quoin, miter = beam_load_priors(config, reduced)
    model = build_joint_model(reduced, quoin, miter, beam_error_model(config))

    return BeamProblem(fem, reduced, model)


class GateConfig(NamedTuple):
    # pylint: disable=invalid-name
    """
    The synthetic at-scale gate leaf. Lengths in inches, forces in kips, strain variances in microstrain²,
    times in days.
    """

    height: float = 396.0
    width: float = 420.0
    nx: int = 21
    ny: int = 281
    youngs: float = 29000.0
    poisson: float = 0.3
    girders: int = 13
    unit_weight: float = 3.61e-5
    thrust_span: float = 400.0
    gage_girders: Tuple[int, ...] = (3, 3, 5, 5, 7, 7, 9, 9, 11, 11, 12, 12, 13, 13)
    gage_locations: Tuple[float, ...] = (3, 11, 6, 19, 6, 19, 6, 19, 9, 26, 9, 26, 12, 32)
    thermal_variances: Tuple[Tuple[float, float], ...] = (
        ((225.0, 900.0),) * 5 + ((25.0, 400.0),) * 5 + ((2.5, 100.0),) * 4
    )
    h_plus_range: Tuple[float, float] = (340.0, 380.0)
    h_minus_range: Tuple[float, float] = (100.0, 380.0)
    level_grid: Tuple[int, int] = (3, 5)
    spatial_length: float = 10.0
    spatial_variance: float = 2.0
    beta: float = 5.0
    spatial_energy: float = 0.95
    height_length: float = 120.0
    height_energy: float = 0.99
    time_length: float = 0.1
    bias_variance: float = 1e4
    noise_var: float = 9.0
    lockage_period: float = 0.125
    n_times: int = 2200
    cadence_minutes: float = 1.0
    seed: int = 0


class GateProblem(NamedTuple):
    # pylint: disable=invalid-name
    """
    The synthetic at-scale problem with observations drawn from its prior.
    """

    reduced: ReducedElasticModel
    model: JointModel
    series: ObservationSeries


def _girder_rows(config: GateConfig, mesh: Mesh) -> IntArray:
    heights = config.height * (1.0 - (np.arange(1, config.girders + 1) - 0.5) / config.girders)
    spacing = config.height / config.ny
    return np.asarray(np.clip(np.round(heights / spacing), 1, mesh.ny), dtype=np.int64)


def _girder_pressures(config: GateConfig, heights: FloatArray, levels: Sequence[float]) -> FloatArray:
    upper = np.clip(float(levels[0]) - heights, 0.0, None)
    lower = np.clip(float(levels[1]) - heights, 0.0, None)
    return np.asarray(config.unit_weight * (upper - lower), dtype=np.float64)


def gate_thermal_model(config: GateConfig) -> CoregionalModel:
    """
    Args:
        config: The gate configuration.

    Returns:
        Independent per-gage thermal processes in strain²: a daily periodic component modulated by a
        short-range Matérn plus a long-range Matérn drift, with the configured microstrain² variances. Gages
        with equal variances share one kernel instance.
    """

    kernels: Dict[Tuple[float, float], Kernel] = {}
    per_gage = []
    for variances in config.thermal_variances:
        if variances not in kernels:
            kernels[variances] = Sum([
                Product([ Periodic(1.0, 0.5, 1.0), Matern(1.5, 0.5, variances[0]) ]),
                Matern(1.5, 28.0, variances[1])
            ])
        per_gage.append(kernels[variances])
    return CoregionalModel(np.eye(len(per_gage)), per_gage).scaled(StrainUnit.MICROSTRAIN.scale ** 2)


def gate_levels(config: GateConfig, times: Sequence[float]) -> FloatArray:
    """
    Args:
        config: The gate configuration.
        times: Times in days.

    Returns:
        The water levels: a slowly varying upper pool, and a lower pool that equalizes with it for the
        first third of every lockage cycle. Quantized to a quarter inch.
    """

    times_array = np.asarray(times, dtype=np.float64)
    low, high = config.h_plus_range
    h_plus = 0.5 * (low + high) + 0.4 * (high - low) * np.sin(2.0 * np.pi * times_array)
    phase = np.mod(times_array, config.lockage_period) / config.lockage_period
    h_minus = np.where(phase < 1.0 / 3.0, h_plus, config.h_minus_range[0] + 20.0)
    return np.round(np.column_stack([ h_plus, np.minimum(h_minus, config.h_minus_range[1]) ]) * 4.0) / 4.0


def build_gate_problem(config: GateConfig = GateConfig(), n_times: Optional[int] = None) -> GateProblem:
    """
    Build the synthetic at-scale problem: a plane-stress leaf clamped along its sill, loaded through 13
    girder rows whose hydrostatic thrust splits towards the quoin (left) and miter (right) contacts, with
    prior mean tractions from the contact reactions of the rigidly supported leaf, mean-scaled spatial
    priors and per-gage thermal kernels.

    Args:
        config: The gate configuration.
        n_times: Overrides the configured number of observation times.

    Returns:
        The problem with observations drawn from its prior.
    """

    log = logging.getLogger(LOG_TAG)

    gages = len(config.gage_girders)
    if len(config.gage_locations) != gages or len(config.thermal_variances) != gages:
        raise ValueError("Every gage needs a girder, a location and thermal variances.")

    mesh = rectangle_mesh(config.width, config.height, config.nx, config.ny)
    stiffness = assemble_stiffness(mesh, config.youngs, config.poisson)
    size = stiffness.shape[0]

    sill = edge_nodes(mesh, "bottom")
    free = np.setdiff1d(np.arange(size), np.concatenate([ 2 * sill, 2 * sill + 1 ]))
    position = np.full(size, -1, dtype=np.int64)
    position[free] = np.arange(free.size)
    K = stiffness[free, :][:, free].tocsr()  # pylint: disable=invalid-name

    quoin_nodes = edge_nodes(mesh, "left")[1:]
    miter_nodes = edge_nodes(mesh, "right")[1:-1]
    boundary = tuple(
        [ DofInfo(int(position[2 * node]), Side.QUOIN, tuple(mesh.nodes[node])) for node in quoin_nodes ]
        + [ DofInfo(int(position[2 * node]), Side.MITER, tuple(mesh.nodes[node])) for node in miter_nodes ]
    )

    rows = _girder_rows(config, mesh)
    row_heights = mesh.nodes[rows * (mesh.nx + 1), 1]
    spacing = config.height / config.girders
    unit_thrusts = np.empty((config.girders, free.size))
    for girder, row in enumerate(rows):
        nodes = np.arange(mesh.nx + 1) + row * (mesh.nx + 1)
        direction = np.sign(mesh.nodes[nodes, 0] - 0.5 * config.width)
        vector = lumped_edge_load(mesh, nodes, 0)
        vector[2 * nodes] *= direction * spacing * config.thrust_span / config.width
        unit_thrusts[girder] = vector[free]

    gage_positions = [
        (min(12.0 * location, config.width), float(row_heights[girder - 1]))
        for girder, location in zip(config.gage_girders, config.gage_locations)
    ]
    gage_elements = nearest_elements(mesh, gage_positions)
    B = strain_rows(mesh, gage_elements)[:, free].tocsr()  # pylint: disable=invalid-name

    h_plus_grid = np.linspace(*config.h_plus_range, config.level_grid[0])
    h_minus_grid = np.linspace(*config.h_minus_range, config.level_grid[1])
    grid_levels = [ (plus, minus) for plus in h_plus_grid for minus in h_minus_grid ]
    hydro_values = np.array([
        _girder_pressures(config, row_heights, levels) @ unit_thrusts for levels in grid_levels
    ])
    hydro = LevelTable(h_plus_grid, h_minus_grid, hydro_values.reshape(h_plus_grid.size, h_minus_grid.size, -1))

    reduced = schur_reduce(K, B, boundary, hydro)

    side_dofs = {
        side: [ dof.dof_id for dof in boundary if dof.side is side ] for side in (Side.QUOIN, Side.MITER)
    }
    contact = side_dofs[Side.QUOIN] + side_dofs[Side.MITER]
    reactions = np.array([ dirichlet_reactions(K, values, contact) for values in hydro_values ])

    nominal = (float(np.mean(config.h_plus_range)), float(np.mean(config.h_minus_range)))
    height_seeds, height_weights = level_grid_seeds(config.h_plus_range, config.h_minus_range)
    height_basis = truncate_energy(
        nystrom_eig(Matern(2.5, config.height_length, 1.0), height_seeds, height_weights),
        config.height_energy
    )

    priors: Dict[Side, LoadPrior] = {}
    offset = 0
    for side in (Side.QUOIN, Side.MITER):
        count = len(side_dofs[side])
        arc = reduced.arc_lengths(side)
        tractions = reactions[:, offset:offset + count] / reduced.tributary(side)
        offset += count
        mean = LevelTable(h_plus_grid, h_minus_grid, tractions.reshape(h_plus_grid.size, h_minus_grid.size, count))

        kernel = MeanScaled(
            Matern(1.5, config.spatial_length, config.spatial_variance),
            ScaleTable(arc, mean(nominal)),
            config.beta
        )
        seeds, weights = coordinate_seeds(arc)
        spatial = truncate_energy(nystrom_eig(kernel, seeds, weights), config.spatial_energy)
        priors[side] = LoadPrior(side, mean, spatial, height_basis, Matern(1.5, config.time_length, 1.0))

        log.info(f"The {side.value} prior keeps {spatial.size} spatial modes of {count} DOFs.")

    scale = StrainUnit.MICROSTRAIN.scale ** 2
    error = ErrorModel(
        gate_thermal_model(config),
        config.bias_variance * scale * np.eye(gages),
        np.full(gages, config.noise_var * scale)
    )
    model = build_joint_model(reduced, priors[Side.QUOIN], priors[Side.MITER], error)

    times = observation_times(config.n_times if n_times is None else n_times, config.cadence_minutes)
    levels = gate_levels(config, times)
    strains, _ = simulate_prior(model, times, levels, np.random.default_rng(config.seed))

    return GateProblem(reduced, model, ObservationSeries(times, levels, strains))
