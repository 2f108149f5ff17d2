import numpy as np
import pytest
import scipy.sparse.linalg

from gatemon.assembly import model_accounting
from gatemon.simbeam import (
    BeamConfig,
    GateConfig,
    SignalCoverage,
    assemble_beam_fem,
    assemble_stiffness,
    build_beam_problem,
    build_gate_problem,
    edge_nodes,
    generate_synthetic,
    rectangle_mesh,
    simulate_heat,
    strain_rows,
    temperature_signal
)
from gatemon.smoother import extract_posterior, smooth_series
from gatemon.types import Quantity, Side

from .data import (
    BEAM_BIAS,
    BEAM_BIAS_STD,
    GATE_BOUNDARY_DOFS,
    GATE_GAGES,
    GATE_MODE_BAND,
    GATE_TIMES,
    SYNTHETIC_ROWS
)


__all__ = [  # pylint: disable=unused-variable
    "test_beam_recovery",
    "test_cantilever_convergence",
    "test_gate_problem",
    "test_heat_rise_time",
    "test_patch",
    "test_rigid_body_modes",
    "test_synthetic_data",
    "test_temperature_csv_coverage"
]


def test_patch() -> None:
    """
    Test that a linear displacement field has uniform strain and no interior nodal forces.
    """

    mesh = rectangle_mesh(6.0, 2.0, 6, 4)
    stiffness = assemble_stiffness(mesh, 1000.0, 0.25)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]

    displacement = np.empty(2 * mesh.nodes.shape[0])
    displacement[0::2] = 0.003 * x + 0.001 * y
    displacement[1::2] = -0.002 * x + 0.004 * y

    np.testing.assert_allclose(strain_rows(mesh, range(mesh.elements.shape[0])) @ displacement, 0.003)

    boundary = np.concatenate([ edge_nodes(mesh, edge) for edge in ("left", "right", "bottom", "top") ])
    interior = np.setdiff1d(np.arange(mesh.nodes.shape[0]), boundary)
    forces = stiffness @ displacement
    np.testing.assert_allclose(forces[2 * interior], 0.0, atol=1e-10)
    np.testing.assert_allclose(forces[2 * interior + 1], 0.0, atol=1e-10)


def test_rigid_body_modes() -> None:
    """
    Test that the unconstrained stiffness annihilates translations and the rotation.
    """

    mesh = rectangle_mesh(12.0, 1.0, 12, 3)
    stiffness = assemble_stiffness(mesh, 200e9, 0.3)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    scale = float(np.abs(stiffness).max())

    modes = np.zeros((3, 2 * mesh.nodes.shape[0]))
    modes[0, 0::2] = 1.0
    modes[1, 1::2] = 1.0
    modes[2, 0::2] = -y
    modes[2, 1::2] = x

    for mode in modes:
        np.testing.assert_allclose(stiffness @ mode, 0.0, atol=1e-12 * scale)


def tip_deflection(config: BeamConfig) -> float:
    fem = assemble_beam_fem(config)
    middle = edge_nodes(fem.mesh, "left")[fem.mesh.ny // 2]
    displacement = scipy.sparse.linalg.spsolve(fem.K.tocsc(), fem.tangential)
    return float(displacement[np.searchsorted(fem.free, 2 * middle + 1)])


def test_cantilever_convergence() -> None:
    """
    Test that the clamped beam bends like a cantilever and that refining the mesh barely moves the tip.
    """

    config = BeamConfig()
    coarse = tip_deflection(config)
    fine = tip_deflection(config._replace(nx=96))

    assert abs(fine - coarse) < 0.02 * abs(fine)

    inertia = config.height ** 3 / 12.0
    bending = config.length ** 3 / (3.0 * config.youngs * inertia)
    assert coarse == pytest.approx(bending, rel=0.05)


def test_heat_rise_time() -> None:
    """
    Test that the mid-height temperature follows a surface step on the diffusion time scale.
    """

    config = BeamConfig()
    seconds = np.arange(0.0, 80000.0, 300.0)
    surface = np.where(seconds > 0, 30.0, 20.0)
    solution = simulate_heat(config, seconds / 86400.0, [ 0.5 ], (surface, surface))

    middle = solution.temperatures[:, config.heat_nodes // 2]
    assert solution.heights[config.heat_nodes // 2] == pytest.approx(0.5 * config.height)
    rise_time = seconds[np.argmax(middle >= 29.0)]

    time_scale = config.heat_capacity * (0.5 * config.height) ** 2 / config.conductivity
    assert rise_time == pytest.approx(time_scale, rel=0.2)
    assert solution.thermal_strain[-1, 0] == pytest.approx(config.expansion * 10.0, rel=1e-2)


def test_synthetic_data() -> None:
    """
    Test the shape, composition and reproducibility of the synthetic experiment.
    """

    config = BeamConfig()
    fem = assemble_beam_fem(config)
    data = generate_synthetic(config, fem)
    truth = data.truth

    assert len(data.series) == SYNTHETIC_ROWS
    assert len(data.timestamps) == SYNTHETIC_ROWS
    assert data.timestamps[0].isoformat() == "2016-09-01T00:00:00+00:00"
    assert data.timestamps[1].isoformat() == "2016-09-01T00:01:00+00:00"
    assert (np.diff(data.timestamps.asi8) == 60 * 10 ** 9).all()
    np.testing.assert_allclose(
        data.series.strains,
        truth.elastic + truth.thermal + truth.bias + truth.noise,
        rtol=1e-12,
        atol=1e-18
    )
    np.testing.assert_array_equal(truth.bias, BEAM_BIAS)
    assert set(np.unique(data.series.levels[:, 0])) == { 0.3, 0.9 }

    again = generate_synthetic(config, fem)
    np.testing.assert_array_equal(again.series.strains, data.series.strains)
    reseeded = generate_synthetic(config._replace(seed=1), fem)
    assert not np.array_equal(reseeded.truth.noise, truth.noise)
    np.testing.assert_array_equal(reseeded.truth.elastic, truth.elastic)


def test_temperature_csv_coverage(tmp_path) -> None:
    """
    Test that a temperature table must carry the surface columns and cover the simulated span.
    """

    path = tmp_path / "temperatures.csv"
    path.write_text(
        "time_iso8601,t_top,t_bottom\n"
        "2016-09-01T00:00:00+00:00,20.0,18.0\n"
        "2016-09-02T00:00:00+00:00,22.0,19.0\n"
    )
    config = BeamConfig(temperature_csv=str(path))

    top, bottom = temperature_signal(config, [ 0.0, 0.5, 1.0 ])
    np.testing.assert_allclose(top, [ 20.0, 21.0, 22.0 ])
    np.testing.assert_allclose(bottom, [ 18.0, 18.5, 19.0 ])

    with pytest.raises(SignalCoverage):
        temperature_signal(config, [ 0.0, 2.0 ])

    path.write_text("time_iso8601,t_top\n2016-09-01T00:00:00+00:00,20.0\n")
    with pytest.raises(SignalCoverage):
        temperature_signal(config, [ 0.0 ])


def test_beam_recovery() -> None:
    """
    Test that smoothing the synthetic beam recovers the gage biases and the boundary tractions.
    """

    config = BeamConfig(n_times=720, cadence_minutes=10.0)
    problem = build_beam_problem(config)
    data = generate_synthetic(config, problem.fem)
    trajectory = smooth_series(problem.model, data.series)

    try:
        last = float(data.series.times[-1])
        bias = extract_posterior(trajectory, Quantity.BIAS, last)
        assert np.all(np.abs(bias.mean - np.asarray(BEAM_BIAS)) <= 2.0 * bias.std)
        assert np.all(bias.std <= 3.0 * np.asarray(BEAM_BIAS_STD))
        assert np.all(bias.std >= np.asarray(BEAM_BIAS_STD) / 3.0)

        covered = []
        for index in range(0, len(data.series), 24):
            t = float(data.series.times[index])
            for side, truth in ((Side.QUOIN, data.truth.normal), (Side.MITER, data.truth.tangential)):
                loads = extract_posterior(trajectory, Quantity.LOADS, t, side)
                covered.extend(np.abs(loads.mean - truth[index]) <= 2.0 * loads.std)
        assert np.mean(covered) >= 0.9
    finally:
        trajectory.close()


def test_gate_problem() -> None:
    """
    Test the sizes of the at-scale problem, its spatial mode counts and its parameter count.
    """

    config = GateConfig()
    problem = build_gate_problem(config, n_times=5)
    reduced = problem.reduced

    assert len(reduced.side_indices(Side.QUOIN)) + len(reduced.side_indices(Side.MITER)) == GATE_BOUNDARY_DOFS
    assert problem.model.gage_count == GATE_GAGES
    assert problem.series.strains.shape == (5, GATE_GAGES)
    assert np.all(np.isfinite(problem.series.strains))

    for side in (Side.QUOIN, Side.MITER):
        spatial = problem.model.priors[side].spatial_basis
        assert GATE_MODE_BAND[0] <= spatial.size <= GATE_MODE_BAND[1]
        assert spatial.captured_fraction >= config.spatial_energy - 1e-12

    report = model_accounting(problem.model, GATE_TIMES)
    assert report.full_parameters == GATE_TIMES * (GATE_BOUNDARY_DOFS + GATE_GAGES)
    assert report.reduced_parameters < report.full_parameters
