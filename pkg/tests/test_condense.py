import numpy as np
import pytest
import scipy.sparse
import scipy.sparse.linalg

from gatemon.condense import (
    DofInfo,
    ExtrapolationError,
    FactorizationFailed,
    LevelTable,
    ReductionDomainError,
    dirichlet_reactions,
    reduced_strain,
    schur_reduce,
    tributary_lengths
)
from gatemon.simbeam import BeamConfig, assemble_beam_fem, build_beam_problem
from gatemon.types import Side

from .problems import boundary_load, random_system


__all__ = [  # pylint: disable=unused-variable
    "test_beam_condensation",
    "test_dirichlet_reactions",
    "test_dof_bookkeeping",
    "test_level_table",
    "test_reduction_errors",
    "test_schur_agreement",
    "test_tributary_lengths"
]


def reduced_vector(model, full: np.ndarray) -> np.ndarray:
    return np.array([ full[dof.dof_id] for dof in model.dofs ])


def test_schur_agreement() -> None:
    """
    Test that the condensed model predicts the same gage strains as a full solve.
    """

    rng = np.random.default_rng(3)
    for seed in range(3):
        system = random_system(seed)
        model = schur_reduce(system.K, system.B, system.boundary, system.hydro)
        solver = scipy.sparse.linalg.splu(system.K.tocsc())

        for levels in ((0.0, 0.0), (0.3, 1.7), (1.0, 2.0)):
            load = boundary_load(system, rng)
            full = system.B @ solver.solve(system.hydro(levels) + load)
            condensed = reduced_strain(model, levels, reduced_vector(model, load))
            np.testing.assert_allclose(condensed, full, atol=1e-10 * max(1.0, float(np.abs(full).max())))

        np.testing.assert_allclose(model.Kr, model.Kr.T)
        assert np.linalg.eigvalsh(model.Kr).min() > 0
        np.testing.assert_allclose(model.Gr @ model.Kr, model.Br, atol=1e-10)


def test_beam_condensation() -> None:
    """
    Test the condensed beam against the full finite element solution.
    """

    config = BeamConfig()
    fem = assemble_beam_fem(config)
    problem = build_beam_problem(config, fem)
    reduced = problem.reduced
    solver = scipy.sparse.linalg.splu(fem.K.tocsc())

    for h_plus, normal, tangential in ((0.3, 0.0, -5e6), (0.9, 1e6, -4e6)):
        forces = h_plus * fem.hydro + normal * fem.normal + tangential * fem.tangential
        full = fem.B @ solver.solve(forces)

        load = np.zeros(reduced.size)
        for side, magnitude in ((Side.QUOIN, normal), (Side.MITER, tangential)):
            load[reduced.side_indices(side)] = magnitude * reduced.tributary(side)
        condensed = reduced_strain(reduced, (h_plus, 0.0), load)

        np.testing.assert_allclose(condensed, full, rtol=1e-9, atol=1e-9 * float(np.abs(full).max()))


def test_dof_bookkeeping() -> None:
    """
    Test the bijection between reduced and full DOFs and the per-side geometry.
    """

    system = random_system(11)
    model = schur_reduce(system.K, system.B, system.boundary, system.hydro)

    assert model.dofs[:len(system.boundary)] == system.boundary
    gage_dofs = { int(dof) for dof in system.B.nonzero()[1] }
    assert { dof.dof_id for dof in model.dofs if dof.side is Side.GAGE_REGION } == gage_dofs
    assert model.size == len(system.boundary) + len(gage_dofs)
    assert model.gage_count == 3

    np.testing.assert_allclose(model.arc_lengths(Side.QUOIN), 0.5 * np.arange(6))
    np.testing.assert_allclose(model.tributary(Side.MITER), [ 0.25, 0.5, 0.5, 0.5, 0.5, 0.25 ])
    assert model.side_indices(Side.MITER).tolist() == list(range(6, 12))

    without_strain = schur_reduce(system.K, system.B.multiply(0).tocsr(), system.boundary, None, False)
    assert without_strain.size == len(system.boundary)
    assert not without_strain.hydro_load((0.5, 1.0)).any()


def test_reduction_errors() -> None:
    """
    Test that inconsistent reduced sets and singular systems are rejected.
    """

    system = random_system(5)
    with pytest.raises(ReductionDomainError):
        schur_reduce(system.K, system.B, [ DofInfo(99, Side.QUOIN, (0.0, 0.0)) ])
    with pytest.raises(ReductionDomainError):
        schur_reduce(system.K, system.B, [], None, False)
    with pytest.raises(ReductionDomainError):
        schur_reduce(system.K, system.B, system.boundary, None, False)
    with pytest.raises(ReductionDomainError):
        schur_reduce(system.K, system.B, system.boundary + system.boundary[:1])

    singular = scipy.sparse.csr_matrix(np.diag([ 1.0 ] * 10 + [ 0.0 ] * 30))
    with pytest.raises(FactorizationFailed):
        schur_reduce(singular, scipy.sparse.csr_matrix((1, 40)), system.boundary[:2], None, False)


def test_level_table() -> None:
    """
    Test bilinear interpolation over water levels and the refusal to extrapolate.
    """

    values = np.array([ [ [ 0.0 ], [ 2.0 ] ], [ [ 4.0 ], [ 8.0 ] ] ])
    table = LevelTable([ 0.0, 1.0 ], [ 10.0, 20.0 ], values)
    assert table((0.0, 10.0))[0] == pytest.approx(0.0)
    assert table((1.0, 20.0))[0] == pytest.approx(8.0)
    assert table((0.5, 15.0))[0] == pytest.approx(3.5)
    assert table.ranges == ((0.0, 1.0), (10.0, 20.0))

    with pytest.raises(ExtrapolationError) as error:
        table((1.5, 15.0))
    assert error.value.levels == (1.5, 15.0)

    samples = np.array([ [ 1.0, 10.0 ], [ 0.0, 20.0 ], [ 0.0, 10.0 ], [ 1.0, 20.0 ] ])
    rebuilt = LevelTable.from_samples(samples, np.array([ [ 4.0 ], [ 2.0 ], [ 0.0 ], [ 8.0 ] ]))
    np.testing.assert_array_equal(rebuilt.values, values)

    degenerate = LevelTable([ 0.0, 1.0 ], [ 0.0 ], np.array([ [ [ 1.0 ] ], [ [ 3.0 ] ] ]))
    assert degenerate((0.25, 0.0))[0] == pytest.approx(1.5)
    with pytest.raises(ExtrapolationError):
        degenerate((0.25, 0.1))

    with pytest.raises(ValueError):
        LevelTable([ 1.0, 0.0 ], [ 0.0 ], np.zeros((2, 1, 1)))


def test_tributary_lengths() -> None:
    """
    Test the lumping of tractions onto boundary DOFs.
    """

    np.testing.assert_allclose(tributary_lengths([ 0.0, 1.0, 3.0 ]), [ 0.5, 1.5, 1.0 ])
    np.testing.assert_allclose(tributary_lengths([ 2.0 ]), [ 1.0 ])
    assert tributary_lengths(np.linspace(0.0, 7.0, 15)).sum() == pytest.approx(7.0)


def test_dirichlet_reactions() -> None:
    """
    Test that the reactions of a held boundary balance the applied load.
    """

    system = random_system(8)
    rng = np.random.default_rng(8)
    load = rng.standard_normal(system.K.shape[0])
    fixed = [ dof.dof_id for dof in system.boundary ]

    reactions = dirichlet_reactions(system.K, load, fixed)
    free = np.setdiff1d(np.arange(system.K.shape[0]), fixed)
    displacement = np.zeros(system.K.shape[0])
    displacement[free] = scipy.sparse.linalg.spsolve(system.K[free, :][:, free].tocsc(), load[free])

    np.testing.assert_allclose(reactions, (system.K @ displacement)[fixed] - load[fixed], atol=1e-10)
