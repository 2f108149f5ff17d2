import json
import os

import numpy as np
import pandas as pd
import pytest
import scipy.io
import scipy.sparse

from gatemon.bundles import (
    MalformedInput,
    config_hash,
    load_kl_basis,
    load_reduced_model,
    read_dof_sidecar,
    read_hydro_table,
    read_matrix_market,
    read_observations,
    save_kl_basis,
    save_reduced_model,
    write_manifest,
    write_observations,
    write_posterior
)
from gatemon.condense import schur_reduce
from gatemon.kernels import Matern
from gatemon.klreduce import nystrom_eig, truncate_energy, uniform_seeds
from gatemon.oracle import random_instance
from gatemon.smoother import NonIncreasingTimes, ObservationSeries, smooth_series
from gatemon.types import StrainUnit

from .problems import random_system


__all__ = [  # pylint: disable=unused-variable
    "test_config_hash",
    "test_dof_sidecar",
    "test_kl_bundle",
    "test_malformed_observations",
    "test_matrix_market",
    "test_mixed_precision_timestamps",
    "test_observations",
    "test_posterior_export",
    "test_reduced_bundle"
]


def test_reduced_bundle(tmp_path) -> None:
    """
    Test that a reduced model survives its bundle and that rewriting it is reproducible.
    """

    system = random_system(2)
    model = schur_reduce(system.K, system.B, system.boundary, system.hydro)
    directory = str(tmp_path / "reduced")

    manifest_path = save_reduced_model(directory, model, "abc")
    with open(manifest_path, "r", encoding="utf-8") as f:
        first = f.read()
    assert json.loads(first)["kind"] == "reduced-model"

    loaded = load_reduced_model(directory)
    np.testing.assert_array_equal(loaded.Kr, model.Kr)
    np.testing.assert_array_equal(loaded.Br, model.Br)
    np.testing.assert_array_equal(loaded.Gr, model.Gr)
    assert loaded.dofs == model.dofs
    np.testing.assert_array_equal(loaded.hydro_load((0.4, 1.2)), model.hydro_load((0.4, 1.2)))

    save_reduced_model(directory, loaded, "abc")
    with open(manifest_path, "r", encoding="utf-8") as f:
        assert f.read() == first


def test_kl_bundle(tmp_path) -> None:
    """
    Test that a truncated basis survives its bundle together with its truncation bookkeeping.
    """

    seeds, weights = uniform_seeds(0.0, 2.0, 21)
    basis = truncate_energy(nystrom_eig(Matern(2.5, 0.4, 3.0), seeds, weights), 0.99)
    directory = str(tmp_path / "kl")
    save_kl_basis(directory, basis)

    loaded = load_kl_basis(directory)
    assert loaded.size == basis.size
    assert loaded.kernel.to_config() == basis.kernel.to_config()
    assert loaded.total_energy == pytest.approx(basis.total_energy, rel=1e-15)
    assert loaded.captured_fraction == pytest.approx(basis.captured_fraction, rel=1e-15)

    points = np.linspace(0.0, 2.0, 7)
    np.testing.assert_allclose(loaded.interpolate(points), basis.interpolate(points), rtol=1e-14)

    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump({ "kernel": { "type": "unknown" } }, f)
    with pytest.raises(MalformedInput):
        load_kl_basis(directory)


def test_observations(tmp_path) -> None:
    """
    Test writing and reading observation CSVs, including missing cells and microstrain input.
    """

    strains = np.array([ [ 1e-4, np.nan ], [ 2e-4, 3e-4 ], [ np.nan, 4e-4 ] ])
    series = ObservationSeries([ 0.0, 0.25, 1.0 ], np.array([ [ 0.3, 0.0 ] ] * 3), strains)
    timestamps = pd.DatetimeIndex(pd.to_datetime([
        "2016-09-01T00:00:00Z", "2016-09-01T06:00:00Z", "2016-09-02T00:00:00Z"
    ], utc=True))
    path = str(tmp_path / "observations.csv")
    write_observations(path, timestamps, series)

    data = read_observations(path)
    np.testing.assert_allclose(data.series.times, series.times)
    np.testing.assert_array_equal(data.series.mask, series.mask)
    np.testing.assert_allclose(data.series.strains[series.mask], strains[series.mask])
    assert data.series.gage_ids == ("gage_0", "gage_1")
    assert data.start == timestamps[0]

    in_microstrain = read_observations(path, StrainUnit.MICROSTRAIN)
    np.testing.assert_allclose(in_microstrain.series.strains[1], [ 2e-10, 3e-10 ])


def test_malformed_observations(tmp_path) -> None:
    """
    Test that broken observation files are rejected with the offending row.
    """

    path = tmp_path / "observations.csv"
    header = "time_iso8601,h_plus,h_minus,gage_0\n"

    path.write_text(header + "2016-09-01T00:00:00Z,0.3,0.0,1.0\nyesterday,0.3,0.0,2.0\n")
    with pytest.raises(MalformedInput) as error:
        read_observations(str(path))
    assert "row 1" in str(error.value)
    assert error.value.path == str(path)

    path.write_text(header + "2016-09-01T00:00:00Z,0.3,0.0,1.0\n2016-09-01T00:00:00Z,0.3,0.0,2.0\n")
    with pytest.raises(NonIncreasingTimes) as increasing:
        read_observations(str(path))
    assert increasing.value.row == 1

    path.write_text("time_iso8601,h_plus,gage_0\n2016-09-01T00:00:00Z,0.3,1.0\n")
    with pytest.raises(MalformedInput):
        read_observations(str(path))

    path.write_text("time_iso8601,h_plus,h_minus\n2016-09-01T00:00:00Z,0.3,0.0\n")
    with pytest.raises(MalformedInput):
        read_observations(str(path))

    with pytest.raises(MalformedInput):
        read_observations(str(tmp_path / "absent.csv"))


def test_dof_sidecar(tmp_path) -> None:
    """
    Test the DOF sidecar reader.
    """

    path = tmp_path / "dofs.csv"
    path.write_text("dof_id,side,x1,x2\n4,quoin,0.0,1.5\n7,miter,,\n")
    dofs = read_dof_sidecar(str(path))
    assert [ dof.dof_id for dof in dofs ] == [ 4, 7 ]
    assert dofs[0].coords == (0.0, 1.5)
    assert dofs[1].coords == ()

    path.write_text("dof_id,side\n4,hinge\n")
    with pytest.raises(MalformedInput) as error:
        read_dof_sidecar(str(path))
    assert "row 0" in str(error.value)

    path.write_text("dof_id\n4\n")
    with pytest.raises(MalformedInput):
        read_dof_sidecar(str(path))


def test_matrix_market(tmp_path) -> None:
    """
    Test reading sparse operators and the hydrostatic table.
    """

    matrix = scipy.sparse.random(6, 6, density=0.4, random_state=np.random.default_rng(0), format="coo")
    path = str(tmp_path / "K.mtx")
    scipy.io.mmwrite(path, matrix)
    np.testing.assert_allclose(read_matrix_market(path).toarray(), matrix.toarray())

    (tmp_path / "broken.mtx").write_text("not a matrix\n")
    with pytest.raises(MalformedInput):
        read_matrix_market(str(tmp_path / "broken.mtx"))

    columns = np.arange(12.0).reshape(3, 4)
    scipy.io.mmwrite(str(tmp_path / "hydro.mtx"), columns)
    (tmp_path / "levels.csv").write_text("h_plus,h_minus\n0.0,0.0\n1.0,0.0\n0.0,2.0\n1.0,2.0\n")
    table = read_hydro_table(str(tmp_path / "hydro.mtx"), str(tmp_path / "levels.csv"))
    np.testing.assert_allclose(table((1.0, 0.0)), columns[:, 1])
    np.testing.assert_allclose(table((0.5, 1.0)), columns.mean(axis=1))

    (tmp_path / "levels.csv").write_text("h_plus,h_minus\n0.0,0.0\n1.0,0.0\n")
    with pytest.raises(MalformedInput):
        read_hydro_table(str(tmp_path / "hydro.mtx"), str(tmp_path / "levels.csv"))


def test_config_hash(tmp_path) -> None:
    """
    Test that configuration hashes ignore key order and that manifests record file digests.
    """

    assert config_hash({ "a": 1, "b": [ 1, 2 ] }) == config_hash({ "b": [ 1, 2 ], "a": 1 })
    assert config_hash({ "a": 1 }) != config_hash({ "a": 2 })

    (tmp_path / "x.csv").write_text("1,2\n")
    path = write_manifest(str(tmp_path), [ "x.csv" ], "digest", { "kind": "test" })
    with open(path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    assert manifest["config_hash"] == "digest"
    assert manifest["kind"] == "test"
    assert len(manifest["files"]["x.csv"]) == 64


def test_posterior_export(tmp_path) -> None:
    """
    Test the export of posterior marginals.
    """

    model, series = random_instance(30, n_times=10)
    trajectory = smooth_series(model, series)
    files = write_posterior(str(tmp_path), trajectory, series.gage_ids, summary={ "seconds": 1.0 })

    assert "summary.json" in files
    assert "posterior_loads_quoin.csv" in files
    assert all(os.path.exists(tmp_path / name) for name in files)

    bias = pd.read_csv(tmp_path / "posterior_bias.csv")
    assert list(bias.columns) == [ "time", "mean_gage_0", "mean_gage_1", "std_gage_0", "std_gage_1" ]
    assert len(bias) == 10

    with open(tmp_path / "summary.json", "r", encoding="utf-8") as f:
        summary = json.load(f)
    assert summary["kind"] == "smoothed"
    assert summary["seconds"] == 1.0
    assert summary["log_evidence"] == pytest.approx(trajectory.log_evidence)


def test_mixed_precision_timestamps(tmp_path) -> None:
    """
    Test that timestamps with and without fractional seconds are read alike.
    """

    path = tmp_path / "observations.csv"
    path.write_text(
        "time_iso8601,h_plus,h_minus,gage_0\n"
        "2016-09-01T00:00:00+00:00,0.3,0.0,1.0\n"
        "2016-09-01T00:00:59.999999996+00:00,0.3,0.0,2.0\n"
        "2016-09-01T00:02:00.5Z,0.3,0.0,3.0\n"
        "2016-09-01T06:00:00+02:00,0.3,0.0,4.0\n"
    )

    data = read_observations(str(path))
    np.testing.assert_allclose(
        data.series.times * 86400.0,
        [ 0.0, 59.999999996, 120.5, 4.0 * 3600.0 ],
        rtol=0.0,
        atol=1e-6
    )
    assert data.timestamps[3].isoformat() == "2016-09-01T04:00:00+00:00"
