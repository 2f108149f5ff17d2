# This import from future (theoretically) enables sphinx_autodoc_typehints to handle type aliases better
from __future__ import annotations  # pylint: disable=unused-variable

import hashlib
import json
import logging
import os
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.io
import scipy.sparse
from typing_extensions import Final

from .condense import DofInfo, LevelTable, ReducedElasticModel
from .kernels import KernelDomainError, kernel_from_config
from .klreduce import KlBasis
from .smoother import ObservationSeries, PosteriorTrajectory, extract_posterior
from .types import FloatArray, GatemonException, JSONType, Quantity, Side, StrainUnit
from .version import __version__


__all__ = [  # pylint: disable=unused-variable
    "BundleException",
    "MalformedInput",
    "ObservationData",
    "config_hash",
    "file_digest",
    "load_kl_basis",
    "load_reduced_model",
    "posterior_frame",
    "read_json",
    "read_dense",
    "read_dof_sidecar",
    "read_hydro_table",
    "read_matrix_market",
    "read_observations",
    "save_kl_basis",
    "save_reduced_model",
    "write_dense",
    "write_dof_sidecar",
    "write_json",
    "write_manifest",
    "write_observations",
    "write_posterior",
    "write_truth"
]


LOG_TAG: Final = "gatemon.bundles"

FLOAT_FORMAT: Final = "%.17g"
MANIFEST: Final = "manifest.json"
TIME_COLUMN: Final = "time_iso8601"


class BundleException(GatemonException):
    """
    Parent type for all exceptions specifically raised by the bundles module.
    """


class MalformedInput(BundleException):
    """
    Raised by the readers of this module in case an input file is missing, unreadable or malformed.
    """

    def __init__(self, message: str, path: str) -> None:
        super().__init__(message)

        self.path = path


def _json_dump(path: str, content: JSONType) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(content, f, indent=4, sort_keys=True)
        f.write("\n")


def _json_load(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, ValueError) as e:
        raise MalformedInput(f"Could not read the JSON file {path}: {e}", path) from e


def config_hash(config: JSONType) -> str:
    """
    Args:
        config: A JSON-serializable configuration.

    Returns:
        The SHA-256 hex digest of its canonical serialization.
    """

    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def file_digest(path: str) -> str:
    """
    Args:
        path: Path to a file.

    Returns:
        The SHA-256 hex digest of the file's content.
    """

    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    directory: str,
    files: Sequence[str],
    config_digest: str,
    extra: Optional[Dict[str, JSONType]] = None
) -> str:
    """
    Args:
        directory: The output directory.
        files: The names of the files written to the directory.
        config_digest: The hash of the configuration the files were produced from.
        extra: Further entries.

    Returns:
        The path of the manifest. Its content only depends on the files and the configuration.
    """

    manifest: Dict[str, JSONType] = {
        "config_hash": config_digest,
        "files": { name: file_digest(os.path.join(directory, name)) for name in sorted(files) },
        "gatemon_version": __version__["short"]
    }
    manifest.update(extra or {})

    path = os.path.join(directory, MANIFEST)
    _json_dump(path, manifest)
    return path


def read_matrix_market(path: str) -> scipy.sparse.csr_matrix:
    """
    Args:
        path: Path to a Matrix Market file in coordinate format.

    Returns:
        The sparse matrix.

    Raises:
        MalformedInput: if the file is missing or not valid Matrix Market.
    """

    try:
        matrix = scipy.io.mmread(path)
    except (OSError, ValueError, IndexError, TypeError) as e:
        raise MalformedInput(f"Could not read the Matrix Market file {path}: {e}", path) from e

    return scipy.sparse.csr_matrix(matrix, dtype=np.float64)


def read_dense(path: str) -> FloatArray:
    """
    Args:
        path: Path to a comma-separated matrix without header.

    Returns:
        The matrix, at least two-dimensional.
    """

    try:
        return np.asarray(np.loadtxt(path, delimiter=",", ndmin=2), dtype=np.float64)
    except (OSError, ValueError) as e:
        raise MalformedInput(f"Could not read the matrix {path}: {e}", path) from e


def write_dense(path: str, matrix: FloatArray) -> None:
    """
    Args:
        path: The target path.
        matrix: The matrix, written with round-trip precision.
    """

    np.savetxt(path, np.atleast_2d(np.asarray(matrix, dtype=np.float64)), delimiter=",", fmt=FLOAT_FORMAT)


def read_dof_sidecar(path: str) -> List[DofInfo]:
    """
    Args:
        path: Path to a CSV with the columns ``dof_id`` and ``side`` and optional coordinates ``x1`` to
            ``x3``.

    Returns:
        One entry per row, in file order. Empty coordinates are dropped.
    """

    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as e:
        raise MalformedInput(f"Could not read the DOF sidecar {path}: {e}", path) from e

    missing = { "dof_id", "side" } - set(frame.columns)
    if missing:
        raise MalformedInput(f"The DOF sidecar {path} lacks the column(s) {sorted(missing)}.", path)

    axes = [ column for column in ("x1", "x2", "x3") if column in frame.columns ]
    dofs = []
    for row, record in enumerate(frame.itertuples(index=False)):
        values = record._asdict()
        try:
            side = Side(str(values["side"]))
        except ValueError:
            raise MalformedInput(f"Unknown side '{values['side']}' in row {row} of {path}.", path) from None
        coords = tuple(float(values[axis]) for axis in axes if np.isfinite(float(values[axis])))
        dofs.append(DofInfo(int(values["dof_id"]), side, coords))
    return dofs


def write_dof_sidecar(path: str, dofs: Sequence[DofInfo]) -> None:
    """
    Args:
        path: The target path.
        dofs: The DOF entries.
    """

    rows = []
    for dof in dofs:
        coords = list(dof.coords) + [ np.nan ] * (3 - len(dof.coords))
        rows.append([ dof.dof_id, dof.side.value ] + coords[:3])
    pd.DataFrame(rows, columns=[ "dof_id", "side", "x1", "x2", "x3" ]).to_csv(
        path,
        index=False,
        float_format=FLOAT_FORMAT
    )


def _read_levels(path: str) -> FloatArray:
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as e:
        raise MalformedInput(f"Could not read the level index {path}: {e}", path) from e
    if { "h_plus", "h_minus" } - set(frame.columns):
        raise MalformedInput(f"The level index {path} needs the columns h_plus and h_minus.", path)
    return frame[[ "h_plus", "h_minus" ]].to_numpy(dtype=np.float64)


def read_hydro_table(path: str, levels_path: str) -> LevelTable:
    """
    Args:
        path: Path to a dense Matrix Market file with one hydrostatic load column per water level.
        levels_path: Path to a CSV with the columns ``h_plus`` and ``h_minus``, one row per column.

    Returns:
        The tabulated hydrostatic load.
    """

    try:
        columns = np.asarray(scipy.io.mmread(path), dtype=np.float64)
    except (OSError, ValueError, IndexError, TypeError) as e:
        raise MalformedInput(f"Could not read the Matrix Market file {path}: {e}", path) from e
    if scipy.sparse.issparse(columns):
        columns = columns.toarray()

    levels = _read_levels(levels_path)
    if columns.shape[1] != levels.shape[0]:
        raise MalformedInput(
            f"The hydrostatic table has {columns.shape[1]} columns but {levels.shape[0]} levels are listed.",
            path
        )
    try:
        return LevelTable.from_samples(levels, columns.T)
    except ValueError as e:
        raise MalformedInput(f"Invalid level index {levels_path}: {e}", levels_path) from e


def save_reduced_model(directory: str, model: ReducedElasticModel, config_digest: str) -> str:
    """
    Write a reduced model as a directory of dense CSV matrices plus a manifest. Rewriting the same model
    produces identical files.

    Args:
        directory: The bundle directory, created if necessary.
        model: The reduced model.
        config_digest: The hash of the producing configuration.

    Returns:
        The path of the manifest.
    """

    os.makedirs(directory, exist_ok=True)
    files = [ "stiffness.csv", "strain_map.csv", "solve_operator.csv", "dofs.csv" ]
    write_dense(os.path.join(directory, "stiffness.csv"), model.Kr)
    write_dense(os.path.join(directory, "strain_map.csv"), model.Br)
    write_dense(os.path.join(directory, "solve_operator.csv"), model.Gr)
    write_dof_sidecar(os.path.join(directory, "dofs.csv"), model.dofs)

    if model.hydro is not None:
        pd.DataFrame(model.hydro.levels, columns=[ "h_plus", "h_minus" ]).to_csv(
            os.path.join(directory, "hydro_levels.csv"),
            index=False,
            float_format=FLOAT_FORMAT
        )
        write_dense(os.path.join(directory, "hydro.csv"), model.hydro.values.reshape(-1, model.size))
        files += [ "hydro_levels.csv", "hydro.csv" ]

    logging.getLogger(LOG_TAG).info(f"Wrote the reduced model of {model.size} DOFs to {directory}.")

    return write_manifest(directory, files, config_digest, {
        "kind": "reduced-model",
        "reduced_dofs": model.size,
        "gages": model.gage_count
    })


def load_reduced_model(directory: str) -> ReducedElasticModel:
    """
    Args:
        directory: A bundle written by :func:`save_reduced_model`.

    Returns:
        The reduced model.
    """

    manifest = _json_load(os.path.join(directory, MANIFEST))
    hydro = None
    if "hydro.csv" in manifest.get("files", {}):
        levels = _read_levels(os.path.join(directory, "hydro_levels.csv"))
        hydro = LevelTable.from_samples(levels, read_dense(os.path.join(directory, "hydro.csv")))

    try:
        return ReducedElasticModel(
            read_dense(os.path.join(directory, "stiffness.csv")),
            read_dense(os.path.join(directory, "strain_map.csv")),
            read_dense(os.path.join(directory, "solve_operator.csv")),
            hydro,
            read_dof_sidecar(os.path.join(directory, "dofs.csv"))
        )
    except ValueError as e:
        raise MalformedInput(f"Inconsistent reduced model bundle {directory}: {e}", directory) from e


def save_kl_basis(directory: str, basis: KlBasis) -> str:
    """
    Args:
        directory: The bundle directory, created if necessary.
        basis: The basis.

    Returns:
        The path of the manifest, which records the kernel and the truncation.
    """

    os.makedirs(directory, exist_ok=True)
    write_dense(os.path.join(directory, "seeds.csv"), basis.seeds)
    write_dense(os.path.join(directory, "weights.csv"), basis.weights[:, np.newaxis])
    write_dense(os.path.join(directory, "eigvals.csv"), basis.eigenvalues[:, np.newaxis])
    write_dense(os.path.join(directory, "eigvecs.csv"), basis.eigenvectors)

    kernel = basis.kernel.to_config()
    return write_manifest(
        directory,
        [ "seeds.csv", "weights.csv", "eigvals.csv", "eigvecs.csv" ],
        config_hash(kernel),
        {
            "kind": "kl-basis",
            "kernel": kernel,
            "modes": basis.size,
            "total_energy": basis.total_energy,
            "requested_fraction": basis.requested_fraction,
            "captured_fraction": basis.captured_fraction
        }
    )


def load_kl_basis(directory: str) -> KlBasis:
    """
    Args:
        directory: A bundle written by :func:`save_kl_basis`.

    Returns:
        The basis.
    """

    manifest = _json_load(os.path.join(directory, MANIFEST))
    try:
        kernel = kernel_from_config(manifest["kernel"], directory)
    except (KeyError, KernelDomainError) as e:
        raise MalformedInput(f"The KL bundle {directory} has no valid kernel: {e}", directory) from e

    modes = int(manifest.get("modes", 0))
    eigenvalues = read_dense(os.path.join(directory, "eigvals.csv")).ravel() if modes > 0 else np.zeros(0)
    seeds = read_dense(os.path.join(directory, "seeds.csv"))
    eigenvectors = (
        read_dense(os.path.join(directory, "eigvecs.csv")).reshape(seeds.shape[0], modes)
        if modes > 0 else np.zeros((seeds.shape[0], 0))
    )

    return KlBasis(
        kernel,
        seeds,
        read_dense(os.path.join(directory, "weights.csv")).ravel(),
        eigenvalues,
        eigenvectors,
        manifest.get("total_energy"),
        float(manifest.get("requested_fraction", 1.0))
    )


class ObservationData(NamedTuple):
    # pylint: disable=invalid-name
    """
    An ingested observation CSV: the series in days since ``start`` and the original timestamps.
    """

    series: ObservationSeries
    timestamps: pd.DatetimeIndex
    start: pd.Timestamp


def read_observations(
    path: str,
    unit: StrainUnit = StrainUnit.STRAIN,
    start: Optional[pd.Timestamp] = None
) -> ObservationData:
    """
    Args:
        path: Path to a CSV with the columns ``time_iso8601``, ``h_plus``, ``h_minus`` and ``gage_*``.
            Empty cells mark missing values.
        unit: The strain unit of the gage columns.
        start: The time origin, the first timestamp by default.

    Returns:
        The ingested observations.

    Raises:
        MalformedInput: if the file is unreadable, lacks columns or holds an unparsable timestamp.
        NonIncreasingTimes: naming the first data row whose time does not increase.
    """

    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as e:
        raise MalformedInput(f"Could not read the observations {path}: {e}", path) from e

    missing = { TIME_COLUMN, "h_plus", "h_minus" } - set(frame.columns)
    if missing:
        raise MalformedInput(f"The observations {path} lack the column(s) {sorted(missing)}.", path)
    gages = [ column for column in frame.columns if str(column).startswith("gage_") ]
    if len(gages) == 0:
        raise MalformedInput(f"The observations {path} contain no gage_* column.", path)

    stamps = pd.to_datetime(frame[TIME_COLUMN], utc=True, errors="coerce", format="ISO8601")
    if stamps.isna().any():
        row = int(np.flatnonzero(stamps.isna().to_numpy())[0])
        raise MalformedInput(f"Unparsable timestamp in row {row} of {path}.", path)

    origin = stamps.iloc[0] if start is None else start
    days = ((stamps - origin) / pd.Timedelta(days=1)).to_numpy(dtype=np.float64)

    series = ObservationSeries(
        days,
        frame[[ "h_plus", "h_minus" ]].to_numpy(dtype=np.float64),
        frame[gages].to_numpy(dtype=np.float64),
        [ str(gage) for gage in gages ],
        unit
    )

    logging.getLogger(LOG_TAG).info(f"Read {len(series)} observations of {len(gages)} gages from {path}.")

    return ObservationData(series, pd.DatetimeIndex(stamps), origin)


def _iso(timestamps: pd.DatetimeIndex) -> List[str]:
    return [ stamp.isoformat() for stamp in timestamps ]


def write_observations(path: str, timestamps: pd.DatetimeIndex, series: ObservationSeries) -> None:
    """
    Args:
        path: The target path.
        timestamps: One timestamp per observation.
        series: The observations, written in strain.
    """

    frame = pd.DataFrame({
        TIME_COLUMN: _iso(timestamps),
        "h_plus": series.levels[:, 0],
        "h_minus": series.levels[:, 1]
    })
    for index, gage in enumerate(series.gage_ids):
        frame[gage] = series.strains[:, index]
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_truth(directory: str, timestamps: pd.DatetimeIndex, truth: Any, gage_ids: Sequence[str]) -> List[str]:
    """
    Args:
        directory: The output directory.
        timestamps: One timestamp per observation.
        truth: A :class:`~gatemon.simbeam.SyntheticTruth`.
        gage_ids: The gage names.

    Returns:
        The names of the written files: one CSV per strain component, the loads and the biases.
    """

    files = []
    for component in ("elastic", "thermal", "noise"):
        name = f"truth_{component}.csv"
        frame = pd.DataFrame(getattr(truth, component), columns=list(gage_ids))
        frame.insert(0, TIME_COLUMN, _iso(timestamps))
        frame.to_csv(os.path.join(directory, name), index=False, float_format=FLOAT_FORMAT)
        files.append(name)

    pd.DataFrame({
        TIME_COLUMN: _iso(timestamps),
        "normal": truth.normal,
        "tangential": truth.tangential
    }).to_csv(os.path.join(directory, "truth_loads.csv"), index=False, float_format=FLOAT_FORMAT)
    pd.DataFrame({ "gage": list(gage_ids), "bias": truth.bias }).to_csv(
        os.path.join(directory, "truth_bias.csv"),
        index=False,
        float_format=FLOAT_FORMAT
    )
    return files + [ "truth_loads.csv", "truth_bias.csv" ]


def posterior_frame(
    traj: PosteriorTrajectory,
    quantity: Quantity,
    labels: Sequence[str],
    side: Optional[Side] = None,
    timestamps: Optional[pd.DatetimeIndex] = None
) -> pd.DataFrame:
    """
    Args:
        traj: The posterior trajectory.
        quantity: The quantity to export.
        labels: One label per component, e.g. gage names or load DOF names.
        side: The boundary, for loads.
        timestamps: Wall-clock timestamps, added as a column if given.

    Returns:
        One row per time with the columns ``time``, ``mean_<label>`` and ``std_<label>``.
    """

    means = []
    stds = []
    for t in traj.times:
        marginals = extract_posterior(traj, quantity, float(t), side)
        means.append(marginals.mean)
        stds.append(marginals.std)

    frame = pd.DataFrame({ "time": traj.times })
    if timestamps is not None:
        frame.insert(0, TIME_COLUMN, _iso(timestamps))
    frame = pd.concat([
        frame,
        pd.DataFrame(np.array(means), columns=[ f"mean_{label}" for label in labels ]),
        pd.DataFrame(np.array(stds), columns=[ f"std_{label}" for label in labels ])
    ], axis=1)
    return frame


def write_posterior(
    directory: str,
    traj: PosteriorTrajectory,
    gage_ids: Sequence[str],
    timestamps: Optional[pd.DatetimeIndex] = None,
    summary: Optional[Dict[str, JSONType]] = None
) -> List[str]:
    """
    Export the posterior marginals of every quantity and a JSON summary.

    Args:
        directory: The output directory, created if necessary.
        traj: The posterior trajectory.
        gage_ids: The gage names.
        timestamps: Wall-clock timestamps of the observation times.
        summary: Further summary entries, e.g. timings.

    Returns:
        The names of the written files.
    """

    os.makedirs(directory, exist_ok=True)
    files = []
    for quantity in (Quantity.THERMAL, Quantity.BIAS, Quantity.ELASTIC, Quantity.PREDICTED_STRAIN):
        name = f"posterior_{quantity.value}.csv"
        posterior_frame(traj, quantity, gage_ids, timestamps=timestamps).to_csv(
            os.path.join(directory, name),
            index=False,
            float_format=FLOAT_FORMAT
        )
        files.append(name)

    for side in (Side.QUOIN, Side.MITER):
        dofs = [ dof.dof_id for dof in traj.model.reduced.dofs if dof.side is side ]
        name = f"posterior_loads_{side.value}.csv"
        posterior_frame(traj, Quantity.LOADS, [ f"dof{dof}" for dof in dofs ], side, timestamps).to_csv(
            os.path.join(directory, name),
            index=False,
            float_format=FLOAT_FORMAT
        )
        files.append(name)

    content: Dict[str, JSONType] = {
        "kind": traj.kind.value,
        "log_evidence": traj.log_evidence,
        "n_times": len(traj),
        "state_dim": traj.model.dim,
        "gages": traj.model.gage_count
    }
    content.update(summary or {})
    _json_dump(os.path.join(directory, "summary.json"), content)
    files.append("summary.json")

    logging.getLogger(LOG_TAG).info(f"Wrote {len(files)} posterior files to {directory}.")

    return files


def read_json(path: str) -> Any:
    """
    Args:
        path: Path to a JSON file.

    Returns:
        The parsed content.

    Raises:
        MalformedInput: if the file is missing or not valid JSON.
    """

    return _json_load(path)


def write_json(path: str, content: JSONType) -> None:
    """
    Args:
        path: The target path.
        content: The content, written with sorted keys.
    """

    _json_dump(path, content)
