"""Dataset loading.

Datasets are plain CSV files: a header row, a timestamp column, then one numeric column
per variable. The loaded values are carried as an ``xr.DataArray`` with dims
``("variable", "time")`` so the variable names and timestamps travel with the numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import xarray as xr

from filterts.errors import CSVParseError

RATIO_PROTOCOL = "ratio"
SPLIT_PROTOCOLS = (RATIO_PROTOCOL, "ett_hour", "ett_minute")


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    n_vars: int
    split_ratios: tuple[float, float, float]
    split_protocol: str
    frequency: str
    domain: str


CATALOG = {
    preset.name: preset
    for preset in (
        DatasetPreset("ETTh1", 7, (0.6, 0.2, 0.2), "ett_hour", "1h", "Electricity"),
        DatasetPreset("ETTh2", 7, (0.6, 0.2, 0.2), "ett_hour", "1h", "Electricity"),
        DatasetPreset("ETTm1", 7, (0.6, 0.2, 0.2), "ett_minute", "15min", "Electricity"),
        DatasetPreset("ETTm2", 7, (0.6, 0.2, 0.2), "ett_minute", "15min", "Electricity"),
        DatasetPreset("Electricity", 321, (0.7, 0.1, 0.2), RATIO_PROTOCOL, "1h", "Electricity"),
        DatasetPreset("Exchange", 8, (0.7, 0.1, 0.2), RATIO_PROTOCOL, "1d", "Economy"),
        DatasetPreset("Traffic", 862, (0.7, 0.1, 0.2), RATIO_PROTOCOL, "1h", "Transportation"),
        DatasetPreset("Weather", 21, (0.7, 0.1, 0.2), RATIO_PROTOCOL, "10min", "Climatology"),
    )
}


@dataclass(frozen=True)
class CSVSchema:
    """Column layout of a dataset file.

    ``timestamp_column=None`` means the first column; ``variables=None`` means every
    remaining column, in file order.
    """

    timestamp_column: str | None = None
    variables: tuple[str, ...] | None = None


@dataclass
class Dataset:
    name: str
    values: xr.DataArray
    split_ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    split_protocol: str = RATIO_PROTOCOL

    @property
    def n_vars(self) -> int:
        return self.values.sizes["variable"]

    @property
    def length(self) -> int:
        return self.values.sizes["time"]

    @property
    def array(self) -> np.ndarray:
        """Values as a float64 ``N x T`` array."""
        return np.asarray(self.values.values, dtype=np.float64)

    @property
    def variables(self) -> list[str]:
        return [str(v) for v in self.values.coords["variable"].values]

    @classmethod
    def from_array(
        cls,
        values,
        name: str = "synthetic",
        variables: list[str] | None = None,
        split_ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
        split_protocol: str = RATIO_PROTOCOL,
    ) -> Dataset:
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"dataset values must be N x T, got shape {values.shape}")
        if variables is None:
            variables = [f"v{i}" for i in range(values.shape[0])]
        data = xr.DataArray(
            values,
            dims=("variable", "time"),
            coords={"variable": list(variables), "time": np.arange(values.shape[1])},
            name=name,
        )
        return cls(name, data, tuple(split_ratios), split_protocol)


def _parse_timestamps(column: pd.Series):
    try:
        return pd.to_datetime(column, format="ISO8601").to_numpy()
    except (ValueError, TypeError):
        # informational only, keep the raw strings
        return column.to_numpy()


def _raise_bad_cell(path: Path, frame: pd.DataFrame, columns: list[str], numeric: pd.DataFrame):
    bad = ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    row, col = (int(i) for i in np.argwhere(bad)[0])
    name = columns[col]
    cell = frame[name].iloc[row]
    if not isinstance(cell, str):
        reason = "row has too few fields"
    elif not cell.strip():
        reason = "blank cell"
    elif not pd.isna(numeric[name].iloc[row]):
        reason = f"non-finite value {cell!r}"
    else:
        reason = f"non-numeric value {cell!r}"
    # row is 1-based over data rows; the header is line 1 of the file
    raise CSVParseError(f"{path}: row {row + 1} (line {row + 2}), column {name!r}: {reason}")


def load_csv(
    path: Path | str,
    schema: CSVSchema | None = None,
    name: str | None = None,
    split_ratios: tuple[float, float, float] | None = None,
    split_protocol: str | None = None,
) -> Dataset:
    """
    Read a dataset CSV into a :class:`Dataset`.

    Parameters
    ----------
    path : Path | str
        CSV file with a header row.
    schema : CSVSchema, optional
        Column layout; defaults to first column timestamp, all others variables.
    name : str, optional
        Dataset name; defaults to the file stem. A name found in ``CATALOG`` supplies
        the split ratios and protocol unless they are given explicitly.
    split_ratios, split_protocol : optional
        Override the catalog / default (7:1:2, plain ratios) split.

    Returns
    -------
    Dataset
        Values as float64 ``N x T`` in file row order.
    """
    path = Path(path)
    schema = schema or CSVSchema()
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.EmptyDataError as exc:
        raise CSVParseError(f"{path}: empty file") from exc
    except pd.errors.ParserError as exc:
        raise CSVParseError(f"{path}: ragged rows: {exc}") from exc

    header = [str(c) for c in frame.columns]
    ts_column = schema.timestamp_column or header[0]
    if ts_column not in header:
        raise CSVParseError(f"{path}: timestamp column {ts_column!r} not in header {header}")
    columns = list(schema.variables) if schema.variables else [c for c in header if c != ts_column]
    missing = [c for c in columns if c not in header]
    if missing:
        raise CSVParseError(f"{path}: column {missing[0]!r} not in header {header}")
    if not columns:
        raise CSVParseError(f"{path}: no variable columns")
    if frame.empty:
        raise CSVParseError(f"{path}: no data rows")

    numeric = frame[columns].apply(pd.to_numeric, errors="coerce")
    if not np.isfinite(numeric.to_numpy(dtype=np.float64)).all():
        _raise_bad_cell(path, frame, columns, numeric)

    name = name or path.stem
    preset = CATALOG.get(name)
    if preset is not None and preset.n_vars != len(columns):
        print(f"⚠️ {name}: catalog lists {preset.n_vars} variables, file has {len(columns)}")
    if split_ratios is None:
        split_ratios = preset.split_ratios if preset else (0.7, 0.1, 0.2)
    if split_protocol is None:
        split_protocol = preset.split_protocol if preset else RATIO_PROTOCOL

    values = numeric.to_numpy(dtype=np.float64).T
    data = xr.DataArray(
        values,
        dims=("variable", "time"),
        coords={"variable": columns, "time": _parse_timestamps(frame[ts_column])},
        name=name,
        attrs={"source": str(path), "rows": int(values.shape[1])},
    )
    print(f"📄 Loaded {name}: {values.shape[0]} variables x {values.shape[1]} rows from {path}")
    return Dataset(name, data, tuple(float(r) for r in split_ratios), split_protocol)
