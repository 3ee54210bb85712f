"""Raw sensor ingestion and preprocessing: CSV load, imputation, hourly averaging, scaling.

Minute-level records come in as a timestamped table with one column per
pollutant; empty or unparseable cells are treated as missing. Preprocessing
imputes the gaps, averages each left-closed clock hour, and min-max scales the
hourly series. Scaling parameters are fitted on training data only and reused
verbatim on later data, so test windows never influence them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np
import pandas as pd

from .errors import EmptyDataError, SchemaError, WavecastError

__all__ = [
    "POLLUTANT_UNITS",
    "CsvSchema",
    "LoadReport",
    "RawRecords",
    "TimeSeries",
    "NormParams",
    "load_csv",
    "impute_missing",
    "hourly_average",
    "hourly_average_all",
    "minmax_normalize",
    "denormalize",
]

POLLUTANT_UNITS = {
    "NO2": "ppb",
    "O3": "ppb",
    "CO": "ppb",
    "SO2": "ppb",
    "PM2.5": "ug/m3",
    "PM10": "ug/m3",
}

IMPUTE_POLICIES = ("linear-interpolation", "locf")


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for raw sensor CSVs.

    ``pollutant_columns=None`` selects every known pollutant column present in
    the header; units default to the standard unit per pollutant.
    """

    timestamp_column: str = "timestamp"
    pollutant_columns: tuple[str, ...] | None = None
    units: dict[str, str] | None = None


@dataclass
class LoadReport:
    rows: int
    missing_per_column: dict[str, int]
    dropped_rows: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "rows": self.rows,
                "missing_per_column": self.missing_per_column,
                "dropped_rows": self.dropped_rows,
            },
            sort_keys=True,
        )


@dataclass
class RawRecords:
    """Minute-resolution sensor records in columnar form.

    ``timestamps`` is strictly increasing; each pollutant column is a float
    array with NaN marking missing entries; every pollutant has a unit.
    """

    timestamps: pd.DatetimeIndex
    values: dict[str, np.ndarray]
    units: dict[str, str]

    def __post_init__(self):
        n = len(self.timestamps)
        if n > 1 and not self.timestamps.is_monotonic_increasing:
            raise WavecastError("timestamps must be increasing")
        if n > 1 and self.timestamps.has_duplicates:
            raise WavecastError("timestamps must be strictly increasing (duplicates found)")
        for name, col in self.values.items():
            if len(col) != n:
                raise WavecastError(f"column {name} length mismatch")
            if name not in self.units:
                raise WavecastError(f"pollutant {name} missing from units map")

    @property
    def pollutants(self) -> tuple[str, ...]:
        return tuple(self.values.keys())

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass
class TimeSeries:
    """Gap-free hourly observations of one pollutant."""

    start: datetime
    values: np.ndarray
    pollutant: str
    unit: str

    step = timedelta(hours=1)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise WavecastError("series must hold at least one value")
        if not np.all(np.isfinite(self.values)):
            raise WavecastError("series values must be finite (impute first)")
        if self.start.tzinfo is None:
            raise WavecastError("series start must be timezone-aware UTC")
        start_utc = self.start.astimezone(timezone.utc)
        if start_utc.minute or start_utc.second or start_utc.microsecond:
            raise WavecastError("series start must be aligned to an hour boundary")
        self.start = start_utc

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(start=self.start, values=values, pollutant=self.pollutant, unit=self.unit)

    @classmethod
    def from_values(cls, values, pollutant: str = "NO2", unit: str | None = None,
                    start: datetime | None = None) -> "TimeSeries":
        """Convenience constructor for synthetic/fixture series."""
        if start is None:
            start = datetime(2022, 7, 1, tzinfo=timezone.utc)
        if unit is None:
            unit = POLLUTANT_UNITS.get(pollutant, "1")
        return cls(start=start, values=np.asarray(values, dtype=float), pollutant=pollutant, unit=unit)

    def to_dict(self) -> dict:
        return {
            "pollutant": self.pollutant,
            "unit": self.unit,
            "start": self.start.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "step_hours": 1,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TimeSeries":
        start = datetime.strptime(doc["start"], "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
        return cls(start=start, values=np.asarray(doc["values"], dtype=float),
                   pollutant=doc["pollutant"], unit=doc["unit"])


@dataclass(frozen=True)
class NormParams:
    """Min-max scaling parameters. ``degenerate`` marks a constant (zero-range) fit."""

    min: float
    max: float
    degenerate: bool = field(default=False)

    def __post_init__(self):
        if self.max < self.min:
            raise WavecastError("max must be >= min")
        if self.degenerate != (self.max == self.min):
            raise WavecastError("degenerate flag inconsistent with range")

    @classmethod
    def fit(cls, values: np.ndarray) -> "NormParams":
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise WavecastError("cannot fit scaling on non-finite values")
        lo, hi = float(values.min()), float(values.max())
        return cls(min=lo, max=hi, degenerate=lo == hi)

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.degenerate:
            return np.zeros_like(values)
        return (values - self.min) / (self.max - self.min)

    def invert(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if self.degenerate:
            if np.any(np.abs(values) > 1e-9):
                raise WavecastError("nonzero values under degenerate scaling (scale leakage)")
            return np.full_like(values, self.min)
        return values * (self.max - self.min) + self.min

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, doc: dict) -> "NormParams":
        return cls(min=doc["min"], max=doc["max"], degenerate=doc["degenerate"])


def load_csv(path, schema: CsvSchema | None = None) -> tuple[RawRecords, LoadReport]:
    """Parse a raw sensor CSV into records plus a load report.

    Rows with unparseable or duplicate timestamps are dropped and counted;
    blank or unparseable value cells become NaN and are counted per column.
    Rows come back sorted by timestamp.
    """
    schema = schema or CsvSchema()
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise
    except Exception as exc:  # malformed CSV structure
        raise SchemaError(f"cannot parse CSV {path}: {exc}") from exc

    if schema.timestamp_column not in frame.columns:
        raise SchemaError(f"timestamp column {schema.timestamp_column!r} absent from {path}")

    if schema.pollutant_columns is None:
        columns = tuple(c for c in frame.columns if c in POLLUTANT_UNITS)
    else:
        columns = schema.pollutant_columns
        absent = [c for c in columns if c not in frame.columns]
        if absent:
            raise SchemaError(f"pollutant columns {absent} absent from {path}")
    if not columns:
        raise SchemaError(f"no pollutant columns found in {path}")

    total = len(frame)
    ts = pd.to_datetime(frame[schema.timestamp_column], utc=True, errors="coerce",
                        format="%Y-%m-%dT%H:%M:%SZ")
    keep = np.flatnonzero(ts.notna().to_numpy())
    frame, ts = frame.iloc[keep], ts.iloc[keep]
    order = np.argsort(ts.to_numpy(), kind="stable")
    frame, ts = frame.iloc[order], ts.iloc[order]
    uniq = np.flatnonzero(~pd.DatetimeIndex(ts).duplicated(keep="first"))
    frame, ts = frame.iloc[uniq], ts.iloc[uniq]
    dropped = total - len(frame)

    if len(frame) == 0:
        raise EmptyDataError(f"zero parseable rows in {path}")

    units = dict(schema.units) if schema.units else {c: POLLUTANT_UNITS.get(c, "1") for c in columns}
    values = {}
    missing = {}
    for col in columns:
        cleaned = frame[col].str.strip()
        parsed = pd.to_numeric(cleaned.replace("", None), errors="coerce").to_numpy(dtype=float)
        values[col] = parsed
        missing[col] = int(np.isnan(parsed).sum())

    records = RawRecords(timestamps=pd.DatetimeIndex(ts), values=values, units=units)
    report = LoadReport(rows=len(records), missing_per_column=missing, dropped_rows=dropped)
    return records, report


def _fill_column(col: np.ndarray, policy: str) -> np.ndarray:
    mask = np.isnan(col)
    if mask.all():
        raise EmptyDataError("pollutant column entirely missing")
    if not mask.any():
        return col.copy()
    idx = np.arange(col.size)
    known = idx[~mask]
    if policy == "linear-interpolation":
        # np.interp holds endpoints flat, which covers leading/trailing gaps
        return np.interp(idx, known, col[known])
    if policy == "locf":
        # carry forward, then backfill the leading gap with the first observation
        return pd.Series(col).ffill().bfill().to_numpy()
    raise WavecastError(f"unknown imputation policy {policy!r}; expected one of {IMPUTE_POLICIES}")


def impute_missing(records: RawRecords, policy: str = "linear-interpolation") -> RawRecords:
    """Fill missing cells. Interior gaps follow the policy; leading gaps backfill
    with the first observed value and trailing gaps carry the last observation."""
    if policy not in IMPUTE_POLICIES:
        raise WavecastError(f"unknown imputation policy {policy!r}; expected one of {IMPUTE_POLICIES}")
    filled = {name: _fill_column(col, policy) for name, col in records.values.items()}
    return RawRecords(timestamps=records.timestamps, values=filled, units=dict(records.units))


def hourly_average(records: RawRecords, pollutant: str) -> TimeSeries:
    """Average one pollutant over left-closed clock hours [HH:00, HH+1:00).

    Every hour between the first and last record must contain at least one
    reading; records must already be imputed.
    """
    if pollutant not in records.values:
        raise SchemaError(f"pollutant {pollutant!r} not present in records")
    col = records.values[pollutant]
    if len(col) == 0:
        raise EmptyDataError("no records to average")
    if np.isnan(col).any():
        raise WavecastError("records contain missing values; impute before averaging")

    hours = records.timestamps.floor("h")
    sums = pd.Series(col).groupby(hours).sum()
    counts = pd.Series(col).groupby(hours).size()
    full_range = pd.date_range(hours[0], hours[-1], freq="h")
    if len(full_range) == 0:
        raise EmptyDataError("fewer than 1 complete hour of data")
    absent = full_range.difference(sums.index)
    if len(absent) > 0:
        raise EmptyDataError(f"empty hour bucket at {absent[0].isoformat()}")

    means = (sums / counts).reindex(full_range).to_numpy()
    start = full_range[0].to_pydatetime()
    return TimeSeries(start=start, values=means, pollutant=pollutant,
                      unit=records.units[pollutant])


def hourly_average_all(records: RawRecords) -> dict[str, TimeSeries]:
    return {name: hourly_average(records, name) for name in records.pollutants}


def minmax_normalize(series: TimeSeries) -> tuple[TimeSeries, NormParams]:
    """Scale to [0, 1] via (y - min)/(max - min); constant series map to all
    zeros with the degenerate flag set."""
    params = NormParams.fit(series.values)
    return series.with_values(params.apply(series.values)), params


def denormalize(series: TimeSeries, params: NormParams) -> TimeSeries:
    """Invert min-max scaling: y = x*(max - min) + min."""
    return series.with_values(params.invert(series.values))
