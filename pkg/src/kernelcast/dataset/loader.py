"""Hourly market CSV ingestion and day-matrix assembly."""

import logging
from dataclasses import dataclass, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import polars as pl

from ..config.settings import ColumnSchema
from ..exceptions import (
    DataError,
    DuplicateTimestamp,
    EmptyFile,
    GapTooLong,
    MalformedRow,
)

logger = logging.getLogger(__name__)

HOURS = 24
VARIABLES = ("price", "residual_load", "renewables")

_OFFSET_PATTERN = r"^[+-]\d{2}:?\d{2}$"


@dataclass(frozen=True)
class DayMatrix:
    """One variable arranged as n days x 24 hours."""

    values: np.ndarray
    start_date: date

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != HOURS:
            raise DataError(
                f"DayMatrix needs exactly {HOURS} columns, got shape {self.values.shape}"
            )

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    @property
    def is_complete(self) -> bool:
        return bool(np.isfinite(self.values).all())

    def date_of(self, row: int) -> date:
        return self.start_date + timedelta(days=row)


@dataclass(frozen=True)
class DayMatrices:
    """The price / residual load / renewables triple."""

    price: DayMatrix
    residual_load: DayMatrix
    renewables: DayMatrix

    @property
    def n_days(self) -> int:
        return self.price.n_days

    @property
    def start_date(self) -> date:
        return self.price.start_date

    def to_panel(self) -> "HourlyPanel":
        return HourlyPanel(
            start_date=self.start_date,
            price=self.price.values,
            residual_load=self.residual_load.values,
            renewables=self.renewables.values,
        )


@dataclass(frozen=True)
class HourlyPanel:
    """Aligned hourly series on a contiguous day grid.

    Missing hours are NaN in all three arrays and listed in ``gaps``.
    """

    start_date: date
    price: np.ndarray
    residual_load: np.ndarray
    renewables: np.ndarray
    gaps: Tuple[Tuple[date, int], ...] = ()
    imputed: Tuple[Tuple[date, int], ...] = ()
    dst_dropped: int = 0

    def __post_init__(self):
        shapes = {self.price.shape, self.residual_load.shape, self.renewables.shape}
        if len(shapes) != 1:
            raise DataError(f"Variables have different shapes: {shapes}")
        for name in VARIABLES:
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[1] != HOURS:
                raise DataError(f"{name} must be n x {HOURS}, got {arr.shape}")
            arr.flags.writeable = False

    @property
    def n_days(self) -> int:
        return self.price.shape[0]

    @property
    def end_date(self) -> date:
        return self.date_of(self.n_days - 1)

    @property
    def dates(self) -> List[date]:
        return [self.date_of(i) for i in range(self.n_days)]

    def date_of(self, row: int) -> date:
        return self.start_date + timedelta(days=row)

    def row_of(self, day: date) -> int:
        return (day - self.start_date).days

    def variable(self, name: str) -> np.ndarray:
        if name not in VARIABLES:
            raise DataError(f"Unknown variable '{name}'. Available: {', '.join(VARIABLES)}")
        return getattr(self, name)

    def slice_rows(self, first: int, stop: int) -> "HourlyPanel":
        """Rows [first, stop) as a new panel."""
        first = max(first, 0)
        stop = min(stop, self.n_days)
        start_date = self.date_of(first)
        end_date = self.date_of(stop - 1)
        return HourlyPanel(
            start_date=start_date,
            price=self.price[first:stop].copy(),
            residual_load=self.residual_load[first:stop].copy(),
            renewables=self.renewables[first:stop].copy(),
            gaps=tuple(g for g in self.gaps if start_date <= g[0] <= end_date),
            imputed=tuple(g for g in self.imputed if start_date <= g[0] <= end_date),
            dst_dropped=self.dst_dropped,
        )

    def with_values(self, **values: np.ndarray) -> "HourlyPanel":
        return replace(self, **values)

    def to_day_matrices(self) -> DayMatrices:
        return DayMatrices(
            price=DayMatrix(self.price, self.start_date),
            residual_load=DayMatrix(self.residual_load, self.start_date),
            renewables=DayMatrix(self.renewables, self.start_date),
        )


def _first_line(df: pl.DataFrame, mask: pl.Expr) -> Optional[int]:
    bad = df.filter(mask)
    if bad.height == 0:
        return None
    return int(bad["line"][0])


def load_csv(
    path: Union[str, Path], schema: Optional[ColumnSchema] = None
) -> HourlyPanel:
    """Load an hourly market CSV into a panel sorted by time.

    Timestamps are ISO-8601 local wall-clock times with an optional explicit
    UTC offset (``2023-03-26T03:00:00+02:00``). The wall-clock date and hour
    place a row in the day grid; the offset only separates the two repeated
    hours of a 25-hour day, of which the later one is dropped.
    """
    schema = schema or ColumnSchema()
    columns = schema.as_mapping()
    path = Path(path)
    if not path.exists():
        raise DataError(f"Input file not found at {path}")

    try:
        raw = pl.read_csv(path, infer_schema_length=0)
    except pl.exceptions.NoDataError:
        raise EmptyFile(f"{path} is empty")
    except pl.exceptions.ComputeError as e:
        raise MalformedRow(line=0, reason=str(e))

    missing = [name for name in columns.values() if name not in raw.columns]
    if missing:
        raise MalformedRow(line=1, reason=f"header is missing columns {missing}")
    if raw.height == 0:
        raise EmptyFile(f"{path} has a header but no rows")

    ts = pl.col(columns["timestamp"]).str.strip_chars()
    df = raw.with_row_index("line", offset=2).with_columns(
        ts.str.slice(0, 19)
        .str.replace(" ", "T")
        .str.strptime(pl.Datetime("us"), "%Y-%m-%dT%H:%M:%S", strict=False)
        .alias("local"),
        ts.str.slice(19).alias("offset"),
    )

    bad_ts = (
        pl.col("local").is_null()
        | (pl.col("local").dt.minute() != 0)
        | (pl.col("local").dt.second() != 0)
        | ~(pl.col("offset").is_in(["", "Z"]) | pl.col("offset").str.contains(_OFFSET_PATTERN))
    )
    line = _first_line(df, bad_ts)
    if line is not None:
        raise MalformedRow(line=line, reason="unparseable hourly timestamp")

    df = df.with_columns(
        pl.when(pl.col("offset").str.starts_with("-")).then(-1).otherwise(1).alias("sign"),
        pl.col("offset").str.extract(r"^[+-](\d{2})", 1).cast(pl.Int64).fill_null(0).alias("off_h"),
        pl.col("offset").str.extract(r"(\d{2})$", 1).cast(pl.Int64).fill_null(0).alias("off_m"),
    ).with_columns(
        (pl.col("sign") * (pl.col("off_h") * 60 + pl.col("off_m"))).alias("offset_minutes")
    ).with_columns(
        (pl.col("local") - pl.duration(minutes=pl.col("offset_minutes"))).alias("utc")
    )

    for variable in VARIABLES:
        name = columns[variable]
        df = df.with_columns(pl.col(name).str.strip_chars().cast(pl.Float64, strict=False).alias(variable))
        line = _first_line(df, pl.col(variable).is_null() | ~pl.col(variable).is_finite())
        if line is not None:
            raise MalformedRow(line=line, reason=f"column '{name}' is not a finite number")

    df = df.sort("utc", maintain_order=True)

    genuine = df.filter(pl.struct("local", "offset_minutes").is_duplicated())
    if genuine.height:
        stamp = genuine.sort("line")["local"][0]
        lines = genuine.filter(pl.col("local") == stamp).sort("line")["line"]
        raise DuplicateTimestamp(stamp.date(), stamp.hour, line=int(lines[1]))

    before = df.height
    df = df.unique(subset=["local"], keep="first", maintain_order=True)
    dst_dropped = before - df.height
    if dst_dropped:
        logger.info(f"Dropped {dst_dropped} repeated DST hours")

    df = df.with_columns(
        pl.col("local").dt.date().alias("date"),
        pl.col("local").dt.hour().alias("hour"),
    )
    start = df["date"].min()
    end = df["date"].max()
    n_days = (end - start).days + 1
    rows = df.select((pl.col("date") - pl.lit(start)).dt.total_days()).to_series().to_numpy()
    hours = df["hour"].to_numpy()

    arrays: Dict[str, np.ndarray] = {}
    for variable in VARIABLES:
        arr = np.full((n_days, HOURS), np.nan)
        arr[rows, hours] = df[variable].to_numpy()
        arrays[variable] = arr

    missing_rows, missing_hours = np.nonzero(np.isnan(arrays["price"]))
    gaps = tuple(
        (start + timedelta(days=int(r)), int(h)) for r, h in zip(missing_rows, missing_hours)
    )
    logger.info(
        f"Loaded {df.height} hourly rows over {n_days} days from {path.name}, {len(gaps)} missing hours"
    )
    return HourlyPanel(start_date=start, gaps=gaps, dst_dropped=dst_dropped, **arrays)


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """(start, length) of each run of True values."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return [(int(s), int(e - s)) for s, e in zip(edges[::2], edges[1::2])]


def impute_gaps(
    panel: HourlyPanel,
    max_run: int = 3,
    on_long_gap: Literal["raise", "keep"] = "raise",
) -> HourlyPanel:
    """Fill missing hours by linear interpolation between neighbours.

    Runs longer than ``max_run`` raise ``GapTooLong``; with
    ``on_long_gap="keep"`` they stay NaN so that every day touching them is
    left out of training sets. Runs at the series edges take the single
    available neighbour.
    """
    flat = {name: panel.variable(name).reshape(-1).copy() for name in VARIABLES}
    mask = np.isnan(flat["price"])
    if not mask.any():
        return panel
    if mask.all():
        raise DataError("Panel has no observed hours to interpolate from")

    size = mask.size
    filled: List[Tuple[date, int]] = []
    kept: List[Tuple[date, int]] = []
    for start, length in _runs(mask):
        stamps = [(panel.date_of((start + k) // HOURS), (start + k) % HOURS) for k in range(length)]
        if length > max_run:
            if on_long_gap == "raise":
                raise GapTooLong(start=stamps[0], length=length, max_run=max_run)
            logger.warning(f"Keeping {length}-hour gap at {stamps[0]} unfilled")
            kept.extend(stamps)
            continue
        left, right = start - 1, start + length
        positions = np.arange(start, start + length)
        for name in VARIABLES:
            series = flat[name]
            if left < 0:
                series[positions] = series[right]
            elif right >= size:
                series[positions] = series[left]
            else:
                series[positions] = np.interp(
                    positions, [left, right], [series[left], series[right]]
                )
        filled.extend(stamps)

    logger.info(f"Imputed {len(filled)} missing hours, {len(kept)} left as gaps")
    return replace(
        panel,
        gaps=tuple(kept),
        imputed=panel.imputed + tuple(filled),
        **{name: flat[name].reshape(panel.n_days, HOURS) for name in VARIABLES},
    )
