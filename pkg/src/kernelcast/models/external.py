"""Forecast files produced outside kernelcast (e.g. a DNN benchmark)."""

import logging
from datetime import date
from pathlib import Path
from typing import Optional, Union

import polars as pl

from ..exceptions import DataError, MalformedRow

logger = logging.getLogger(__name__)

PREDICTION_COLUMNS = ("date", "hour", "model", "point", "lb", "ub", "runtime_ms")
PREDICTION_SCHEMA = {
    "date": pl.Date,
    "hour": pl.Int64,
    "model": pl.Utf8,
    "point": pl.Float64,
    "lb": pl.Float64,
    "ub": pl.Float64,
    "runtime_ms": pl.Float64,
}


def read_external(
    path: Union[str, Path],
    tag: str,
    start: Optional[date] = None,
    end: Optional[date] = None,
) -> pl.DataFrame:
    """Rows of a predictions-schema CSV relabelled as ``tag``.

    ``model``, ``lb``, ``ub`` and ``runtime_ms`` may be absent; rows outside
    [start, end] are dropped.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"External forecast file for '{tag}' not found at {path}")
    frame = pl.read_csv(path, infer_schema_length=0)
    missing = [c for c in ("date", "hour", "point") if c not in frame.columns]
    if missing:
        raise MalformedRow(line=1, reason=f"{path.name} is missing columns {missing}")

    for column in ("lb", "ub", "runtime_ms"):
        if column not in frame.columns:
            frame = frame.with_columns(pl.lit(None, dtype=pl.Utf8).alias(column))
    try:
        frame = frame.select(
            pl.col("date").str.to_date("%Y-%m-%d"),
            pl.col("hour").cast(pl.Int64),
            pl.lit(tag).alias("model"),
            pl.col("point").cast(pl.Float64),
            pl.col("lb").cast(pl.Float64),
            pl.col("ub").cast(pl.Float64),
            pl.col("runtime_ms").cast(pl.Float64).fill_null(0.0),
        )
    except pl.exceptions.InvalidOperationError as e:
        raise MalformedRow(line=0, reason=f"{path.name}: {e}")

    if start is not None:
        frame = frame.filter(pl.col("date") >= start)
    if end is not None:
        frame = frame.filter(pl.col("date") <= end)
    logger.info(f"Read {frame.height} external forecasts for '{tag}' from {path}")
    return frame
