"""Synthetic hourly market data with price, residual load and renewables."""

import logging
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Union

import numpy as np
import polars as pl

from .loader import HOURS

logger = logging.getLogger(__name__)


def synthetic_frame(start: date, n_days: int, seed: int = 0, offset: str = "+01:00") -> pl.DataFrame:
    """Hourly rows with daily and weekly shape, AR(1) wind and a solar bell.

    Price responds to residual load and falls with renewables, so the lagged
    regressors carry real signal.
    """
    rng = np.random.default_rng(seed)
    hours = np.arange(n_days * HOURS)
    hour_of_day = hours % HOURS
    day = hours // HOURS
    weekday = np.array([(start + timedelta(days=int(d))).weekday() for d in day])

    solar = np.clip(np.sin(np.pi * (hour_of_day - 6) / 12.0), 0.0, None) * 18.0
    wind = np.empty(hours.size)
    wind[0] = 15.0
    shocks = rng.normal(0.0, 1.5, hours.size)
    for t in range(1, hours.size):
        wind[t] = 15.0 + 0.97 * (wind[t - 1] - 15.0) + shocks[t]
    renewables = np.clip(solar + wind, 0.0, None)

    demand = 55.0 + 10.0 * np.sin(np.pi * (hour_of_day - 7) / 12.0) - 6.0 * (weekday >= 5)
    residual_load = demand - 0.6 * renewables + rng.normal(0.0, 1.0, hours.size)
    price = 20.0 + 1.8 * residual_load + 0.02 * residual_load**2 + rng.normal(0.0, 4.0, hours.size)

    first = datetime(start.year, start.month, start.day)
    stamps = [(first + timedelta(hours=int(h))).strftime("%Y-%m-%dT%H:%M:%S") + offset for h in hours]
    return pl.DataFrame(
        {
            "timestamp": stamps,
            "price": np.round(price, 2),
            "residual_load": np.round(residual_load, 3),
            "renewables": np.round(renewables, 3),
        }
    )


def write_synthetic_csv(path: Union[str, Path], start: date, n_days: int, seed: int = 0) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    synthetic_frame(start, n_days, seed).write_csv(path)
    logger.info(f"Wrote {n_days} synthetic days to {path}")
    return path
