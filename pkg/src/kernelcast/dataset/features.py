"""Per-day regressors: day index, lagged prices, load/renewables terms, weekday dummies."""

import logging
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import DataError, LagUnavailable, WindowTooShort
from .loader import HOURS, DayMatrices, HourlyPanel

logger = logging.getLogger(__name__)

PRICE_LAGS = (1, 2, 3, 7)
EXOGENOUS_LAGS = (0, 1, 7)
MAX_LAG = 7
N_WEEKDAYS = 7
FEATURE_DIM = 1 + HOURS * (len(PRICE_LAGS) + 2 * len(EXOGENOUS_LAGS)) + N_WEEKDAYS
MIN_WINDOW_DAYS = MAX_LAG + 1


@dataclass(frozen=True)
class FeatureVector:
    """Structured view of one 248-dimensional regressor."""

    day_index: float
    price_lags: np.ndarray
    load_terms: np.ndarray
    renewables_terms: np.ndarray
    weekday_dummies: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            (
                [self.day_index],
                self.price_lags.reshape(-1),
                self.load_terms.reshape(-1),
                self.renewables_terms.reshape(-1),
                self.weekday_dummies,
            )
        )

    @classmethod
    def from_array(cls, values: np.ndarray) -> "FeatureVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (FEATURE_DIM,):
            raise DataError(f"Expected a {FEATURE_DIM}-vector, got shape {values.shape}")
        p = 1 + HOURS * len(PRICE_LAGS)
        l = p + HOURS * len(EXOGENOUS_LAGS)
        r = l + HOURS * len(EXOGENOUS_LAGS)
        return cls(
            day_index=float(values[0]),
            price_lags=values[1:p].reshape(len(PRICE_LAGS), HOURS),
            load_terms=values[p:l].reshape(len(EXOGENOUS_LAGS), HOURS),
            renewables_terms=values[l:r].reshape(len(EXOGENOUS_LAGS), HOURS),
            weekday_dummies=values[r:],
        )


@dataclass(frozen=True)
class DayIndexScale:
    """Maps a panel row to the day index, 0 at the first and 1 at the last training day."""

    origin: int
    span: float

    def __call__(self, row: int) -> float:
        return (row - self.origin) / self.span


def weekday_dummies(day: date) -> np.ndarray:
    dummies = np.zeros(N_WEEKDAYS)
    dummies[day.weekday()] = 1.0
    return dummies


def day_features(
    panel: HourlyPanel,
    row: int,
    scale: DayIndexScale,
    price_override: Optional[Mapping[int, np.ndarray]] = None,
) -> np.ndarray:
    """t_i for panel row ``row``. Never reads the price of day ``row`` itself."""
    if row - MAX_LAG < 0:
        raise LagUnavailable(f"Day {panel.date_of(row)} needs prices from {MAX_LAG} days earlier")
    if row >= panel.n_days:
        raise LagUnavailable(f"Day {panel.date_of(row)} is past the end of the panel")
    price_override = price_override or {}

    def price(r: int) -> np.ndarray:
        return price_override[r] if r in price_override else panel.price[r]

    return np.concatenate(
        (
            [scale(row)],
            *(price(row - lag) for lag in PRICE_LAGS),
            *(panel.residual_load[row - lag] for lag in EXOGENOUS_LAGS),
            *(panel.renewables[row - lag] for lag in EXOGENOUS_LAGS),
            weekday_dummies(panel.date_of(row)),
        )
    )


@dataclass(frozen=True)
class DayDataset:
    """Training inputs for every usable day of a window and their 24 hourly targets."""

    inputs: np.ndarray
    targets: np.ndarray
    rows: np.ndarray
    scale: DayIndexScale

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def hour(self, hour: int) -> Tuple[np.ndarray, np.ndarray]:
        return self.inputs, self.targets[:, hour]


def build_day_dataset(panel: Union[HourlyPanel, DayMatrices], window: Tuple[int, int]) -> DayDataset:
    """Inputs and targets for rows [first, stop) of the panel.

    Lags are read only inside the window, so the first seven days only
    supply lags and a window of ``w`` days yields ``w - 7`` pairs. Days with
    any missing input or target are skipped.
    """
    if isinstance(panel, DayMatrices):
        panel = panel.to_panel()
    first, stop = window
    if stop - first < MIN_WINDOW_DAYS:
        raise WindowTooShort(
            f"Window of {stop - first} days is shorter than the {MIN_WINDOW_DAYS} days lags need"
        )
    if first < 0 or stop > panel.n_days:
        raise LagUnavailable(
            f"Window rows {first}..{stop - 1} fall outside the panel's {panel.n_days} days"
        )

    origin = first + MAX_LAG
    scale = DayIndexScale(origin=origin, span=float(max(stop - 1 - origin, 1)))
    candidate_rows = np.arange(origin, stop)
    inputs = np.vstack([day_features(panel, int(r), scale) for r in candidate_rows])
    targets = panel.price[candidate_rows]

    usable = np.isfinite(inputs).all(axis=1) & np.isfinite(targets).all(axis=1)
    if not usable.all():
        logger.warning(f"Skipping {int((~usable).sum())} training days with missing values")
    if not usable.any():
        raise WindowTooShort("No complete training day in window")
    return DayDataset(
        inputs=inputs[usable],
        targets=targets[usable],
        rows=candidate_rows[usable],
        scale=scale,
    )


def build_hour_dataset(
    panel: Union[HourlyPanel, DayMatrices], hour: int, window: Tuple[int, int]
) -> Tuple[np.ndarray, np.ndarray]:
    """(inputs, targets) for one delivery hour."""
    if not 0 <= hour < HOURS:
        raise DataError(f"hour must be in [0, {HOURS - 1}], got {hour}")
    return build_day_dataset(panel, window).hour(hour)


def build_prediction_inputs(
    panel: HourlyPanel,
    rows: Sequence[int],
    scale: DayIndexScale,
    price_override: Optional[Mapping[int, np.ndarray]] = None,
) -> np.ndarray:
    """t_i for days whose prices are not yet known."""
    return np.vstack([day_features(panel, int(r), scale, price_override) for r in rows])
