"""Daily error metrics, interval metrics and their aggregate tables.

MAPE and sMAPE are reported twice: with an outer square root over the mean
of the hourly terms (``*_paper``) and as the plain mean (``*_std``).
"""

import logging
from dataclasses import asdict, dataclass
from datetime import date, timedelta
from typing import Dict, Iterable, List, Literal, Optional

import numpy as np
import pandas as pd

from ..exceptions import AllTermsSkipped, Empty, InvalidInterval, LengthMismatch

logger = logging.getLogger(__name__)

ZERO_PRICE = 1e-6
ERROR_METRICS = ("rmse", "mae", "mape_paper", "mape_std", "smape_paper", "smape_std")
INTERVAL_METRICS = ("picp", "mpiw")
SEASONS = {
    12: "winter", 1: "winter", 2: "winter",
    3: "spring", 4: "spring", 5: "spring",
    6: "summer", 7: "summer", 8: "summer",
    9: "autumn", 10: "autumn", 11: "autumn",
}
SEASON_ORDER = ("winter", "spring", "summer", "autumn")


def season_of(day: date) -> str:
    return SEASONS[day.month]


@dataclass(frozen=True)
class DailyMetrics:
    rmse: float
    mae: float
    mape_paper: float
    mape_std: float
    smape_paper: float
    smape_std: float
    skipped: int = 0

    def as_dict(self) -> Dict[str, float]:
        values = asdict(self)
        for name in ("mape_paper", "mape_std", "smape_paper", "smape_std"):
            values[f"{name}_pct"] = 100.0 * values[name]
        return values


def _paired(true_values, predicted_values, m: Optional[int] = None):
    p = np.asarray(true_values, dtype=float).reshape(-1)
    q = np.asarray(predicted_values, dtype=float).reshape(-1)
    if p.shape != q.shape:
        raise LengthMismatch(f"{p.shape[0]} true values but {q.shape[0]} predictions")
    if m is not None and p.shape[0] != m:
        raise LengthMismatch(f"Expected {m} hourly values, got {p.shape[0]}")
    if p.size == 0:
        raise LengthMismatch("No values to score")
    return p, q


def daily_metrics(
    true_day: np.ndarray,
    pred_day: np.ndarray,
    m: Optional[int] = 24,
    on_all_skipped: Literal["raise", "nan"] = "raise",
) -> DailyMetrics:
    """RMSE, MAE, MAPE and sMAPE of one day's hourly forecasts.

    MAPE and sMAPE terms with |P| < 1e-6 are skipped and counted. A day with
    every term skipped raises, or with ``on_all_skipped="nan"`` leaves both
    undefined.
    """
    p, q = _paired(true_day, pred_day, m)
    error = np.abs(p - q)
    rmse = float(np.sqrt(np.mean(error**2)))
    mae = float(np.mean(error))

    keep = np.abs(p) >= ZERO_PRICE
    if keep.any():
        mape_std = float(np.mean(error[keep] / np.abs(p[keep])))
        smape_std = float(np.mean(2.0 * error[keep] / (np.abs(p[keep]) + np.abs(q[keep]))))
    elif on_all_skipped == "raise":
        raise AllTermsSkipped(f"All {p.size} true prices are below {ZERO_PRICE:g} in magnitude")
    else:
        mape_std = smape_std = float("nan")

    return DailyMetrics(
        rmse=rmse,
        mae=mae,
        mape_paper=float(np.sqrt(mape_std)),
        mape_std=mape_std,
        smape_paper=float(np.sqrt(smape_std)),
        smape_std=smape_std,
        skipped=int((~keep).sum()),
    )


def error_score(daily_values: Iterable[float]) -> float:
    values = np.asarray(list(daily_values), dtype=float)
    if values.size == 0:
        raise Empty("Error score over zero days")
    return float(np.mean(values))


def picp(true_values: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> float:
    """Share of true values inside [lower, upper]."""
    p, lo = _paired(true_values, lower)
    _, hi = _paired(true_values, upper)
    return float(np.mean((p >= lo) & (p <= hi)))


def mpiw(lower: np.ndarray, upper: np.ndarray) -> float:
    lo, hi = _paired(lower, upper)
    if np.any(lo > hi):
        raise InvalidInterval("Interval with lower bound above upper bound")
    return float(np.mean(hi - lo))


def align_actuals(predictions: pd.DataFrame, actuals: pd.DataFrame) -> pd.DataFrame:
    """Attach the realized price to each forecast row.

    Hours 24..47 of an issue date refer to the following day.
    """
    frame = predictions.copy()
    frame["date"] = pd.to_datetime(frame["date"]).dt.date
    frame["horizon_day"] = frame["hour"] // 24
    frame["target_date"] = [d + timedelta(days=int(k)) for d, k in zip(frame["date"], frame["horizon_day"])]
    frame["target_hour"] = frame["hour"] % 24

    truth = actuals.rename(columns={"date": "target_date", "hour": "target_hour", "price": "actual"})
    truth = truth.assign(target_date=pd.to_datetime(truth["target_date"]).dt.date)
    merged = frame.merge(truth[["target_date", "target_hour", "actual"]], on=["target_date", "target_hour"], how="left")
    missing = int(merged["actual"].isna().sum())
    if missing:
        logger.warning(f"{missing} forecast rows have no realized price and are not scored")
    return merged.dropna(subset=["actual"])


def daily_error_table(scored: pd.DataFrame) -> pd.DataFrame:
    """One row per (model, date, horizon_day) with every daily metric."""
    records: List[dict] = []
    for (model, day, horizon), group in scored.groupby(["model", "date", "horizon_day"], sort=True):
        group = group.sort_values("hour")
        truth = group["actual"].to_numpy()
        metrics = daily_metrics(truth, group["point"].to_numpy(), m=None, on_all_skipped="nan")
        row = {"model": model, "date": day, "horizon_day": int(horizon), "hours": len(group), **metrics.as_dict()}
        has_interval = group["lb"].notna().all() and group["ub"].notna().all()
        row["picp"] = picp(truth, group["lb"].to_numpy(), group["ub"].to_numpy()) if has_interval else np.nan
        row["mpiw"] = mpiw(group["lb"].to_numpy(), group["ub"].to_numpy()) if has_interval else np.nan
        records.append(row)
    columns = ["model", "date", "horizon_day", "hours"]
    if not records:
        return pd.DataFrame(columns=columns + list(ERROR_METRICS) + list(INTERVAL_METRICS))
    return pd.DataFrame.from_records(records)


def summarize(table: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    """Error_Score of every metric per model (mean over days)."""
    summary: Dict[str, Dict[str, float]] = {}
    if table.empty:
        return summary
    metric_columns = [c for c in table.columns if c not in ("model", "date", "horizon_day", "hours")]
    for model, group in table.groupby("model", sort=True):
        summary[str(model)] = {
            column: (None if group[column].isna().all() else float(group[column].mean()))
            for column in metric_columns
        }
    return summary


def seasonal_table(table: pd.DataFrame) -> pd.DataFrame:
    """Error_Score per model and season (winter = Dec/Jan/Feb)."""
    if table.empty:
        return pd.DataFrame()
    frame = table.assign(season=[season_of(d) for d in table["date"]])
    out = frame.groupby(["model", "season"])[list(ERROR_METRICS) + list(INTERVAL_METRICS)].mean()
    return out.reset_index()


def yearly_table(table: pd.DataFrame) -> pd.DataFrame:
    if table.empty:
        return pd.DataFrame()
    frame = table.assign(year=[d.year for d in table["date"]])
    out = frame.groupby(["model", "year"])[list(ERROR_METRICS) + list(INTERVAL_METRICS)].mean()
    return out.reset_index()


def relative_improvement(
    summary: Dict[str, Dict[str, float]], reference: str = "hybrid"
) -> Dict[str, Dict[str, float]]:
    """Percent reduction of each error metric of ``reference`` against every other model."""
    if reference not in summary:
        return {}
    improvements: Dict[str, Dict[str, float]] = {}
    for model, scores in summary.items():
        if model == reference:
            continue
        improvements[model] = {}
        for metric in ERROR_METRICS:
            other, ref = scores.get(metric), summary[reference].get(metric)
            if other is None or ref is None or other == 0:
                improvements[model][metric] = None
            else:
                improvements[model][metric] = 100.0 * (other - ref) / other
    return improvements
