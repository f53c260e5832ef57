"""Metrics, significance tests and season plots for a finished backtest."""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import matplotlib
import pandas as pd
import polars as pl
from matplotlib.figure import Figure

from ..evaluation.metrics import (
    SEASON_ORDER,
    align_actuals,
    daily_error_table,
    relative_improvement,
    season_of,
    seasonal_table,
    summarize,
    yearly_table,
)
from ..evaluation.significance import daily_mse, dm_table, friedman_nemenyi, loss_matrix
from ..exceptions import DataError, DegenerateRanks, IoError
from ..models.external import PREDICTION_SCHEMA
from .runner import ACTUAL_SCHEMA, BacktestReport

logger = logging.getLogger(__name__)

PLOT_STYLE = {
    "figure.figsize": (12, 4),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "kernelcast",
}


def _clean(value: Any) -> Any:
    """JSON-safe copy: NaN becomes null, numpy scalars become Python numbers."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "isoformat"):
        return value.isoformat()
    return value


def _nested(frame: pd.DataFrame, key: str) -> Dict[str, Dict[str, Dict[str, float]]]:
    """{model: {key value: {metric: value}}} from a long table."""
    out: Dict[str, Dict[str, Dict[str, float]]] = {}
    if frame.empty:
        return out
    for record in frame.to_dict(orient="records"):
        model = record.pop("model")
        group = record.pop(key)
        out.setdefault(str(model), {})[str(group)] = record
    return out


def scored_frame(report: BacktestReport) -> pd.DataFrame:
    predictions = report.predictions.to_pandas()
    actuals = report.actuals.to_pandas()
    if predictions.empty:
        return predictions
    return align_actuals(predictions, actuals)


def compute_metrics(scored: pd.DataFrame) -> Dict[str, Any]:
    """metrics.json content: day-ahead scores plus second-day scores when present."""
    table = daily_error_table(scored) if not scored.empty else pd.DataFrame()
    day_ahead = table[table["horizon_day"] == 0] if not table.empty else table
    summary = summarize(day_ahead)
    metrics: Dict[str, Any] = {
        "models": summary,
        "seasonal": _nested(seasonal_table(day_ahead), "season"),
        "yearly": _nested(yearly_table(day_ahead), "year"),
        "relative_improvement": relative_improvement(summary, reference="hybrid"),
        "daily": table.to_dict(orient="records") if not table.empty else [],
    }
    if not table.empty and (table["horizon_day"] == 1).any():
        metrics["second_day"] = summarize(table[table["horizon_day"] == 1])
    return metrics


def compute_tests(scored: pd.DataFrame) -> Dict[str, Any]:
    """tests.json content: DM pairs per year, Friedman with Nemenyi post-hoc."""
    if scored.empty:
        return {"dm": [], "friedman_nemenyi": None}
    table = daily_error_table(scored)
    table = table[table["horizon_day"] == 0]

    tests: Dict[str, Any] = {"dm": dm_table(daily_mse(table))}
    rmse = loss_matrix(table, "rmse")
    try:
        tests["friedman_nemenyi"] = friedman_nemenyi(rmse.to_numpy().T, list(rmse.columns))
    except DegenerateRanks as e:
        logger.info(f"Skipping Friedman test: {e}")
        tests["friedman_nemenyi"] = None
    return tests


def plot_seasons(scored: pd.DataFrame, outdir: Path) -> List[Path]:
    """One SVG per model and season: realized vs predicted day-ahead prices."""
    paths: List[Path] = []
    if scored.empty:
        return paths
    frame = scored[scored["horizon_day"] == 0].copy()
    frame["season"] = [season_of(d) for d in frame["target_date"]]
    frame = frame.sort_values(["target_date", "target_hour"])
    plot_dir = outdir / "plots"
    plot_dir.mkdir(parents=True, exist_ok=True)

    with matplotlib.rc_context(PLOT_STYLE):
        for (model, season), group in frame.groupby(["model", "season"], sort=True):
            fig = Figure()
            ax = fig.subplots()
            x = range(len(group))
            ax.plot(x, group["actual"].to_numpy(), label="real", color="black", linewidth=0.8)
            ax.plot(x, group["point"].to_numpy(), label=str(model), color="tab:blue", linewidth=0.8)
            if group["lb"].notna().all():
                ax.fill_between(x, group["lb"].to_numpy(), group["ub"].to_numpy(), color="tab:blue", alpha=0.2)
            first, last = group["target_date"].iloc[0], group["target_date"].iloc[-1]
            ax.set_title(f"{model} - {season} ({first} to {last})")
            ax.set_xlabel("hour")
            ax.set_ylabel("EUR/MWh")
            ax.legend(loc="upper right")
            fig.tight_layout()
            path = plot_dir / f"{model}_{season}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            paths.append(path)
    order = {s: i for i, s in enumerate(SEASON_ORDER)}
    return sorted(paths, key=lambda p: (p.stem.rsplit("_", 1)[0], order[p.stem.rsplit("_", 1)[1]]))


def _write_json(payload: Dict[str, Any], path: Path) -> None:
    with path.open("w") as f:
        json.dump(_clean(payload), f, indent=2)
        f.write("\n")


def emit_report(
    report: BacktestReport, outdir: Union[str, Path], include_predictions: bool = True
) -> Dict[str, Path]:
    """Write predictions.csv, actuals.csv, metrics.json, tests.json, daily_metrics.csv and plots."""
    outdir = Path(outdir)
    written: Dict[str, Path] = {}
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        if include_predictions:
            written["predictions"] = outdir / "predictions.csv"
            report.predictions.write_csv(written["predictions"])
            written["actuals"] = outdir / "actuals.csv"
            report.actuals.write_csv(written["actuals"])

        scored = scored_frame(report)
        metrics = compute_metrics(scored)
        written["metrics"] = outdir / "metrics.json"
        _write_json(metrics, written["metrics"])
        written["tests"] = outdir / "tests.json"
        _write_json(compute_tests(scored), written["tests"])
        written["daily_metrics"] = outdir / "daily_metrics.csv"
        pd.DataFrame(metrics["daily"]).to_csv(written["daily_metrics"], index=False)

        for path in plot_seasons(scored, outdir):
            written[path.stem] = path
    except OSError as e:
        raise IoError(f"Could not write report to {outdir}: {e}")

    for name, path in written.items():
        logger.info(f"Wrote {name}: {path}")
    return written


def load_report(indir: Union[str, Path], horizon_hours: Optional[int] = None) -> BacktestReport:
    """Rebuild a report from predictions.csv and actuals.csv of an earlier run."""
    indir = Path(indir)
    predictions_path, actuals_path = indir / "predictions.csv", indir / "actuals.csv"
    for path in (predictions_path, actuals_path):
        if not path.exists():
            raise DataError(f"Missing {path.name} in {indir}")

    predictions = pl.read_csv(predictions_path, schema=PREDICTION_SCHEMA)
    actuals = pl.read_csv(actuals_path, schema=ACTUAL_SCHEMA)
    if horizon_hours is None:
        horizon_hours = 48 if predictions.height and predictions["hour"].max() >= 24 else 24
    return BacktestReport(
        predictions=predictions,
        actuals=actuals,
        models=sorted(predictions["model"].unique().to_list()),
        horizon_hours=horizon_hours,
    )
