"""Rolling-window backtest over a date range.

Target days are cut into blocks of ``refit_days``. Hyperparameters are
selected on the first day of a block and kept for the rest of it, while every
day refits on its own trailing window. Blocks are independent tasks and may
run in separate processes; every random draw comes from a stream keyed by
(seed, day, hour, model), so results do not depend on the schedule.
"""

import csv
import logging
import os
import time
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import polars as pl

from ..config import Settings
from ..dataset.features import MAX_LAG, build_day_dataset, build_prediction_inputs
from ..dataset.loader import HOURS, HourlyPanel, impute_gaps, load_csv
from ..dataset.transforms import TransformSpec, forward_transform
from ..exceptions import DataError, InsufficientHistory, KernelcastError
from ..models.base import Forecast, ForecasterRegistry
from ..models.external import PREDICTION_COLUMNS, PREDICTION_SCHEMA, read_external
from ..models.hybrid import HybridForecaster
from ..utils.parallel import ordered_map, worker_count
from ..utils.rng import stream

logger = logging.getLogger(__name__)

FAILURE_COLUMNS = ["timestamp", "date", "hour", "model", "error"]
ACTUAL_SCHEMA = {"date": pl.Date, "hour": pl.Int64, "price": pl.Float64}


@dataclass
class BacktestReport:
    """Forecast records, realized prices and failed (day, model) tasks of one run."""

    predictions: pl.DataFrame
    actuals: pl.DataFrame
    failures: List[Dict] = field(default_factory=list)
    models: List[str] = field(default_factory=list)
    horizon_hours: int = 24


@dataclass(frozen=True)
class BlockTask:
    """Consecutive target rows sharing one hyperparameter calibration."""

    panel: HourlyPanel
    settings: Settings
    rows: Tuple[int, ...]
    models: Tuple[str, ...]


@dataclass
class BlockResult:
    records: List[Dict] = field(default_factory=list)
    failures: List[Dict] = field(default_factory=list)


def base_models(models: Sequence[str]) -> Tuple[str, ...]:
    """Models that are fitted directly; the hybrid needs both GPR and SVR."""
    needed = set(models)
    if "hybrid" in needed:
        needed.update(("gpr", "svr"))
    return tuple(m for m in ("gpr", "svr", "lear") if m in needed)


def target_rows(panel: HourlyPanel, settings: Settings) -> List[int]:
    """Panel rows of the target days, checked against the required lead-in."""
    cfg = settings.backtest
    lead_in = cfg.window_days + MAX_LAG
    extra_days = cfg.horizon_hours // HOURS - 1

    start = cfg.start or panel.date_of(lead_in)
    end = cfg.end or panel.date_of(panel.n_days - 1 - extra_days)
    first, last = panel.row_of(start), panel.row_of(end)
    if first - lead_in < 0:
        raise InsufficientHistory(
            f"Backtest from {start} needs data from {start - timedelta(days=lead_in)}, "
            f"panel starts {panel.start_date}"
        )
    if last + extra_days >= panel.n_days:
        raise InsufficientHistory(
            f"Backtest to {end} with a {cfg.horizon_hours}h horizon needs data to "
            f"{end + timedelta(days=extra_days)}, panel ends {panel.end_date}"
        )
    if last < first:
        raise InsufficientHistory(f"No target days between {start} and {end}")
    return list(range(first, last + 1))


def plan_blocks(rows: Sequence[int], refit_days: int) -> List[Tuple[int, ...]]:
    return [tuple(rows[i : i + refit_days]) for i in range(0, len(rows), refit_days)]


def _failure(day: date, hour: Optional[int], model: str, error: Exception) -> Dict:
    return {
        "timestamp": datetime.now().isoformat(timespec="seconds"),
        "date": day.isoformat(),
        "hour": "" if hour is None else hour,
        "model": model,
        "error": f"{type(error).__name__}: {error}",
    }


def _record(day: date, hour: int, forecast: Forecast, runtime_ms: float) -> Dict:
    return {
        "date": day,
        "hour": hour,
        "model": forecast.model,
        "point": float(forecast.point[0]),
        "lb": None if forecast.lower is None else float(forecast.lower[0]),
        "ub": None if forecast.upper is None else float(forecast.upper[0]),
        "runtime_ms": runtime_ms,
    }


def training_window(panel: HourlyPanel, row: int, settings: Settings):
    """Transformed window ending at ``row`` with all target-day prices masked."""
    cfg = settings.backtest
    first = row - cfg.window_days - MAX_LAG
    stop = row + cfg.horizon_hours // HOURS

    spec = TransformSpec.create(
        signed_log=settings.transform.signed_log, standardize=settings.transform.standardize
    ).fit(panel, first, row)
    window = panel.slice_rows(first, stop)
    price = window.price.copy()
    price[row - first :] = np.nan
    transformed = forward_transform(window.with_values(price=price), spec)
    return transformed, spec, row - first


class DayRunner:
    """Per-hour forecasters for one block, reused across its days."""

    def __init__(self, task: BlockTask):
        self.task = task
        self.settings = task.settings
        self.fitted = base_models(task.models)
        self.forecasters = {
            name: [ForecasterRegistry.create(name, self.settings) for _ in range(HOURS)]
            for name in self.fitted
        }
        self.hybrid = HybridForecaster.from_settings(self.settings.hybrid) if "hybrid" in task.models else None
        self.logger = logging.getLogger(self.__class__.__name__)

    def _elapsed(self, started: float) -> float:
        if not self.settings.backtest.record_runtime:
            return 0.0
        return (time.perf_counter() - started) * 1000.0

    def run_day(self, row: int, recalibrate: bool, result: BlockResult) -> None:
        panel, settings = self.task.panel, self.settings
        day = panel.date_of(row)
        seed = settings.backtest.seed
        two_days = settings.backtest.horizon_hours == 2 * HOURS

        try:
            transformed, spec, target = training_window(panel, row, settings)
            dataset = build_day_dataset(transformed, (0, target))
            query = build_prediction_inputs(transformed, [target], dataset.scale)
            if not np.isfinite(query).all():
                raise DataError(f"Regressors for {day} contain missing values")
        except KernelcastError as e:
            self.logger.error(f"{day}: could not build training data: {e}")
            result.failures.extend(_failure(day, None, m, e) for m in self.task.models)
            return

        outputs: Dict[str, List[Tuple[Forecast, float]]] = {}
        failed: Dict[str, Exception] = {}
        for name in self.fitted:
            forecasts: List[Tuple[Forecast, float]] = []
            hour = 0
            try:
                for hour in range(HOURS):
                    inputs, targets = dataset.hour(hour)
                    forecaster = self.forecasters[name][hour]
                    rng = stream(seed, day, hour, name)
                    started = time.perf_counter()
                    forecaster.fit(inputs, targets, recalibrate=recalibrate, rng=rng)
                    forecast = forecaster.predict(query, rng=rng)
                    forecasts.append((forecast, self._elapsed(started)))

                if two_days:
                    # day d+1 reads day d's prices from this model's own forecasts
                    own = np.array([f.point[0] for f, _ in forecasts])
                    query_next = build_prediction_inputs(
                        transformed, [target + 1], dataset.scale, price_override={target: own}
                    )
                    for hour in range(HOURS):
                        started = time.perf_counter()
                        forecast = self.forecasters[name][hour].predict(
                            query_next, rng=stream(seed, day, hour + HOURS, name)
                        )
                        forecasts.append((forecast, self._elapsed(started)))
            except KernelcastError as e:
                self.logger.error(f"{day} hour {hour}: {name} failed: {e}")
                failed[name] = e
                result.failures.append(_failure(day, hour, name, e))
                continue
            outputs[name] = [(f.to_raw(spec), ms) for f, ms in forecasts]

        for name in self.fitted:
            if name in outputs and name in self.task.models:
                result.records.extend(
                    _record(day, h, f, ms) for h, (f, ms) in enumerate(outputs[name])
                )

        if self.hybrid is None:
            return
        if "gpr" not in outputs or "svr" not in outputs:
            cause = failed.get("gpr") or failed.get("svr")
            result.failures.append(_failure(day, None, self.hybrid.name, cause))
            return
        try:
            for h, ((g, g_ms), (s, s_ms)) in enumerate(zip(outputs["gpr"], outputs["svr"])):
                result.records.append(_record(day, h, self.hybrid.combine(g, s), g_ms + s_ms))
        except KernelcastError as e:
            self.logger.error(f"{day}: hybrid failed: {e}")
            result.failures.append(_failure(day, None, self.hybrid.name, e))


def run_block(task: BlockTask) -> BlockResult:
    """Forecast every day of one block; failures are recorded, never raised."""
    result = BlockResult()
    runner = DayRunner(task)
    for i, row in enumerate(task.rows):
        runner.run_day(row, recalibrate=(i == 0), result=result)
    logger.info(
        f"Block {task.panel.date_of(task.rows[0])}..{task.panel.date_of(task.rows[-1])}: "
        f"{len(result.records)} forecasts, {len(result.failures)} failures"
    )
    return result


def _actuals(panel: HourlyPanel, rows: Sequence[int], horizon_hours: int) -> pl.DataFrame:
    days = sorted({r + k for r in rows for k in range(horizon_hours // HOURS)})
    records = [
        {"date": panel.date_of(r), "hour": h, "price": float(panel.price[r, h])}
        for r in days
        for h in range(HOURS)
        if np.isfinite(panel.price[r, h])
    ]
    return pl.DataFrame(records, schema=ACTUAL_SCHEMA)


def _log_failures_to_csv(failures: Sequence[Dict], output_dir: Path) -> None:
    """Append failed (day, model) tasks to failures.csv."""
    if not failures:
        return
    os.makedirs(output_dir, exist_ok=True)
    error_file = output_dir / "failures.csv"
    file_exists = error_file.exists()
    with open(error_file, "a", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=FAILURE_COLUMNS)
        if not file_exists:
            writer.writeheader()
        writer.writerows(failures)


def load_panel(settings: Settings) -> HourlyPanel:
    if not settings.data.path:
        raise DataError("data.path is not set")
    panel = load_csv(settings.data.path, settings.data.schema)
    return impute_gaps(panel, max_run=settings.data.impute_max_run, on_long_gap="keep")


def run_backtest(settings: Settings, panel: Optional[HourlyPanel] = None) -> BacktestReport:
    """Forecast every target day with every enabled model.

    Raises ``InsufficientHistory`` when the panel does not cover the range
    plus ``window_days + 7`` lead-in days.
    """
    cfg = settings.backtest
    panel = panel if panel is not None else load_panel(settings)
    rows = target_rows(panel, settings)
    models = tuple(m for m in cfg.models)
    blocks = plan_blocks(rows, cfg.refit_days)
    n_workers = worker_count(cfg.threads)
    logger.info(
        f"Backtest {panel.date_of(rows[0])}..{panel.date_of(rows[-1])}: {len(rows)} days, "
        f"models {list(models)}, {len(blocks)} blocks on {n_workers} workers"
    )

    tasks = [BlockTask(panel=panel, settings=settings, rows=block, models=models) for block in blocks]
    results = ordered_map(run_block, tasks, n_workers=n_workers) if models else []

    records = [r for result in results for r in result.records]
    failures = [f for result in results for f in result.failures]
    predictions = pl.DataFrame(records, schema=PREDICTION_SCHEMA)

    first_day, last_day = panel.date_of(rows[0]), panel.date_of(rows[-1])
    external = [read_external(path, tag, first_day, last_day) for tag, path in sorted(cfg.external.items())]
    predictions = (
        pl.concat([predictions, *external], how="vertical")
        .select(PREDICTION_COLUMNS)
        .sort(["date", "hour", "model"])
    )

    _log_failures_to_csv(failures, Path(cfg.output_dir))
    if failures:
        logger.warning(f"{len(failures)} day/model tasks failed, see {Path(cfg.output_dir) / 'failures.csv'}")
    return BacktestReport(
        predictions=predictions,
        actuals=_actuals(panel, rows, cfg.horizon_hours),
        failures=failures,
        models=sorted(set(models) | set(cfg.external)),
        horizon_hours=cfg.horizon_hours,
    )
