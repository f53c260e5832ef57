import os
from datetime import date
from pathlib import Path
from typing import List, Optional

import numpy as np
import pytest

from kernelcast.config import Settings, parse_config_lines
from kernelcast.dataset.loader import HOURS, HourlyPanel
from kernelcast.dataset.synthetic import synthetic_frame

FAST_CONFIG = [
    "gpr.restarts = 1",
    "gpr.max_iter = 25",
    "svr.grid_search = false",
    "svr.max_passes = 50",
    "conformal.num_candidates = 200",
    "conformal.bootstrap_reps = 5",
    "lear.holdout_days = 5",
    "lear.grid_size = 5",
    "lear.max_iter = 200",
    "lear.tol = 1e-4",
    "backtest.window_days = 20",
    "backtest.refit_days = 7",
    "backtest.seed = 7",
    "backtest.record_runtime = false",
    "diagnostics.restarts = 1",
]


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("KERNELCAST_THREADS", "KERNELCAST_SEED", "KERNELCAST_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_panel(n_days: int, start: date = date(2023, 1, 1), seed: int = 0) -> HourlyPanel:
    frame = synthetic_frame(start, n_days, seed)
    shape = (n_days, HOURS)
    return HourlyPanel(
        start_date=start,
        price=frame["price"].to_numpy().reshape(shape).copy(),
        residual_load=frame["residual_load"].to_numpy().reshape(shape).copy(),
        renewables=frame["renewables"].to_numpy().reshape(shape).copy(),
    )


@pytest.fixture
def panel():
    """40 days: a 20-day window plus lags leaves 13 target days."""
    return make_panel(40)


@pytest.fixture
def make_settings(tmp_path):
    def _make(*lines: str, output_dir: Optional[Path] = None) -> Settings:
        out = output_dir or tmp_path / "out"
        return parse_config_lines([*FAST_CONFIG, f"backtest.output_dir = {out}", *lines])

    return _make


@pytest.fixture
def write_csv(tmp_path):
    """Write header + rows to a CSV file and return its path."""

    def _write(rows: List[str], name: str = "market.csv", header: str = "timestamp,price,residual_load,renewables"):
        path = tmp_path / name
        path.write_text("\n".join([header, *rows]) + "\n")
        return path

    return _write


def hourly_rows(day: date, prices, offset: str = "+01:00", hours=range(HOURS)) -> List[str]:
    return [
        f"{day.isoformat()}T{h:02d}:00:00{offset},{p},{40 + h},{10 + h}"
        for h, p in zip(hours, prices)
    ]


def random_problem(rng: np.random.Generator, n: int, d: int):
    inputs = rng.normal(size=(n, d))
    targets = np.sin(inputs.sum(axis=1)) + 0.1 * rng.normal(size=n)
    return inputs, targets


def smard_path() -> Optional[Path]:
    value = os.getenv("KERNELCAST_SMARD_PATH")
    if value and Path(value).exists():
        return Path(value)
    return None
