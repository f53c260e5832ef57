"""Full-year checks on the SMARD hourly file named by KERNELCAST_SMARD_PATH."""

import pytest
from conftest import smard_path

from kernelcast.backtest import run_backtest
from kernelcast.backtest.report import compute_metrics, scored_frame
from kernelcast.config import parse_config_lines

pytestmark = [
    pytest.mark.data,
    pytest.mark.slow,
    pytest.mark.skipif(smard_path() is None, reason="KERNELCAST_SMARD_PATH is not set"),
]


def _year(year: int, tmp_path):
    settings = parse_config_lines(
        [
            f"data.path = {smard_path()}",
            "backtest.models = gpr, svr, hybrid, lear",
            f"backtest.start = {year}-01-01",
            f"backtest.end = {year}-12-31",
            "backtest.refit_days = 7",
            "backtest.record_runtime = false",
            f"backtest.output_dir = {tmp_path}",
        ]
    )
    return compute_metrics(scored_frame(run_backtest(settings)))["models"]


def test_2022_hybrid_error_score(tmp_path):
    models = _year(2022, tmp_path)
    assert models["hybrid"]["rmse"] == pytest.approx(33.095, rel=0.2)
    assert models["hybrid"]["rmse"] < models["lear"]["rmse"]


def test_2023_interval_ordering(tmp_path):
    models = _year(2023, tmp_path)
    assert models["svr"]["picp"] > models["hybrid"]["picp"] > models["gpr"]["picp"]
    assert models["svr"]["mpiw"] > models["hybrid"]["mpiw"] > models["gpr"]["mpiw"]
