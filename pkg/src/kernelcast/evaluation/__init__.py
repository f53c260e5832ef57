"""Forecast error metrics and significance tests."""

from .metrics import (
    DailyMetrics,
    align_actuals,
    daily_error_table,
    daily_metrics,
    error_score,
    mpiw,
    picp,
    season_of,
    summarize,
)
from .significance import DmResult, FriedmanResult, NemenyiResult, dm_test, friedman_nemenyi, friedman_test, nemenyi

__all__ = [
    "DailyMetrics",
    "DmResult",
    "FriedmanResult",
    "NemenyiResult",
    "align_actuals",
    "daily_error_table",
    "daily_metrics",
    "dm_test",
    "error_score",
    "friedman_nemenyi",
    "friedman_test",
    "mpiw",
    "nemenyi",
    "picp",
    "season_of",
    "summarize",
]
