"""Rolling backtest, reports and kernel diagnostics."""

from .diagnostics import diagnose_kernels, diagnose_window
from .report import emit_report, load_report
from .runner import BacktestReport, load_panel, run_backtest

__all__ = [
    "BacktestReport",
    "diagnose_kernels",
    "diagnose_window",
    "emit_report",
    "load_panel",
    "load_report",
    "run_backtest",
]
