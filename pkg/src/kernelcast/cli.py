import argparse
import logging
import sys
from typing import List, Optional

from .backtest import diagnose_kernels, emit_report, load_report, run_backtest
from .config import ALL_MODELS, load_config, log_level, override
from .exceptions import KernelcastError
from .utils.logging import setup_logging

logger = logging.getLogger(__name__)


def _models(value: str) -> List[str]:
    models = [m.strip() for m in value.split(",") if m.strip()]
    unknown = [m for m in models if m not in ALL_MODELS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown models {unknown}, choose from {', '.join(ALL_MODELS)}")
    return models


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelcast", description="Day-ahead electricity price backtests")
    parser.add_argument("--log-file", default=None, help="Also log to logs/<name>")
    sub = parser.add_subparsers(dest="command", required=True)

    backtest = sub.add_parser("backtest", help="Run a rolling backtest and write its report")
    backtest.add_argument("--config", required=True, help="key=value config file")
    backtest.add_argument("--models", type=_models, default=None, help="Comma-separated subset of gpr,svr,hybrid,lear")
    backtest.add_argument(
        "--refit-daily",
        action="store_true",
        help="Reselect hyperparameters every day instead of every backtest.refit_days days",
    )
    backtest.add_argument("--seed", type=int, default=None, help="Base seed for all random streams")
    backtest.add_argument("--threads", type=int, default=None, help="Worker processes")
    backtest.add_argument("--horizon", type=int, choices=(24, 48), default=None, help="Forecast horizon in hours")
    backtest.add_argument("--out", default=None, help="Output directory (default backtest.output_dir)")

    diagnose = sub.add_parser("diagnose-kernels", help="Write Gram matrices and insignificance counts")
    diagnose.add_argument("--config", required=True, help="key=value config file")

    report = sub.add_parser("report", help="Recompute metrics, tests and plots from an earlier run")
    report.add_argument("--in", dest="indir", required=True, help="Directory holding predictions.csv and actuals.csv")
    return parser


def _run_backtest(args: argparse.Namespace) -> None:
    settings = load_config(args.config)
    settings = override(
        settings,
        models=args.models,
        refit_days=1 if args.refit_daily else None,
        seed=args.seed,
        threads=args.threads,
        horizon_hours=args.horizon,
        output_dir=args.out,
    )
    report = run_backtest(settings)
    emit_report(report, settings.backtest.output_dir)


def _run_diagnostics(args: argparse.Namespace) -> None:
    diagnose_kernels(load_config(args.config))


def _run_report(args: argparse.Namespace) -> None:
    emit_report(load_report(args.indir), args.indir, include_predictions=False)


COMMANDS = {
    "backtest": _run_backtest,
    "diagnose-kernels": _run_diagnostics,
    "report": _run_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Exit status 0 on success, 1 on a kernelcast error, 2 on bad usage."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(log_filename=args.log_file, level=log_level())
    try:
        COMMANDS[args.command](args)
    except KernelcastError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
