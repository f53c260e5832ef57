"""Gram matrices of the SE, RQ and summed kernels on one training window.

The exported matrices always come from the summed fit, so that the sum Gram
is the entrywise sum of the other two. In ``fitted`` mode SE and RQ are also
fitted on their own and counted under their own hyperparameters.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from ..config import Settings
from ..dataset.features import MAX_LAG, build_day_dataset
from ..dataset.loader import HourlyPanel
from ..exceptions import InsufficientHistory, IoError
from ..models import gpr
from ..models.kernels import InsignificanceCount, KernelParams, export_gram_csv, gram, insignificance_fraction
from ..utils.rng import stream
from .runner import load_panel, training_window

logger = logging.getLogger(__name__)

KINDS = ("se", "rq", "sum")


@dataclass(frozen=True)
class KernelDiagnostics:
    params: KernelParams
    grams: Dict[str, np.ndarray]
    counts: Dict[str, InsignificanceCount]
    fitted_params: Optional[Dict[str, KernelParams]] = None
    fitted_counts: Optional[Dict[str, InsignificanceCount]] = None


def kernel_grams(inputs: np.ndarray, params: KernelParams) -> Dict[str, np.ndarray]:
    """Noise-free SE, RQ and summed Gram matrices under one parameter set."""
    return {kind: gram(inputs, params, kind, factorize=False).values for kind in KINDS}


def diagnose_window(
    inputs: np.ndarray,
    targets: np.ndarray,
    mode: str = "fitted",
    threshold: float = 0.2,
    restarts: int = 3,
    seed: int = 0,
    noise_floor: float = 1e-4,
    max_iter: int = 200,
) -> KernelDiagnostics:
    """Fit the kernels on one window and count entries below ``threshold``."""

    def fit(kind: str) -> KernelParams:
        model = gpr.fit(
            inputs, targets, restarts=restarts, seed=seed, kernel=kind, noise_floor=noise_floor, max_iter=max_iter
        )
        logger.info(f"{kind} kernel: LML {model.final_lml:.4f}")
        return model.params

    params = fit("sum")
    grams = kernel_grams(inputs, params)
    counts = {kind: insignificance_fraction(grams[kind], threshold) for kind in KINDS}
    if mode == "shared":
        return KernelDiagnostics(params=params, grams=grams, counts=counts)

    fitted_params = {kind: fit(kind) for kind in ("se", "rq")}
    fitted_params["sum"] = params
    fitted_counts = {
        kind: insignificance_fraction(gram(inputs, fitted_params[kind], kind, factorize=False), threshold)
        for kind in ("se", "rq")
    }
    fitted_counts["sum"] = counts["sum"]
    return KernelDiagnostics(
        params=params, grams=grams, counts=counts, fitted_params=fitted_params, fitted_counts=fitted_counts
    )


def _count_entry(count: InsignificanceCount, params: KernelParams) -> dict:
    return {"count": count.count, "fraction": count.fraction, "params": params.as_dict()}


def diagnose_kernels(
    settings: Settings, panel: Optional[HourlyPanel] = None, outdir: Optional[Path] = None
) -> Dict[str, Path]:
    """Write gram_<kind>.csv for each kernel and their counts to kernel_counts.json."""
    cfg = settings.diagnostics
    panel = panel if panel is not None else load_panel(settings)
    lead_in = settings.backtest.window_days + MAX_LAG
    day = cfg.day or panel.date_of(lead_in)
    row = panel.row_of(day)
    if row - lead_in < 0 or row >= panel.n_days:
        raise InsufficientHistory(
            f"A {settings.backtest.window_days}-day window before {day} is not covered by the panel "
            f"({panel.start_date} to {panel.end_date})"
        )

    transformed, _, target = training_window(panel, row, settings)
    inputs, targets = build_day_dataset(transformed, (0, target)).hour(cfg.hour)
    result = diagnose_window(
        inputs,
        targets,
        mode=cfg.mode,
        threshold=cfg.threshold,
        restarts=cfg.restarts,
        seed=int(stream(settings.backtest.seed, day, cfg.hour, "diagnostics").integers(2**32)),
        noise_floor=settings.gpr.noise_floor,
        max_iter=settings.gpr.max_iter,
    )

    outdir = Path(outdir or Path(settings.backtest.output_dir) / "diagnostics")
    summary = {
        "day": day.isoformat(),
        "hour": cfg.hour,
        "mode": cfg.mode,
        "threshold": cfg.threshold,
        "n": int(inputs.shape[0]),
        "kernels": {kind: _count_entry(result.counts[kind], result.params) for kind in KINDS},
        "fitted": (
            {kind: _count_entry(result.fitted_counts[kind], result.fitted_params[kind]) for kind in KINDS}
            if result.fitted_counts is not None
            else None
        ),
    }
    try:
        written = {
            f"gram_{kind}": export_gram_csv(result.grams[kind], outdir / f"gram_{kind}.csv") for kind in KINDS
        }
        written["counts"] = outdir / "kernel_counts.json"
        with written["counts"].open("w") as f:
            json.dump(summary, f, indent=2)
            f.write("\n")
    except OSError as e:
        raise IoError(f"Could not write kernel diagnostics to {outdir}: {e}")

    for kind in KINDS:
        logger.info(f"{kind}: {result.counts[kind].count} entries below {cfg.threshold} after min-max scaling")
    if result.fitted_counts is not None:
        logger.info(
            "Separately fitted: " + ", ".join(f"{kind} {result.fitted_counts[kind].count}" for kind in KINDS)
        )
    return written
