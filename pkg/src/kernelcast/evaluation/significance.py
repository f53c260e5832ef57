"""Diebold-Mariano, Friedman and Nemenyi tests over daily losses."""

import itertools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import chisquare, friedmanchisquare, norm, rankdata, studentized_range

from ..exceptions import DegenerateRanks, EvaluationError, LengthMismatch, ZeroVariance

logger = logging.getLogger(__name__)

MIN_DM_DAYS = 10


@dataclass(frozen=True)
class DmResult:
    statistic: float
    p_value: float
    n: int
    lag: int


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float
    mean_ranks: np.ndarray
    n_blocks: int


@dataclass(frozen=True)
class NemenyiResult:
    p_values: np.ndarray
    critical_difference: float


def long_run_variance(series: np.ndarray, lag: int) -> float:
    """Bartlett-weighted autocovariance sum up to ``lag``."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    centered = x - x.mean()
    variance = centered @ centered / n
    for j in range(1, min(lag, n - 1) + 1):
        gamma_j = centered[j:] @ centered[:-j] / n
        variance += 2.0 * (1.0 - j / (lag + 1.0)) * gamma_j
    return float(variance)


def dm_test(loss_a: np.ndarray, loss_b: np.ndarray) -> DmResult:
    """Two-sided DM test on d = loss_a - loss_b; positive statistics favour b."""
    a = np.asarray(loss_a, dtype=float).reshape(-1)
    b = np.asarray(loss_b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise LengthMismatch(f"Loss series have lengths {a.shape[0]} and {b.shape[0]}")
    n = a.shape[0]
    if n < MIN_DM_DAYS:
        raise EvaluationError(f"DM test needs at least {MIN_DM_DAYS} days, got {n}")
    d = a - b
    lag = int(np.floor(n ** (1.0 / 3.0)))
    lrv = long_run_variance(d, lag)
    if not lrv > 0:
        raise ZeroVariance("Loss differential has zero long-run variance")
    statistic = float(d.mean() / np.sqrt(lrv / n))
    return DmResult(statistic=statistic, p_value=float(2.0 * norm.sf(abs(statistic))), n=n, lag=lag)


def friedman_test(losses: np.ndarray) -> FriedmanResult:
    """Friedman chi-square over a models x blocks loss matrix (rank 1 = lowest loss).

    With two models the tie-corrected statistic equals the chi-square of
    blocks won against blocks lost, which ``friedmanchisquare`` does not accept.
    """
    x = np.asarray(losses, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise DegenerateRanks(f"Ranking needs at least 2 models and 2 blocks, got shape {x.shape}")
    k, n = x.shape
    mean_ranks = np.apply_along_axis(rankdata, 0, x).mean(axis=1)
    if np.all(x == x[0]):
        logger.debug("Every block is fully tied; Friedman statistic is 0")
        return FriedmanResult(statistic=0.0, p_value=1.0, mean_ranks=mean_ranks, n_blocks=n)

    if k == 2:
        result = chisquare([int((x[0] < x[1]).sum()), int((x[0] > x[1]).sum())])
    else:
        result = friedmanchisquare(*x)
    return FriedmanResult(
        statistic=float(result.statistic),
        p_value=float(result.pvalue),
        mean_ranks=mean_ranks,
        n_blocks=n,
    )


def nemenyi(mean_ranks: np.ndarray, n_blocks: int, alpha: float = 0.05) -> NemenyiResult:
    """Pairwise p-values from the studentized range with infinite degrees of freedom."""
    ranks = np.asarray(mean_ranks, dtype=float)
    k = ranks.shape[0]
    scale = np.sqrt(k * (k + 1) / (6.0 * n_blocks))
    p_values = np.ones((k, k))
    for i, j in itertools.combinations(range(k), 2):
        q = abs(ranks[i] - ranks[j]) / scale
        p = float(studentized_range.sf(q * np.sqrt(2.0), k, np.inf))
        p_values[i, j] = p_values[j, i] = min(max(p, 0.0), 1.0)
    q_alpha = studentized_range.ppf(1.0 - alpha, k, np.inf) / np.sqrt(2.0)
    return NemenyiResult(p_values=p_values, critical_difference=float(q_alpha * scale))


def friedman_nemenyi(losses: np.ndarray, models: Sequence[str], alpha: float = 0.05) -> dict:
    """Friedman test and Nemenyi post-hoc for a models x blocks loss matrix."""
    friedman = friedman_test(losses)
    posthoc = nemenyi(friedman.mean_ranks, friedman.n_blocks, alpha)
    return {
        "models": list(models),
        "n_blocks": friedman.n_blocks,
        "friedman": {"statistic": friedman.statistic, "p_value": friedman.p_value},
        "mean_ranks": {m: float(r) for m, r in zip(models, friedman.mean_ranks)},
        "nemenyi": {
            "p_values": posthoc.p_values.tolist(),
            "critical_difference": posthoc.critical_difference,
            "alpha": alpha,
        },
    }


def loss_matrix(table: pd.DataFrame, metric: str) -> pd.DataFrame:
    """Days x models matrix of one daily metric, restricted to days every model has."""
    if table.empty:
        return pd.DataFrame()
    wide = table.pivot_table(index="date", columns="model", values=metric, aggfunc="first")
    return wide.dropna(how="any").sort_index()


def daily_mse(table: pd.DataFrame) -> pd.DataFrame:
    """Days x models matrix of daily mean squared error."""
    squared = table.assign(mse=table["rmse"] ** 2)
    return loss_matrix(squared, "mse")


def dm_table(losses: pd.DataFrame, focus: Optional[str] = None) -> List[Dict]:
    """DM tests per calendar year and over the whole range.

    With ``focus`` only pairs involving that model are tested, otherwise
    every pair.
    """
    results: List[Dict] = []
    if losses.empty:
        return results
    models = list(losses.columns)
    pairs = [
        (a, b)
        for a, b in itertools.combinations(models, 2)
        if focus is None or focus in (a, b)
    ]
    years = sorted({d.year for d in losses.index})
    periods = [("all", losses)] + [(y, losses[[d.year == y for d in losses.index]]) for y in years]
    for period, frame in periods:
        for a, b in pairs:
            entry = {"model_a": a, "model_b": b, "period": period, "n": int(len(frame))}
            try:
                result = dm_test(frame[a].to_numpy(), frame[b].to_numpy())
            except (ZeroVariance, EvaluationError) as e:
                entry.update(statistic=None, p_value=None, note=str(e))
            else:
                entry.update(statistic=result.statistic, p_value=result.p_value, lag=result.lag)
            results.append(entry)
    return results
