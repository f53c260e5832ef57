"""Conformal prediction intervals around SVR point forecasts.

A candidate value is kept when the fraction of calibration scores at least as
large as its own score reaches ``alpha``. Candidates are drawn uniformly on
mu +/- nu * sigma of the training targets; the interval is the span of the
kept candidates, averaged over bootstrap redraws.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..config import ConformalSettings
from ..exceptions import EmptyPiSet, LengthMismatch, ModelError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConformalConfig:
    nu: float = 3.0
    num_candidates: int = 500
    bootstrap_reps: int = 30
    alpha: float = 0.05

    def __post_init__(self):
        if not self.nu > 0:
            raise ModelError(f"nu must be > 0, got {self.nu}")
        if self.num_candidates < 2:
            raise ModelError(f"num_candidates must be >= 2, got {self.num_candidates}")
        if self.bootstrap_reps < 1:
            raise ModelError(f"bootstrap_reps must be >= 1, got {self.bootstrap_reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ModelError(f"alpha must be in (0, 1), got {self.alpha}")

    @classmethod
    def from_settings(cls, settings: ConformalSettings) -> "ConformalConfig":
        return cls(
            nu=settings.nu,
            num_candidates=settings.num_candidates,
            bootstrap_reps=settings.bootstrap_reps,
            alpha=settings.alpha,
        )


@dataclass(frozen=True)
class NonconformityScores:
    """Absolute calibration residuals, kept sorted for counting."""

    alphas: np.ndarray
    sorted_alphas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sorted_alphas", np.sort(np.asarray(self.alphas, dtype=float)))

    @property
    def n(self) -> int:
        return self.alphas.shape[0]


@dataclass(frozen=True)
class ConformalInterval:
    lower: float
    upper: float
    nu: float
    failed_reps: int = 0

    @property
    def width(self) -> float:
        return self.upper - self.lower


def scores(true_values: np.ndarray, predicted_values: np.ndarray) -> NonconformityScores:
    true_values = np.asarray(true_values, dtype=float).reshape(-1)
    predicted_values = np.asarray(predicted_values, dtype=float).reshape(-1)
    if true_values.shape != predicted_values.shape:
        raise LengthMismatch(
            f"{true_values.shape[0]} true values but {predicted_values.shape[0]} predictions"
        )
    if true_values.size == 0:
        raise LengthMismatch("Scores need at least one calibration point")
    return NonconformityScores(alphas=np.abs(true_values - predicted_values))


def proportionality(calibration: NonconformityScores, candidate_score):
    """#{alpha_i >= candidate} / (n + 1), for a scalar or an array of candidates."""
    sorted_alphas = calibration.sorted_alphas
    n = sorted_alphas.shape[0]
    at_least = n - np.searchsorted(sorted_alphas, candidate_score, side="left")
    return at_least / (n + 1.0)


def interval_once(
    point_forecast: float,
    calibration: NonconformityScores,
    mu: float,
    sigma: float,
    config: ConformalConfig,
    rng: np.random.Generator,
) -> ConformalInterval:
    """One draw of candidates and the span of those accepted."""
    if not sigma > 0:
        raise ModelError(f"Training target std must be > 0, got {sigma}")
    low, high = mu - config.nu * sigma, mu + config.nu * sigma
    candidates = rng.uniform(low, high, size=config.num_candidates)
    gamma = proportionality(calibration, np.abs(point_forecast - candidates))
    accepted = candidates[gamma >= config.alpha]
    if accepted.size == 0:
        raise EmptyPiSet(
            f"No candidate in [{low:.4g}, {high:.4g}] is conforming at alpha={config.alpha}"
        )
    return ConformalInterval(lower=float(accepted.min()), upper=float(accepted.max()), nu=config.nu)


def interval_bootstrap(
    point_forecast: float,
    calibration: NonconformityScores,
    mu: float,
    sigma: float,
    config: ConformalConfig,
    rng: np.random.Generator,
) -> ConformalInterval:
    """Mean endpoints over ``bootstrap_reps`` redraws from the same stream.

    Raises ``EmptyPiSet`` only when most redraws accept nothing.
    """
    lowers, uppers = [], []
    failed = 0
    for _ in range(config.bootstrap_reps):
        try:
            rep = interval_once(point_forecast, calibration, mu, sigma, config, rng)
        except EmptyPiSet:
            failed += 1
            continue
        lowers.append(rep.lower)
        uppers.append(rep.upper)
    if failed * 2 > config.bootstrap_reps or not lowers:
        raise EmptyPiSet(f"{failed} of {config.bootstrap_reps} bootstrap draws had no conforming candidate")
    return ConformalInterval(
        lower=float(np.mean(lowers)),
        upper=float(np.mean(uppers)),
        nu=config.nu,
        failed_reps=failed,
    )


def auto_widen(
    point_forecast: float,
    calibration: NonconformityScores,
    mu: float,
    sigma: float,
    config: ConformalConfig,
    rng: np.random.Generator,
) -> ConformalInterval:
    """Bootstrap interval, retried once with twice the candidate range."""
    try:
        return interval_bootstrap(point_forecast, calibration, mu, sigma, config, rng)
    except EmptyPiSet:
        wider = replace(config, nu=2.0 * config.nu)
        logger.warning(
            f"Empty conformal set at nu={config.nu:g} for forecast {point_forecast:.4g}, retrying with nu={wider.nu:g}"
        )
        return interval_bootstrap(point_forecast, calibration, mu, sigma, wider, rng)
