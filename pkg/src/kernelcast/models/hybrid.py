"""Convex combination of GPR and SVR forecasts and intervals."""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import HybridSettings
from ..exceptions import InvalidInterval, ModelError
from .base import Forecast

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HybridWeights:
    lambda1: float = 0.5
    lambda2: float = 0.5

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ModelError(f"Hybrid weights must be nonnegative, got {self.lambda1}, {self.lambda2}")
        if abs(self.lambda1 + self.lambda2 - 1.0) > 1e-12:
            raise ModelError(f"Hybrid weights must sum to 1, got {self.lambda1 + self.lambda2}")

    @classmethod
    def from_lambda1(cls, lambda1: float) -> "HybridWeights":
        return cls(lambda1=lambda1, lambda2=1.0 - lambda1)


def combine_point(gpr: Forecast, svr: Forecast, weights: HybridWeights) -> np.ndarray:
    gpr.check_scale(svr)
    return weights.lambda1 * gpr.point + weights.lambda2 * svr.point


def combine_interval(gpr: Forecast, svr: Forecast, weights: HybridWeights):
    """Endpointwise convex combination of the two intervals."""
    gpr.check_scale(svr)
    if not (gpr.has_interval and svr.has_interval):
        raise InvalidInterval("Both forecasts need intervals to combine them")
    lower = weights.lambda1 * gpr.lower + weights.lambda2 * svr.lower
    upper = weights.lambda1 * gpr.upper + weights.lambda2 * svr.upper
    return lower, upper


class HybridForecaster:
    """Combines GPR and SVR forecasts that share a scale.

    The backtest hands it raw-scale (EUR/MWh) forecasts, so the hybrid point
    and interval are raw prices.
    """

    name = "hybrid"

    def __init__(self, weights: HybridWeights):
        self.weights = weights
        self.logger = logging.getLogger(self.__class__.__name__)

    @classmethod
    def from_settings(cls, settings: HybridSettings) -> "HybridForecaster":
        return cls(HybridWeights.from_lambda1(settings.lambda1))

    def combine(self, gpr: Forecast, svr: Forecast) -> Forecast:
        point = combine_point(gpr, svr, self.weights)
        lower, upper = combine_interval(gpr, svr, self.weights)
        return Forecast(model=self.name, point=point, lower=lower, upper=upper, scale=gpr.scale)
