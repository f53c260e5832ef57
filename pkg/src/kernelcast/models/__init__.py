"""Forecasting models: GP regression, SVR with conformal intervals, the hybrid and LEAR."""

from .base import BaseForecaster, Forecast, ForecasterRegistry
from .conformal import ConformalConfig, NonconformityScores
from .gpr import GprForecaster, GprModel, GprPrediction
from .hybrid import HybridForecaster, HybridWeights
from .kernels import GramMatrix, KernelParams, PeriodicParams
from .lear import LearForecaster, LearModel
from .svr import SvrConfig, SvrForecaster, SvrModel

__all__ = [
    "BaseForecaster",
    "ConformalConfig",
    "Forecast",
    "ForecasterRegistry",
    "GprForecaster",
    "GprModel",
    "GprPrediction",
    "GramMatrix",
    "HybridForecaster",
    "HybridWeights",
    "KernelParams",
    "LearForecaster",
    "LearModel",
    "NonconformityScores",
    "PeriodicParams",
    "SvrConfig",
    "SvrForecaster",
    "SvrModel",
]
