"""Hourly market data: ingestion, transforms and per-day regressors."""

from .features import (
    FEATURE_DIM,
    DayDataset,
    DayIndexScale,
    FeatureVector,
    build_day_dataset,
    build_hour_dataset,
    build_prediction_inputs,
)
from .loader import HOURS, DayMatrices, DayMatrix, HourlyPanel, impute_gaps, load_csv
from .transforms import TransformSpec, forward_transform, inverse_transform

__all__ = [
    "FEATURE_DIM",
    "HOURS",
    "DayDataset",
    "DayIndexScale",
    "DayMatrices",
    "DayMatrix",
    "FeatureVector",
    "HourlyPanel",
    "TransformSpec",
    "build_day_dataset",
    "build_hour_dataset",
    "build_prediction_inputs",
    "forward_transform",
    "impute_gaps",
    "inverse_transform",
    "load_csv",
]
