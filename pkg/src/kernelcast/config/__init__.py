"""Configuration management for kernelcast package."""

from .settings import (
    ALL_MODELS,
    BacktestConfig,
    ColumnSchema,
    ConformalSettings,
    DataSettings,
    DiagnosticsSettings,
    GprSettings,
    HybridSettings,
    LearSettings,
    Settings,
    SvrSettings,
    TransformSettings,
    load_config,
    log_level,
    override,
    parse_config_lines,
)

__all__ = [
    "ALL_MODELS",
    "BacktestConfig",
    "ColumnSchema",
    "ConformalSettings",
    "DataSettings",
    "DiagnosticsSettings",
    "GprSettings",
    "HybridSettings",
    "LearSettings",
    "Settings",
    "SvrSettings",
    "TransformSettings",
    "load_config",
    "log_level",
    "override",
    "parse_config_lines",
]
