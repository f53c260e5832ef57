"""Centralized configuration management for kernelcast."""

import os
import logging
import dataclasses
from datetime import date
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union, get_args, get_origin, get_type_hints
from dataclasses import dataclass, field
from dotenv import load_dotenv

from ..exceptions import ConfigurationError

load_dotenv()

logger = logging.getLogger(__name__)

ALL_MODELS = ("gpr", "svr", "hybrid", "lear")


@dataclass
class ColumnSchema:
    """CSV column names for the hourly market file."""

    timestamp: str = "timestamp"
    price: str = "price"
    residual_load: str = "residual_load"
    renewables: str = "renewables"

    def as_mapping(self) -> Dict[str, str]:
        return {
            "timestamp": self.timestamp,
            "price": self.price,
            "residual_load": self.residual_load,
            "renewables": self.renewables,
        }


@dataclass
class DataSettings:
    """Input data settings."""

    path: Optional[str] = None
    impute_max_run: int = 3
    schema: ColumnSchema = field(default_factory=ColumnSchema)


@dataclass
class TransformSettings:
    """Signed-log and standardization switches."""

    signed_log: bool = True
    standardize: bool = True


@dataclass
class GprSettings:
    """Gaussian process hyperparameter search settings."""

    kernel: str = "sum"
    restarts: int = 5
    alpha: float = 0.05
    noise_floor: float = 1e-4
    max_iter: int = 200
    interval_includes_noise: bool = False


@dataclass
class SvrSettings:
    """SVR solver and grid-search settings."""

    tol: float = 1e-3
    max_passes: int = 200
    holdout_days: int = 28
    degree: int = 2
    grid_search: bool = True


@dataclass
class ConformalSettings:
    """Conformal interval settings."""

    nu: float = 3.0
    num_candidates: int = 500
    bootstrap_reps: int = 30
    alpha: float = 0.05
    split: bool = False
    calibration_days: int = 28


@dataclass
class HybridSettings:
    """Hybrid combination weight for the GPR component."""

    lambda1: float = 0.5


@dataclass
class LearSettings:
    """LASSO path settings."""

    grid_size: int = 50
    decades: float = 4.0
    holdout_days: int = 28
    tol: float = 1e-6
    max_iter: int = 10_000


@dataclass
class DiagnosticsSettings:
    """Gram-matrix diagnostics on one training window."""

    day: Optional[date] = None
    hour: int = 12
    mode: str = "fitted"
    threshold: float = 0.2
    restarts: int = 3

    def validate(self) -> None:
        if self.mode not in ("fitted", "shared"):
            raise ConfigurationError(f"diagnostics.mode must be fitted or shared, got '{self.mode}'")
        if not 0 <= self.hour < 24:
            raise ConfigurationError(f"diagnostics.hour must be in [0, 23], got {self.hour}")


@dataclass
class BacktestConfig:
    """Rolling backtest settings."""

    start: Optional[date] = None
    end: Optional[date] = None
    window_days: int = 365
    horizon_hours: int = 24
    models: List[str] = field(default_factory=lambda: list(ALL_MODELS))
    refit_days: int = 7
    seed: int = 0
    output_dir: str = "output"
    threads: int = 1
    external: Dict[str, str] = field(default_factory=dict)
    record_runtime: bool = True

    def __post_init__(self):
        # Environment overrides file values
        if os.getenv("KERNELCAST_THREADS"):
            self.threads = int(os.getenv("KERNELCAST_THREADS"))
        if os.getenv("KERNELCAST_SEED"):
            self.seed = int(os.getenv("KERNELCAST_SEED"))
        self.validate()

    def validate(self) -> None:
        if self.window_days < 8:
            raise ConfigurationError(
                f"backtest.window_days must be >= 8, got {self.window_days}"
            )
        if self.horizon_hours not in (24, 48):
            raise ConfigurationError(
                f"backtest.horizon_hours must be 24 or 48, got {self.horizon_hours}"
            )
        if self.refit_days < 1:
            raise ConfigurationError("backtest.refit_days must be >= 1")
        if self.threads < 1:
            raise ConfigurationError(f"backtest.threads must be >= 1, got {self.threads}")
        unknown = [m for m in self.models if m not in ALL_MODELS]
        if unknown:
            raise ConfigurationError(
                f"Unknown models {unknown}. Available models: {', '.join(ALL_MODELS)}"
            )
        if self.start and self.end and self.end < self.start:
            raise ConfigurationError("backtest.end is before backtest.start")


@dataclass
class Settings:
    """All settings sections, as read from a key=value file."""

    data: DataSettings = field(default_factory=DataSettings)
    transform: TransformSettings = field(default_factory=TransformSettings)
    gpr: GprSettings = field(default_factory=GprSettings)
    svr: SvrSettings = field(default_factory=SvrSettings)
    conformal: ConformalSettings = field(default_factory=ConformalSettings)
    hybrid: HybridSettings = field(default_factory=HybridSettings)
    lear: LearSettings = field(default_factory=LearSettings)
    diagnostics: DiagnosticsSettings = field(default_factory=DiagnosticsSettings)
    backtest: BacktestConfig = field(default_factory=BacktestConfig)


def _coerce(raw: str, target: Any, key: str, line_no: int) -> Any:
    """Convert a raw string to the annotated field type."""
    origin = get_origin(target)
    if origin is Union:
        inner = [a for a in get_args(target) if a is not type(None)]
        if raw.lower() in ("", "none", "null"):
            return None
        target = inner[0]
        origin = get_origin(target)
    try:
        if target is bool:
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if target is int:
            return int(raw)
        if target is float:
            return float(raw)
        if target is date:
            return date.fromisoformat(raw)
        if origin in (list, List):
            return [item.strip() for item in raw.split(",") if item.strip()]
        return raw
    except ValueError as e:
        raise ConfigurationError(f"Invalid value for '{key}' at line {line_no}: {e}")


def _assign(settings: Settings, key: str, raw: str, line_no: int) -> None:
    parts = key.split(".")
    section_name = parts[0]
    if not hasattr(settings, section_name) or len(parts) < 2:
        raise ConfigurationError(f"Unknown config key '{key}' at line {line_no}")
    section = getattr(settings, section_name)

    # backtest.external.<tag> = path
    if section_name == "backtest" and parts[1] == "external" and len(parts) == 3:
        section.external[parts[2]] = raw
        return
    # data.schema.<column> = name
    if section_name == "data" and parts[1] == "schema" and len(parts) == 3:
        if not hasattr(section.schema, parts[2]):
            raise ConfigurationError(f"Unknown config key '{key}' at line {line_no}")
        setattr(section.schema, parts[2], raw)
        return
    if len(parts) != 2:
        raise ConfigurationError(f"Unknown config key '{key}' at line {line_no}")

    hints = get_type_hints(type(section))
    if parts[1] not in hints:
        raise ConfigurationError(f"Unknown config key '{key}' at line {line_no}")
    setattr(section, parts[1], _coerce(raw, hints[parts[1]], key, line_no))


def parse_config_lines(lines: List[str]) -> Settings:
    """Parse key=value lines into a Settings object."""
    settings = Settings()
    for line_no, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"Expected key=value at line {line_no}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        _assign(settings, key, raw, line_no)

    # Re-run env overrides and validation after file values are in place
    settings.backtest.__post_init__()
    settings.diagnostics.validate()
    return settings


def load_config(path: Union[str, Path]) -> Settings:
    """Load a key=value config file."""
    path = Path(path)
    try:
        with path.open("r") as f:
            lines = f.readlines()
    except FileNotFoundError:
        raise ConfigurationError(f"Config file not found at {path}")
    settings = parse_config_lines(lines)
    # Relative data paths resolve against the config file's directory
    if settings.data.path and not Path(settings.data.path).is_absolute():
        settings.data.path = str((path.parent / settings.data.path).resolve())
    for tag, ext_path in list(settings.backtest.external.items()):
        if not Path(ext_path).is_absolute():
            settings.backtest.external[tag] = str((path.parent / ext_path).resolve())
    logger.info(f"Loaded config from {path}")
    return settings


def override(settings: Settings, **backtest_overrides: Any) -> Settings:
    """Return a copy with backtest fields replaced (CLI flags)."""
    backtest = dataclasses.replace(settings.backtest)
    # Flags win over environment variables, so set them after __post_init__
    for key, value in backtest_overrides.items():
        if value is not None:
            setattr(backtest, key, value)
    backtest.validate()
    return dataclasses.replace(settings, backtest=backtest)


def log_level() -> str:
    return os.getenv("KERNELCAST_LOG_LEVEL", "INFO")
