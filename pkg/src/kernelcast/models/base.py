"""Abstract base classes for kernelcast forecasters."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Dict, List, Literal, Optional, Type

import numpy as np

from ..config import Settings
from ..dataset.transforms import TransformSpec
from ..exceptions import ConfigurationError, InvalidInterval, ScaleMismatch

Scale = Literal["transformed", "raw"]


@dataclass(frozen=True)
class Forecast:
    """Point forecasts for a set of query days, with optional interval bounds.

    ``scale`` tags whether values are on the model (transformed) scale or
    back in EUR/MWh.
    """

    model: str
    point: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    scale: Scale = "transformed"

    def __post_init__(self):
        object.__setattr__(self, "point", np.atleast_1d(np.asarray(self.point, dtype=float)))
        if (self.lower is None) != (self.upper is None):
            raise InvalidInterval("Interval needs both a lower and an upper bound")
        if self.lower is not None:
            lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
            upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
            if lower.shape != self.point.shape or upper.shape != self.point.shape:
                raise InvalidInterval("Interval bounds and points have different lengths")
            if np.any(lower > upper):
                raise InvalidInterval(f"{self.model}: lower bound above upper bound")
            object.__setattr__(self, "lower", lower)
            object.__setattr__(self, "upper", upper)

    @property
    def has_interval(self) -> bool:
        return self.lower is not None

    def __len__(self) -> int:
        return self.point.shape[0]

    def check_scale(self, other: "Forecast") -> None:
        if self.scale != other.scale:
            raise ScaleMismatch(
                f"{self.model} is on the {self.scale} scale but {other.model} is on the {other.scale} scale"
            )

    def to_raw(self, spec: TransformSpec) -> "Forecast":
        """Back-transform points and bounds endpointwise."""
        if self.scale == "raw":
            return self
        return replace(
            self,
            point=spec.inverse(self.point, "price"),
            lower=None if self.lower is None else spec.inverse(self.lower, "price"),
            upper=None if self.upper is None else spec.inverse(self.upper, "price"),
            scale="raw",
        )


class ForecasterRegistry:
    """Name -> forecaster class lookup."""

    _forecasters: Dict[str, Type["BaseForecaster"]] = {}

    @classmethod
    def register(cls, name: str, forecaster_class: Type["BaseForecaster"]) -> None:
        cls._forecasters[name] = forecaster_class

    @classmethod
    def create(cls, name: str, settings: Settings) -> "BaseForecaster":
        if name not in cls._forecasters:
            raise ConfigurationError(
                f"Unknown model '{name}'. Available models: {', '.join(cls.available())}"
            )
        return cls._forecasters[name](settings)

    @classmethod
    def available(cls) -> List[str]:
        return sorted(cls._forecasters)


class AutoRegisterMeta(type(ABC)):
    """Metaclass that registers concrete forecasters by class name."""

    def __new__(cls, name: str, bases: tuple, namespace: dict):
        new_class = super().__new__(cls, name, bases, namespace)

        # Only register concrete classes (not abstract base classes)
        if not getattr(new_class, "__abstractmethods__", None):
            # GprForecaster -> gpr
            model_name = name.lower().replace("forecaster", "") if name.endswith("Forecaster") else name.lower()
            new_class.name = model_name
            ForecasterRegistry.register(model_name, new_class)

        return new_class


class BaseForecaster(ABC, metaclass=AutoRegisterMeta):
    """One per-hour model that is calibrated occasionally and refreshed daily."""

    name: str = ""

    def __init__(self, settings: Settings):
        self.settings = settings
        self.logger = logging.getLogger(self.__class__.__name__)
        self._calibrated = False

    @property
    def is_calibrated(self) -> bool:
        return self._calibrated

    def fit(
        self,
        inputs: np.ndarray,
        targets: np.ndarray,
        recalibrate: bool = True,
        rng: Optional[np.random.Generator] = None,
    ) -> "BaseForecaster":
        """Select hyperparameters and fit, or refit with the current ones."""
        if recalibrate or not self._calibrated:
            self.calibrate(inputs, targets, self._stream(rng))
            self._calibrated = True
        else:
            self.refresh(inputs, targets)
        return self

    def _stream(self, rng: Optional[np.random.Generator]) -> np.random.Generator:
        return rng if rng is not None else np.random.default_rng(self.settings.backtest.seed)

    @abstractmethod
    def calibrate(self, inputs: np.ndarray, targets: np.ndarray, rng: np.random.Generator) -> None:
        """Choose hyperparameters and fit on the window."""
        pass

    @abstractmethod
    def refresh(self, inputs: np.ndarray, targets: np.ndarray) -> None:
        """Refit on a new window with hyperparameters kept."""
        pass

    @abstractmethod
    def predict(self, inputs: np.ndarray, rng: Optional[np.random.Generator] = None) -> Forecast:
        """Forecasts on the transformed scale for each row of ``inputs``."""
        pass
