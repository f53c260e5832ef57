"""Signed-log and standardization transforms fitted on a training window."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from ..exceptions import SpecNotFitted
from .loader import VARIABLES, HourlyPanel

logger = logging.getLogger(__name__)


def signed_log(x: np.ndarray) -> np.ndarray:
    """sign(x) * ln(1 + |x|); odd, monotone, defined for negative prices."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.log1p(np.abs(x))


def inverse_signed_log(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.expm1(np.abs(y))


@dataclass(frozen=True)
class TransformSpec:
    """Per-variable transform switches and frozen training statistics."""

    signed_log: Mapping[str, bool] = field(
        default_factory=lambda: {name: True for name in VARIABLES}
    )
    standardize: bool = True
    train_mean: Optional[Mapping[str, float]] = None
    train_std: Optional[Mapping[str, float]] = None

    @classmethod
    def create(cls, signed_log: bool = True, standardize: bool = True) -> "TransformSpec":
        return cls(signed_log={name: signed_log for name in VARIABLES}, standardize=standardize)

    @property
    def is_fitted(self) -> bool:
        return self.train_mean is not None and self.train_std is not None

    def fit(self, panel: HourlyPanel, first_row: int = 0, stop_row: Optional[int] = None) -> "TransformSpec":
        """Learn mean/std on rows [first_row, stop_row) only."""
        stop_row = panel.n_days if stop_row is None else stop_row
        means: Dict[str, float] = {}
        stds: Dict[str, float] = {}
        for name in VARIABLES:
            window = self._log_stage(panel.variable(name)[first_row:stop_row], name)
            means[name] = float(np.nanmean(window))
            stds[name] = float(np.nanstd(window))
            if not stds[name] > 0:
                raise SpecNotFitted(
                    f"{name} has zero variance on training rows {first_row}..{stop_row - 1}"
                )
        return TransformSpec(
            signed_log=dict(self.signed_log),
            standardize=self.standardize,
            train_mean=means,
            train_std=stds,
        )

    def _log_stage(self, values: np.ndarray, name: str) -> np.ndarray:
        return signed_log(values) if self.signed_log.get(name, False) else np.asarray(values, dtype=float)

    def forward(self, values: np.ndarray, name: str) -> np.ndarray:
        out = self._log_stage(values, name)
        if self.standardize:
            if not self.is_fitted:
                raise SpecNotFitted("Standardization requested before fitting the transform")
            out = (out - self.train_mean[name]) / self.train_std[name]
        return out

    def inverse(self, values: np.ndarray, name: str = "price") -> np.ndarray:
        out = np.asarray(values, dtype=float)
        if self.standardize:
            if not self.is_fitted:
                raise SpecNotFitted("Standardization requested before fitting the transform")
            out = out * self.train_std[name] + self.train_mean[name]
        if self.signed_log.get(name, False):
            out = inverse_signed_log(out)
        return out


def forward_transform(panel: HourlyPanel, spec: TransformSpec) -> HourlyPanel:
    """Apply signed-log then standardization to every variable."""
    return panel.with_values(**{name: spec.forward(panel.variable(name), name) for name in VARIABLES})


def inverse_transform(panel: HourlyPanel, spec: TransformSpec) -> HourlyPanel:
    return panel.with_values(**{name: spec.inverse(panel.variable(name), name) for name in VARIABLES})
