"""LASSO-estimated autoregressive benchmark.

One linear model per delivery hour over 247 standardized regressors: four
lagged price days, three days each of load and renewables, and the weekday
dummies. Coefficients minimize

    (1 / 2n) ||y - X theta - b||^2 + lambda ||theta||_1

with an unpenalized intercept b, by cyclic coordinate descent.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..config import Settings
from ..dataset.features import build_hour_dataset
from ..dataset.loader import DayMatrices, HourlyPanel
from ..exceptions import ModelError, NoConvergence, WindowTooShort
from .base import BaseForecaster, Forecast

logger = logging.getLogger(__name__)

DESIGN_DIM = 247


@dataclass(frozen=True)
class LearDesign:
    """Standardized regressors with the column statistics used to build them."""

    rows: np.ndarray
    targets: np.ndarray
    column_mean: np.ndarray
    column_std: np.ndarray

    def standardize(self, raw_rows: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(raw_rows) - self.column_mean) / self.column_std


@dataclass(frozen=True)
class LassoFit:
    theta: np.ndarray
    intercept: float
    lam: float
    iterations: int
    converged: bool
    objectives: Tuple[float, ...] = ()


@dataclass(frozen=True)
class LassoPath:
    lambdas: np.ndarray
    thetas: np.ndarray
    intercepts: np.ndarray


@dataclass(frozen=True)
class LearModel:
    theta: np.ndarray
    intercept: float
    lam: float
    hour: Optional[int]
    column_mean: np.ndarray
    column_std: np.ndarray


def design_from_features(inputs: np.ndarray, targets: Optional[np.ndarray] = None) -> LearDesign:
    """Drop the day-index column and standardize each remaining column."""
    raw = np.atleast_2d(np.asarray(inputs, dtype=float))[:, 1:]
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    y = np.zeros(raw.shape[0]) if targets is None else np.asarray(targets, dtype=float).reshape(-1)
    return LearDesign(rows=(raw - mean) / std, targets=y, column_mean=mean, column_std=std)


def build_design(
    panel: Union[HourlyPanel, DayMatrices], hour: int, window: Tuple[int, int]
) -> LearDesign:
    inputs, targets = build_hour_dataset(panel, hour, window)
    return design_from_features(inputs, targets)


def soft_threshold(x, threshold: float):
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def _center(rows: np.ndarray, targets: np.ndarray):
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    y = np.asarray(targets, dtype=float).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ModelError(f"{x.shape[0]} design rows but {y.shape[0]} targets")
    x_mean, y_mean = x.mean(axis=0), y.mean()
    return x - x_mean, y - y_mean, x_mean, y_mean


def lambda_max(rows: np.ndarray, targets: np.ndarray) -> float:
    """Smallest lambda with an all-zero solution."""
    xc, yc, _, _ = _center(rows, targets)
    return float(np.max(np.abs(xc.T @ yc)) / xc.shape[0])


def _objective(xc: np.ndarray, yc: np.ndarray, theta: np.ndarray, lam: float) -> float:
    residual = yc - xc @ theta
    return float(residual @ residual / (2.0 * xc.shape[0]) + lam * np.abs(theta).sum())


def coordinate_descent(
    rows: np.ndarray,
    targets: np.ndarray,
    lam: float,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    init: Optional[np.ndarray] = None,
    strict: bool = False,
) -> LassoFit:
    """Cyclic soft-threshold updates until no coefficient moves more than ``tol``."""
    if lam < 0:
        raise ModelError(f"lambda must be >= 0, got {lam}")
    xc, yc, x_mean, y_mean = _center(rows, targets)
    n, p = xc.shape
    gram = xc.T @ xc / n
    corr = xc.T @ yc / n
    curvature = np.diag(gram)
    theta = np.zeros(p) if init is None else np.array(init, dtype=float)

    objectives = [_objective(xc, yc, theta, lam)]
    converged = False
    cycle = 0
    for cycle in range(1, max_iter + 1):
        max_step = 0.0
        for k in range(p):
            if curvature[k] == 0.0:
                continue
            old = theta[k]
            partial = corr[k] - gram[k] @ theta + curvature[k] * old
            theta[k] = soft_threshold(partial, lam) / curvature[k]
            max_step = max(max_step, abs(theta[k] - old))
        objectives.append(_objective(xc, yc, theta, lam))
        if max_step <= tol:
            converged = True
            break

    if not converged:
        message = f"Coordinate descent at lambda={lam:g} did not converge in {max_iter} cycles"
        if strict:
            raise NoConvergence(message)
        logger.warning(message)
    return LassoFit(
        theta=theta,
        intercept=float(y_mean - x_mean @ theta),
        lam=float(lam),
        iterations=cycle,
        converged=converged,
        objectives=tuple(objectives),
    )


def lambda_grid(rows: np.ndarray, targets: np.ndarray, grid_size: int = 50, decades: float = 4.0) -> np.ndarray:
    """Log-spaced lambdas from lambda_max down ``decades`` orders of magnitude."""
    top = lambda_max(rows, targets)
    if top == 0.0:
        return np.zeros(1)
    return top * np.logspace(0.0, -decades, grid_size)


def lambda_path(
    rows: np.ndarray,
    targets: np.ndarray,
    grid: Optional[Sequence[float]] = None,
    grid_size: int = 50,
    decades: float = 4.0,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> LassoPath:
    """Warm-started fits over a descending lambda grid."""
    lambdas = (
        np.sort(np.asarray(grid, dtype=float))[::-1]
        if grid is not None
        else lambda_grid(rows, targets, grid_size, decades)
    )
    thetas, intercepts = [], []
    theta = None
    for lam in lambdas:
        fit = coordinate_descent(rows, targets, lam, tol=tol, max_iter=max_iter, init=theta)
        theta = fit.theta
        thetas.append(fit.theta.copy())
        intercepts.append(fit.intercept)
    return LassoPath(lambdas=lambdas, thetas=np.array(thetas), intercepts=np.array(intercepts))


def select_lambda(
    rows: np.ndarray,
    targets: np.ndarray,
    grid: Optional[Sequence[float]] = None,
    holdout_days: int = 28,
    grid_size: int = 50,
    decades: float = 4.0,
    tol: float = 1e-6,
    max_iter: int = 10_000,
) -> float:
    """Lambda with the lowest RMSE on the last ``holdout_days`` rows; ties go to the larger."""
    if grid is not None and len(grid) == 1:
        return float(grid[0])
    x = np.atleast_2d(np.asarray(rows, dtype=float))
    y = np.asarray(targets, dtype=float).reshape(-1)
    if holdout_days < 1 or y.shape[0] - holdout_days < 2:
        raise WindowTooShort(
            f"Lambda selection needs more than {holdout_days} + 1 rows, got {y.shape[0]}"
        )
    fit_x, fit_y = x[:-holdout_days], y[:-holdout_days]
    hold_x, hold_y = x[-holdout_days:], y[-holdout_days:]
    path = lambda_path(fit_x, fit_y, grid, grid_size, decades, tol, max_iter)

    best_lam, best_rmse = None, np.inf
    for lam, theta, intercept in zip(path.lambdas, path.thetas, path.intercepts):
        rmse = float(np.sqrt(np.mean((hold_x @ theta + intercept - hold_y) ** 2)))
        # descending grid, so strict improvement keeps the larger lambda on ties
        if rmse < best_rmse:
            best_lam, best_rmse = float(lam), rmse
    if best_lam is None:
        raise ModelError("No lambda produced a finite holdout RMSE")
    return best_lam


def fit(design: LearDesign, lam: float, hour: Optional[int] = None, tol: float = 1e-6, max_iter: int = 10_000) -> LearModel:
    result = coordinate_descent(design.rows, design.targets, lam, tol=tol, max_iter=max_iter)
    return LearModel(
        theta=result.theta,
        intercept=result.intercept,
        lam=lam,
        hour=hour,
        column_mean=design.column_mean,
        column_std=design.column_std,
    )


def predict(model: LearModel, inputs: np.ndarray) -> np.ndarray:
    """Forecasts from full feature vectors (day index included)."""
    raw = np.atleast_2d(np.asarray(inputs, dtype=float))[:, 1:]
    if raw.shape[1] != model.theta.shape[0]:
        raise ModelError(f"Expected {model.theta.shape[0]} regressors, got {raw.shape[1]}")
    return ((raw - model.column_mean) / model.column_std) @ model.theta + model.intercept


class LearForecaster(BaseForecaster):
    """Per-hour LASSO model; lambda is reselected on calibration days."""

    def __init__(self, settings: Settings):
        super().__init__(settings)
        self.lam: Optional[float] = None
        self.model: Optional[LearModel] = None

    def calibrate(self, inputs: np.ndarray, targets: np.ndarray, rng: np.random.Generator) -> None:
        cfg = self.settings.lear
        design = design_from_features(inputs, targets)
        self.lam = select_lambda(
            design.rows,
            design.targets,
            holdout_days=cfg.holdout_days,
            grid_size=cfg.grid_size,
            decades=cfg.decades,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
        )
        self.refresh(inputs, targets)

    def refresh(self, inputs: np.ndarray, targets: np.ndarray) -> None:
        cfg = self.settings.lear
        self.model = fit(design_from_features(inputs, targets), self.lam, tol=cfg.tol, max_iter=cfg.max_iter)

    def predict(self, inputs: np.ndarray, rng: Optional[np.random.Generator] = None) -> Forecast:
        return Forecast(model=self.name, point=predict(self.model, inputs))
