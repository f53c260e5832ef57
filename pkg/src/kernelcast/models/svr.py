"""Epsilon-insensitive support vector regression.

The dual is solved over 2n box-constrained variables (alpha_i, alpha*_i) with
sequential minimal optimization and second-order working-set selection. The
stopping rule is the maximal violating pair gap ``Gmax + Gmax2 < tol``.
"""

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Iterable, List, Literal, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..config import Settings
from ..exceptions import DimensionMismatch, ModelError, NoConvergence, WindowTooShort
from .base import BaseForecaster, Forecast
from .conformal import ConformalConfig, NonconformityScores, auto_widen, scores
from .kernels import as_inputs

logger = logging.getLogger(__name__)

SvrKernel = Literal["squared_exponential", "polynomial", "linear", "sigmoid"]
SVR_KERNELS = ("squared_exponential", "polynomial", "linear", "sigmoid")
EPSILON_GRID = (0.001, 0.01, 0.1)
C_GRID = (0.1, 1.0, 10.0)
COEF0_GRID = (0.0, 1.0, 10.0)
TAU = 1e-12


@dataclass(frozen=True)
class SvrConfig:
    """Box constraint, tube width and kernel for one SVR.

    ``gamma=None`` resolves to 1 / (d * var(X)) on the training inputs.
    """

    C: float = 1.0
    epsilon: float = 0.01
    kernel_kind: SvrKernel = "squared_exponential"
    gamma: Optional[float] = None
    coef0: float = 0.0
    degree: int = 2

    def __post_init__(self):
        if not self.C > 0:
            raise ModelError(f"C must be > 0, got {self.C}")
        if self.epsilon < 0:
            raise ModelError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.kernel_kind not in SVR_KERNELS:
            raise ModelError(
                f"Unknown SVR kernel '{self.kernel_kind}'. Available kernels: {', '.join(SVR_KERNELS)}"
            )
        if self.kernel_kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ModelError(f"Polynomial degree must be an integer >= 1, got {self.degree}")
        if self.gamma is not None and not self.gamma > 0:
            raise ModelError(f"gamma must be > 0, got {self.gamma}")

    def resolved(self, inputs: np.ndarray) -> "SvrConfig":
        if self.gamma is not None:
            return self
        x = as_inputs(inputs)
        spread = float(x.var())
        gamma = 1.0 / (x.shape[1] * spread) if spread > 0 else 1.0
        return replace(self, gamma=gamma)


@dataclass(frozen=True)
class SvrModel:
    """Dual solution (alpha - alpha*) per training point plus the bias."""

    dual_coefs: np.ndarray
    bias: float
    train_inputs: np.ndarray
    config: SvrConfig
    converged: bool = True
    iterations: int = 0
    dual_objective: float = 0.0

    @property
    def support_index(self) -> np.ndarray:
        return np.flatnonzero(self.dual_coefs != 0.0)

    @property
    def alpha(self) -> np.ndarray:
        return np.maximum(self.dual_coefs, 0.0)

    @property
    def alpha_star(self) -> np.ndarray:
        return np.maximum(-self.dual_coefs, 0.0)


def svr_kernel(a: np.ndarray, b: np.ndarray, config: SvrConfig) -> np.ndarray:
    """Kernel matrix between rows of ``a`` and ``b``; gamma must be resolved."""
    a, b = as_inputs(a), as_inputs(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"Input dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    kind = config.kernel_kind
    if kind == "squared_exponential":
        return np.exp(-config.gamma * cdist(a, b, metric="sqeuclidean"))
    inner = a @ b.T
    if kind == "linear":
        return inner
    if kind == "polynomial":
        return (config.gamma * inner + config.coef0) ** int(config.degree)
    return np.tanh(config.gamma * inner + config.coef0)


def _dual_value(beta: np.ndarray, kernel: np.ndarray, targets: np.ndarray, epsilon: float) -> float:
    """Dual objective in maximization form."""
    return float(-0.5 * beta @ kernel @ beta - epsilon * np.abs(beta).sum() + targets @ beta)


def compute_bias(
    dual_coefs: np.ndarray,
    kernel: np.ndarray,
    targets: np.ndarray,
    config: SvrConfig,
) -> float:
    """Bias from the KKT conditions.

    Averaged over unbounded support vectors, otherwise the midpoint of the
    interval that the bounded and zero coefficients allow.
    """
    beta = np.asarray(dual_coefs, dtype=float)
    residual = np.asarray(targets, dtype=float) - kernel @ beta
    eps, C = config.epsilon, config.C
    bound_tol = 1e-12 * C
    magnitude = np.abs(beta)
    free = (magnitude > bound_tol) & (magnitude < C - bound_tol)
    if free.any():
        return float(np.mean(residual[free] - np.sign(beta[free]) * eps))

    zero = magnitude <= bound_tol
    at_upper = beta >= C - bound_tol
    at_lower = beta <= -(C - bound_tol)
    lows = np.concatenate((residual[zero] - eps, residual[at_lower] + eps))
    highs = np.concatenate((residual[zero] + eps, residual[at_upper] - eps))
    if lows.size and highs.size:
        return float(0.5 * (lows.max() + highs.min()))
    if lows.size:
        return float(lows.max())
    if highs.size:
        return float(highs.min())
    return 0.0


def _select_working_set(
    gradient: np.ndarray,
    coefs: np.ndarray,
    signs: np.ndarray,
    diag: np.ndarray,
    kernel_row,
    C: float,
    tol: float,
):
    """Maximal violating i, second-order j; None when the pair gap is below tol."""
    up = ((signs > 0) & (coefs < C)) | ((signs < 0) & (coefs > 0))
    low = ((signs > 0) & (coefs > 0)) | ((signs < 0) & (coefs < C))
    if not up.any() or not low.any():
        return None
    score = -signs * gradient
    gmax = np.max(np.where(up, score, -np.inf))
    i = int(np.argmax(np.where(up, score, -np.inf)))
    gmax2 = np.max(np.where(low, -score, -np.inf))
    if gmax + gmax2 < tol:
        return None

    grad_diff = gmax - score
    candidates = low & (grad_diff > 0)
    if not candidates.any():
        return None
    quad = diag[i] + diag - 2.0 * kernel_row(i)
    quad = np.where(quad > 0, quad, TAU)
    obj_diff = np.where(candidates, -(grad_diff**2) / quad, np.inf)
    return i, int(np.argmin(obj_diff))


def solve_dual(
    inputs: np.ndarray,
    targets: np.ndarray,
    config: SvrConfig,
    tol: float = 1e-3,
    max_passes: int = 200,
    strict: bool = False,
) -> SvrModel:
    """SMO on the epsilon-SVR dual.

    Runs at most ``max_passes * 2n`` pair updates. Without convergence the
    last iterate is returned with ``converged=False``; ``strict=True``
    raises ``NoConvergence`` instead.
    """
    x = as_inputs(inputs)
    y = np.asarray(targets, dtype=float).reshape(-1)
    n = y.shape[0]
    if x.shape[0] != n:
        raise DimensionMismatch(f"{x.shape[0]} inputs but {n} targets")
    if n < 2:
        raise ModelError(f"SVR needs at least 2 training pairs, got {n}")
    config = config.resolved(x)
    kernel = svr_kernel(x, x, config)
    C, eps = config.C, config.epsilon

    # variables 0..n-1 are alpha (sign +1), n..2n-1 are alpha* (sign -1)
    signs = np.concatenate((np.ones(n), -np.ones(n)))
    coefs = np.zeros(2 * n)
    gradient = np.concatenate((eps - y, eps + y))
    base_diag = np.diag(kernel)
    diag = np.concatenate((base_diag, base_diag))

    def kernel_row(t: int) -> np.ndarray:
        row = kernel[t % n]
        return np.concatenate((row, row))

    def q_row(t: int) -> np.ndarray:
        return signs[t] * signs * kernel_row(t)

    max_iter = max_passes * 2 * n
    converged = False
    iteration = 0
    while iteration < max_iter:
        selected = _select_working_set(gradient, coefs, signs, diag, kernel_row, C, tol)
        if selected is None:
            converged = True
            break
        i, j = selected
        iteration += 1

        q_i, q_j = q_row(i), q_row(j)
        old_i, old_j = coefs[i], coefs[j]
        if signs[i] != signs[j]:
            quad = diag[i] + diag[j] + 2.0 * q_i[j]
            quad = quad if quad > 0 else TAU
            delta = (-gradient[i] - gradient[j]) / quad
            diff = coefs[i] - coefs[j]
            coefs[i] += delta
            coefs[j] += delta
            if diff > 0:
                if coefs[j] < 0:
                    coefs[j] = 0.0
                    coefs[i] = diff
            elif coefs[i] < 0:
                coefs[i] = 0.0
                coefs[j] = -diff
            if diff > 0:
                if coefs[i] > C:
                    coefs[i] = C
                    coefs[j] = C - diff
            elif coefs[j] > C:
                coefs[j] = C
                coefs[i] = C + diff
        else:
            quad = diag[i] + diag[j] - 2.0 * q_i[j]
            quad = quad if quad > 0 else TAU
            delta = (gradient[i] - gradient[j]) / quad
            total = coefs[i] + coefs[j]
            coefs[i] -= delta
            coefs[j] += delta
            if total > C:
                if coefs[i] > C:
                    coefs[i] = C
                    coefs[j] = total - C
            elif coefs[j] < 0:
                coefs[j] = 0.0
                coefs[i] = total
            if total > C:
                if coefs[j] > C:
                    coefs[j] = C
                    coefs[i] = total - C
            elif coefs[i] < 0:
                coefs[i] = 0.0
                coefs[j] = total

        gradient += q_i * (coefs[i] - old_i) + q_j * (coefs[j] - old_j)

    if not converged:
        message = f"SVR dual did not converge within {max_iter} updates (tol={tol:g})"
        if strict:
            raise NoConvergence(message)
        logger.warning(message)

    beta = coefs[:n] - coefs[n:]
    bias = compute_bias(beta, kernel, y, config)
    return SvrModel(
        dual_coefs=beta,
        bias=bias,
        train_inputs=x,
        config=config,
        converged=converged,
        iterations=iteration,
        dual_objective=_dual_value(beta, kernel, y, eps),
    )


def predict(model: SvrModel, query_inputs: np.ndarray) -> np.ndarray:
    """f(t) = sum_i (alpha_i - alpha*_i) K(t_i, t) + b."""
    query = as_inputs(query_inputs)
    if query.shape[1] != model.train_inputs.shape[1]:
        raise DimensionMismatch(
            f"Query dimension {query.shape[1]} != training dimension {model.train_inputs.shape[1]}"
        )
    support = model.support_index
    if support.size == 0:
        return np.full(query.shape[0], model.bias)
    k = svr_kernel(query, model.train_inputs[support], model.config)
    return k @ model.dual_coefs[support] + model.bias


def duality_gap(model: SvrModel, targets: np.ndarray) -> float:
    """Primal minus dual objective at the model's coefficients and bias."""
    y = np.asarray(targets, dtype=float).reshape(-1)
    kernel = svr_kernel(model.train_inputs, model.train_inputs, model.config)
    beta = model.dual_coefs
    fitted = kernel @ beta + model.bias
    slack = np.maximum(np.abs(y - fitted) - model.config.epsilon, 0.0)
    primal = 0.5 * beta @ kernel @ beta + model.config.C * slack.sum()
    return float(primal - _dual_value(beta, kernel, y, model.config.epsilon))


def kkt_violation(model: SvrModel, targets: np.ndarray) -> float:
    """Largest KKT residual over the training points."""
    y = np.asarray(targets, dtype=float).reshape(-1)
    residual = y - predict(model, model.train_inputs)
    beta = model.dual_coefs
    eps, C = model.config.epsilon, model.config.C
    bound_tol = 1e-12 * C
    violation = np.where(
        np.abs(beta) <= bound_tol,
        np.maximum(np.abs(residual) - eps, 0.0),
        np.where(
            beta >= C - bound_tol,
            np.maximum(eps - residual, 0.0),
            np.where(
                beta <= -(C - bound_tol),
                np.maximum(residual + eps, 0.0),
                np.abs(residual - np.sign(beta) * eps),
            ),
        ),
    )
    return float(violation.max())


def epsilon_insensitive_loss(model: SvrModel, inputs: np.ndarray, targets: np.ndarray) -> float:
    residual = np.asarray(targets, dtype=float).reshape(-1) - predict(model, inputs)
    return float(np.maximum(np.abs(residual) - model.config.epsilon, 0.0).sum())


def default_grid(degree: int = 2, kernels: Sequence[str] = SVR_KERNELS) -> List[SvrConfig]:
    """All (kernel, epsilon, C, coef0) cells; coef0 only varies for polynomial and sigmoid."""
    grid = []
    for kind in kernels:
        offsets = COEF0_GRID if kind in ("polynomial", "sigmoid") else (0.0,)
        for eps, C, coef0 in itertools.product(EPSILON_GRID, C_GRID, offsets):
            grid.append(SvrConfig(C=C, epsilon=eps, kernel_kind=kind, coef0=coef0, degree=degree))
    return grid


def grid_search(
    inputs: np.ndarray,
    targets: np.ndarray,
    holdout_days: int = 28,
    grid: Optional[Iterable[SvrConfig]] = None,
    tol: float = 1e-3,
    max_passes: int = 200,
) -> SvrConfig:
    """Config with the lowest RMSE on the last ``holdout_days`` rows.

    Equal scores go to the smaller C, then the larger epsilon.
    """
    x = as_inputs(inputs)
    y = np.asarray(targets, dtype=float).reshape(-1)
    cells = list(grid) if grid is not None else default_grid()
    if not cells:
        raise ModelError("SVR grid is empty")
    if len(cells) == 1:
        return cells[0]
    if holdout_days < 1 or y.shape[0] - holdout_days < 2:
        raise WindowTooShort(
            f"SVR grid search needs more than {holdout_days} + 1 rows, got {y.shape[0]}"
        )

    fit_x, fit_y = x[:-holdout_days], y[:-holdout_days]
    hold_x, hold_y = x[-holdout_days:], y[-holdout_days:]
    best: Optional[SvrConfig] = None
    best_key = None
    for cell in cells:
        model = solve_dual(fit_x, fit_y, cell, tol=tol, max_passes=max_passes)
        rmse = float(np.sqrt(np.mean((predict(model, hold_x) - hold_y) ** 2)))
        if not np.isfinite(rmse):
            continue
        key = (rmse, cell.C, -cell.epsilon)
        if best_key is None or key < best_key:
            best, best_key = cell, key

    if best is None:
        raise ModelError("No SVR grid cell produced a finite holdout RMSE")
    logger.debug(
        f"SVR grid picked {best.kernel_kind} C={best.C} eps={best.epsilon} "
        f"coef0={best.coef0} (holdout RMSE {best_key[0]:.4f})"
    )
    return best


class SvrForecaster(BaseForecaster):
    """Per-hour SVR with bootstrap conformal intervals.

    With ``conformal.split`` the last ``calibration_days`` of the window are
    held out of the fit and supply the scores; otherwise the scores are the
    in-sample residuals.
    """

    def __init__(self, settings: Settings):
        super().__init__(settings)
        self.config: Optional[SvrConfig] = None
        self.model: Optional[SvrModel] = None
        self.calibration: Optional[NonconformityScores] = None
        self.target_mean = 0.0
        self.target_std = 1.0
        self.conformal = ConformalConfig.from_settings(settings.conformal)

    def _fit_rows(self, n: int) -> int:
        if not self.settings.conformal.split:
            return n
        fit_rows = n - self.settings.conformal.calibration_days
        if fit_rows < 2:
            raise WindowTooShort(
                f"Split conformal needs more than {self.settings.conformal.calibration_days} + 1 training days, got {n}"
            )
        return fit_rows

    def calibrate(self, inputs: np.ndarray, targets: np.ndarray, rng: np.random.Generator) -> None:
        cfg = self.settings.svr
        if cfg.grid_search:
            rows = self._fit_rows(len(targets))
            self.config = grid_search(
                inputs[:rows],
                targets[:rows],
                holdout_days=cfg.holdout_days,
                grid=default_grid(degree=cfg.degree),
                tol=cfg.tol,
                max_passes=cfg.max_passes,
            )
        else:
            self.config = SvrConfig(degree=cfg.degree)
        self.refresh(inputs, targets)

    def refresh(self, inputs: np.ndarray, targets: np.ndarray) -> None:
        cfg = self.settings.svr
        targets = np.asarray(targets, dtype=float)
        rows = self._fit_rows(len(targets))
        self.model = solve_dual(inputs[:rows], targets[:rows], self.config, tol=cfg.tol, max_passes=cfg.max_passes)
        if rows < len(targets):
            self.calibration = scores(targets[rows:], predict(self.model, inputs[rows:]))
        else:
            self.calibration = scores(targets, predict(self.model, inputs))
        self.target_mean = float(np.mean(targets))
        self.target_std = float(np.std(targets))

    def predict(self, inputs: np.ndarray, rng: Optional[np.random.Generator] = None) -> Forecast:
        rng = self._stream(rng)
        points = predict(self.model, inputs)
        intervals = [
            auto_widen(p, self.calibration, self.target_mean, self.target_std, self.conformal, rng)
            for p in points
        ]
        return Forecast(
            model=self.name,
            point=points,
            lower=np.array([i.lower for i in intervals]),
            upper=np.array([i.upper for i in intervals]),
        )
