"""Gaussian process regression with a composite SE + RQ kernel.

Hyperparameters are fitted by maximizing the log marginal likelihood with
L-BFGS-B from several random starts; the posterior is kept as a Cholesky
factor so that a daily refresh with frozen hyperparameters is a single
factorization.
"""

import logging
from dataclasses import dataclass, replace
from typing import Literal, Optional, Tuple

import numpy as np
from scipy import linalg, optimize
from scipy.stats import norm

from ..config import Settings
from ..exceptions import AllRestartsFailed, DimensionMismatch, ModelError, NotFactorizable
from .base import BaseForecaster, Forecast
from .kernels import (
    ACTIVE_PARAMS,
    PARAM_NAMES,
    KernelParams,
    as_inputs,
    cross_gram,
    gram_param_gradients,
    jittered_cholesky,
    kernel_value,
    pairwise_distances,
)

logger = logging.getLogger(__name__)

GpKernel = Literal["se", "rq", "sum"]
MIN_TRAINING_PAIRS = 8
_INIT_LOW, _INIT_HIGH = np.log(0.1), np.log(10.0)


@dataclass(frozen=True)
class GprModel:
    """A fitted GP posterior.

    ``weights`` solve (K + sigma_n^2 I) w = y - target_mean against the
    stored factor.
    """

    train_inputs: np.ndarray
    train_targets: np.ndarray
    params: KernelParams
    kernel: GpKernel
    factor: np.ndarray
    weights: np.ndarray
    target_mean: float
    jitter: float = 0.0
    final_lml: float = float("nan")
    iterations: int = 0
    restart_lmls: Tuple[float, ...] = ()
    converged: bool = True

    @property
    def n(self) -> int:
        return self.train_inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.train_inputs.shape[1]


@dataclass(frozen=True)
class GprPrediction:
    """Posterior mean, latent variance and the 1 - alpha interval per query."""

    mean: np.ndarray
    variance: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float = 0.05

    def __len__(self) -> int:
        return self.mean.shape[0]


class GprProblem:
    """Log marginal likelihood of fixed training data as a function of the kernel."""

    def __init__(self, inputs: np.ndarray, targets: np.ndarray, kernel: GpKernel = "sum"):
        self.inputs = as_inputs(inputs)
        self.targets = np.asarray(targets, dtype=float).reshape(-1)
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise DimensionMismatch(
                f"{self.inputs.shape[0]} inputs but {self.targets.shape[0]} targets"
            )
        if kernel not in ACTIVE_PARAMS:
            raise ModelError(f"GP kernel must be one of {list(ACTIVE_PARAMS)}, got '{kernel}'")
        self.kernel = kernel
        self.distances = pairwise_distances(self.inputs)
        self.n = self.targets.shape[0]

    def covariance(self, params: KernelParams) -> np.ndarray:
        k = kernel_value(self.distances, params, self.kernel)
        k = 0.5 * (k + k.T)
        return k + params.sigma_n**2 * np.eye(self.n)

    def factorize(self, params: KernelParams) -> Tuple[np.ndarray, np.ndarray, float]:
        """Cholesky factor, weights and jitter of K + sigma_n^2 I."""
        factor, jitter = jittered_cholesky(self.covariance(params))
        weights = linalg.cho_solve((factor, True), self.targets)
        return factor, weights, jitter

    def log_marginal_likelihood(self, params: KernelParams) -> float:
        factor, weights, _ = self.factorize(params)
        return float(
            -0.5 * self.targets @ weights
            - np.log(np.diag(factor)).sum()
            - 0.5 * self.n * np.log(2.0 * np.pi)
        )

    def lml_gradient(self, params: KernelParams) -> np.ndarray:
        """dLML/d(log theta) over the kernel's active parameters."""
        return self.value_and_gradient(params)[1]

    def value_and_gradient(self, params: KernelParams) -> Tuple[float, np.ndarray]:
        factor, weights, _ = self.factorize(params)
        lml = float(
            -0.5 * self.targets @ weights
            - np.log(np.diag(factor)).sum()
            - 0.5 * self.n * np.log(2.0 * np.pi)
        )
        inner = np.outer(weights, weights) - linalg.cho_solve((factor, True), np.eye(self.n))
        grads = gram_param_gradients(self.inputs, params, self.kernel, distances=self.distances)
        gradient = np.array([0.5 * np.einsum("ij,ji->", inner, g) for g in grads.values()])
        return lml, gradient


def log_marginal_likelihood(
    inputs: np.ndarray, targets: np.ndarray, params: KernelParams, kernel: GpKernel = "sum"
) -> float:
    return GprProblem(inputs, targets, kernel).log_marginal_likelihood(params)


def lml_gradient(
    inputs: np.ndarray, targets: np.ndarray, params: KernelParams, kernel: GpKernel = "sum"
) -> np.ndarray:
    return GprProblem(inputs, targets, kernel).lml_gradient(params)


def _active_indices(kernel: GpKernel) -> np.ndarray:
    return np.array([PARAM_NAMES.index(name) for name in ACTIVE_PARAMS[kernel]])


def _scales(problem: GprProblem) -> np.ndarray:
    """Per-parameter log offsets: amplitudes by target std, lengths by median distance."""
    y_std = float(np.std(problem.targets)) or 1.0
    upper = problem.distances[np.triu_indices(problem.n, k=1)]
    upper = upper[upper > 0]
    length = float(np.median(upper)) if upper.size else 1.0
    offsets = {
        "sigma_se": y_std,
        "ell_se": length,
        "sigma_rq": y_std,
        "ell_rq": length,
        "alpha_rq": 1.0,
        "sigma_n": y_std,
    }
    return np.log(np.array([offsets[name] for name in PARAM_NAMES]))


def _bounds(kernel: GpKernel, scales: np.ndarray, noise_floor: float) -> list:
    bounds = []
    for idx in _active_indices(kernel):
        name = PARAM_NAMES[idx]
        if name == "sigma_n":
            bounds.append((np.log(noise_floor), scales[idx] + np.log(10.0)))
        elif name == "alpha_rq":
            bounds.append((np.log(1e-3), np.log(1e4)))
        else:
            bounds.append((scales[idx] - np.log(1e3), scales[idx] + np.log(1e3)))
    return bounds


def posterior(
    inputs: np.ndarray,
    targets: np.ndarray,
    params: KernelParams,
    kernel: GpKernel,
    **records,
) -> GprModel:
    """Condition on (inputs, targets) with fixed hyperparameters."""
    inputs = as_inputs(inputs)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    target_mean = float(np.mean(targets))
    problem = GprProblem(inputs, targets - target_mean, kernel)
    factor, weights, jitter = problem.factorize(params)
    return GprModel(
        train_inputs=inputs,
        train_targets=targets,
        params=params,
        kernel=kernel,
        factor=factor,
        weights=weights,
        target_mean=target_mean,
        jitter=jitter,
        **records,
    )


def fit(
    inputs: np.ndarray,
    targets: np.ndarray,
    restarts: int = 5,
    seed: int = 0,
    kernel: GpKernel = "sum",
    noise_floor: float = 1e-4,
    max_iter: int = 200,
) -> GprModel:
    """Maximum-likelihood hyperparameters and the resulting posterior.

    Each restart draws every active log-parameter uniformly from
    [log 0.1, log 10] around its data scale and runs L-BFGS-B on the
    negative LML. The best finishing LML wins.
    """
    inputs = as_inputs(inputs)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if targets.shape[0] < MIN_TRAINING_PAIRS:
        raise ModelError(
            f"GP fit needs at least {MIN_TRAINING_PAIRS} training pairs, got {targets.shape[0]}"
        )
    if restarts < 1:
        raise ModelError("restarts must be >= 1")

    problem = GprProblem(inputs, targets - np.mean(targets), kernel)
    active = _active_indices(kernel)
    scales = _scales(problem)
    bounds = _bounds(kernel, scales, noise_floor)
    rng = np.random.default_rng(seed)

    def objective(theta_active: np.ndarray) -> Tuple[float, np.ndarray]:
        theta = scales.copy()
        theta[active] = theta_active
        lml, gradient = problem.value_and_gradient(KernelParams.from_theta(theta))
        return -lml, -gradient

    best: Optional[optimize.OptimizeResult] = None
    restart_lmls = []
    for attempt in range(restarts):
        start = scales[active] + rng.uniform(_INIT_LOW, _INIT_HIGH, size=active.size)
        start = np.clip(start, [b[0] for b in bounds], [b[1] for b in bounds])
        try:
            result = optimize.minimize(
                objective,
                start,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": max_iter, "ftol": 1e-12, "gtol": 1e-8},
            )
        except (NotFactorizable, linalg.LinAlgError, FloatingPointError, ValueError) as e:
            logger.debug(f"GP restart {attempt + 1}/{restarts} failed: {e}")
            continue
        if not np.isfinite(result.fun):
            logger.debug(f"GP restart {attempt + 1}/{restarts} ended at a non-finite LML")
            continue
        restart_lmls.append(float(-result.fun))
        logger.debug(
            f"GP restart {attempt + 1}/{restarts}: LML {-result.fun:.6f} after {result.nit} iterations"
        )
        if best is None or result.fun < best.fun:
            best = result

    if best is None:
        raise AllRestartsFailed(f"All {restarts} GP restarts failed")

    theta = scales.copy()
    theta[active] = best.x
    params = KernelParams.from_theta(theta)
    logger.debug(
        f"GP fit ({kernel}): LML {-best.fun:.4f}, "
        + ", ".join(f"{k}={v:.4g}" for k, v in params.as_dict().items())
    )
    return posterior(
        inputs,
        targets,
        params,
        kernel,
        final_lml=float(-best.fun),
        iterations=int(best.nit),
        restart_lmls=tuple(restart_lmls),
        converged=bool(best.success),
    )


def refit_posterior(model: GprModel, inputs: np.ndarray, targets: np.ndarray) -> GprModel:
    """Posterior on new training data with the model's hyperparameters kept."""
    refreshed = posterior(inputs, targets, model.params, model.kernel)
    return replace(
        refreshed,
        final_lml=model.final_lml,
        iterations=model.iterations,
        restart_lmls=model.restart_lmls,
        converged=model.converged,
    )


def predict(
    model: GprModel,
    query_inputs: np.ndarray,
    alpha: float = 0.05,
    include_noise: bool = False,
) -> GprPrediction:
    """Posterior mean, latent variance and Gaussian interval at the queries.

    The interval uses the latent posterior variance unless
    ``include_noise`` adds sigma_n^2.
    """
    query = as_inputs(query_inputs)
    if query.shape[1] != model.dim:
        raise DimensionMismatch(f"Query dimension {query.shape[1]} != training dimension {model.dim}")
    if not 0.0 < alpha < 1.0:
        raise ModelError(f"alpha must be in (0, 1), got {alpha}")

    k_star = cross_gram(query, model.train_inputs, model.params, model.kernel)
    mean = model.target_mean + k_star @ model.weights
    v = linalg.solve_triangular(model.factor, k_star.T, lower=True)
    variance = model.params.prior_variance(model.kernel) - np.einsum("ij,ij->j", v, v)
    variance = np.maximum(variance, 0.0)

    spread = variance + model.params.sigma_n**2 if include_noise else variance
    half_width = norm.ppf(1.0 - alpha / 2.0) * np.sqrt(spread)
    return GprPrediction(
        mean=mean,
        variance=variance,
        lower=mean - half_width,
        upper=mean + half_width,
        alpha=alpha,
    )


class GprForecaster(BaseForecaster):
    """Per-hour GP: MLE on calibration days, posterior refresh in between."""

    def __init__(self, settings: Settings):
        super().__init__(settings)
        self.model: Optional[GprModel] = None

    def calibrate(self, inputs: np.ndarray, targets: np.ndarray, rng: np.random.Generator) -> None:
        cfg = self.settings.gpr
        self.model = fit(
            inputs,
            targets,
            restarts=cfg.restarts,
            seed=int(rng.integers(2**32)),
            kernel=cfg.kernel,
            noise_floor=cfg.noise_floor,
            max_iter=cfg.max_iter,
        )
        if not self.model.converged:
            self.logger.debug("Best GP restart stopped before meeting the optimizer tolerance")

    def refresh(self, inputs: np.ndarray, targets: np.ndarray) -> None:
        self.model = refit_posterior(self.model, inputs, targets)

    def predict(self, inputs: np.ndarray, rng: Optional[np.random.Generator] = None) -> Forecast:
        cfg = self.settings.gpr
        result = predict(self.model, inputs, alpha=cfg.alpha, include_noise=cfg.interval_includes_noise)
        return Forecast(model=self.name, point=result.mean, lower=result.lower, upper=result.upper)
