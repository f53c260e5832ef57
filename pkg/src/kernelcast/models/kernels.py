"""Covariance functions, Gram matrices and their parameter gradients.

The GP kernel is isotropic over the full input vector: every covariance is a
function of the Euclidean distance r = ||t_i - t_j|| only (no ARD weights).

    K_se(r) = s_se^2 exp(-r^2 / (2 l_se^2))
    K_rq(r) = s_rq^2 (1 + r^2 / (2 a l_rq^2))^(-a)
    K_lp(r) = A^2 exp(-2 sin^2(pi r / p) / l_lp^2) exp(-r^2 / (2 s_lp^2))

The RQ length scale enters squared everywhere.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.spatial.distance import cdist, pdist, squareform

from ..exceptions import ConstantMatrix, DimensionMismatch, ModelError, NotFactorizable, PeriodicParamsMissing

logger = logging.getLogger(__name__)

KernelKind = Literal["se", "rq", "sum", "lp"]
PARAM_NAMES = ("sigma_se", "ell_se", "sigma_rq", "ell_rq", "alpha_rq", "sigma_n")
ACTIVE_PARAMS: Dict[str, Tuple[str, ...]] = {
    "se": ("sigma_se", "ell_se", "sigma_n"),
    "rq": ("sigma_rq", "ell_rq", "alpha_rq", "sigma_n"),
    "sum": PARAM_NAMES,
}
JITTER_LADDER = tuple(10.0**e for e in range(-10, -3))


@dataclass(frozen=True)
class PeriodicParams:
    """Local-periodic block: period p, periodic length ell_lp, decay length sigma_lp."""

    p: float
    ell_lp: float
    sigma_lp: float
    amplitude: float = 1.0

    def __post_init__(self):
        for name in ("p", "ell_lp", "sigma_lp", "amplitude"):
            if not getattr(self, name) > 0:
                raise ModelError(f"Periodic parameter {name} must be positive")


@dataclass(frozen=True)
class KernelParams:
    """Composite kernel hyperparameters, stored as natural logs."""

    log_values: Tuple[float, ...]
    periodic: Optional[PeriodicParams] = None

    def __post_init__(self):
        if len(self.log_values) != len(PARAM_NAMES):
            raise ModelError(f"Expected {len(PARAM_NAMES)} log-parameters, got {len(self.log_values)}")

    @classmethod
    def create(
        cls,
        sigma_se: float = 1.0,
        ell_se: float = 1.0,
        sigma_rq: float = 1.0,
        ell_rq: float = 1.0,
        alpha_rq: float = 1.0,
        sigma_n: float = 0.1,
        periodic: Optional[PeriodicParams] = None,
    ) -> "KernelParams":
        values = (sigma_se, ell_se, sigma_rq, ell_rq, alpha_rq)
        if any(not v > 0 for v in values):
            raise ModelError(f"Kernel parameters must be strictly positive, got {values}")
        if sigma_n < 0:
            raise ModelError(f"sigma_n must be >= 0, got {sigma_n}")
        with np.errstate(divide="ignore"):
            logs = tuple(float(np.log(v)) for v in (*values, sigma_n))
        return cls(log_values=logs, periodic=periodic)

    @classmethod
    def from_theta(cls, theta: np.ndarray, periodic: Optional[PeriodicParams] = None) -> "KernelParams":
        return cls(log_values=tuple(float(v) for v in theta), periodic=periodic)

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.log_values)

    def _get(self, name: str) -> float:
        return float(np.exp(self.log_values[PARAM_NAMES.index(name)]))

    sigma_se = property(lambda self: self._get("sigma_se"))
    ell_se = property(lambda self: self._get("ell_se"))
    sigma_rq = property(lambda self: self._get("sigma_rq"))
    ell_rq = property(lambda self: self._get("ell_rq"))
    alpha_rq = property(lambda self: self._get("alpha_rq"))
    sigma_n = property(lambda self: self._get("sigma_n"))

    def as_dict(self) -> Dict[str, float]:
        return {name: self._get(name) for name in PARAM_NAMES}

    def with_values(self, **values: float) -> "KernelParams":
        merged = {**self.as_dict(), **values}
        return KernelParams.create(**merged, periodic=self.periodic)

    def prior_variance(self, which: KernelKind = "sum") -> float:
        """k(0) of the chosen kernel, noise excluded."""
        return float(kernel_value(np.zeros(1), self, which)[0])


def k_se(r: np.ndarray, params: KernelParams) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return params.sigma_se**2 * np.exp(-(r**2) / (2.0 * params.ell_se**2))


def k_rq(r: np.ndarray, params: KernelParams) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    alpha = params.alpha_rq
    u = r**2 / (2.0 * alpha * params.ell_rq**2)
    return params.sigma_rq**2 * np.exp(-alpha * np.log1p(u))


def k_local_periodic(r: np.ndarray, params: KernelParams) -> np.ndarray:
    lp = params.periodic
    if lp is None:
        raise PeriodicParamsMissing("Local-periodic kernel needs KernelParams.periodic")
    r = np.asarray(r, dtype=float)
    periodic = np.exp(-2.0 * np.sin(np.pi * r / lp.p) ** 2 / lp.ell_lp**2)
    decay = np.exp(-(r**2) / (2.0 * lp.sigma_lp**2))
    return lp.amplitude**2 * periodic * decay


def effective_length_scale(params: KernelParams) -> float:
    """Length scale of the Gaussian that matches k_lp for small r.

    1 / l_eff^2 = 1 / s_lp^2 + 4 pi^2 / (p^2 l_lp^2)
    """
    lp = params.periodic
    if lp is None:
        raise PeriodicParamsMissing("Effective length scale needs KernelParams.periodic")
    inv_sq = 1.0 / lp.sigma_lp**2 + 4.0 * np.pi**2 / (lp.p**2 * lp.ell_lp**2)
    return float(1.0 / np.sqrt(inv_sq))


def kernel_value(r: np.ndarray, params: KernelParams, which: KernelKind = "sum") -> np.ndarray:
    if which == "se":
        return k_se(r, params)
    if which == "rq":
        return k_rq(r, params)
    if which == "sum":
        return k_se(r, params) + k_rq(r, params)
    if which == "lp":
        return k_local_periodic(r, params)
    raise ModelError(f"Unknown kernel '{which}'. Available kernels: se, rq, sum, lp")


def _se_derivative(r: np.ndarray, params: KernelParams, order: int) -> np.ndarray:
    ell2 = params.ell_se**2
    k = k_se(r, params)
    if order == 1:
        return -(r / ell2) * k
    return (r**2 / ell2**2 - 1.0 / ell2) * k


def _rq_derivative(r: np.ndarray, params: KernelParams, order: int) -> np.ndarray:
    ell2 = params.ell_rq**2
    alpha = params.alpha_rq
    s2 = params.sigma_rq**2
    base = 1.0 + r**2 / (2.0 * alpha * ell2)
    if order == 1:
        return -(r / ell2) * s2 * base ** (-alpha - 1.0)
    return (s2 / ell2) * base ** (-alpha - 2.0) * (-base + (alpha + 1.0) * r**2 / (alpha * ell2))


def kernel_derivatives(
    r: np.ndarray,
    params: KernelParams,
    order: Literal[1, 2] = 1,
    which: Literal["se", "rq", "sum"] = "sum",
) -> np.ndarray:
    """dK/dr or d2K/dr2 of the SE, RQ or summed kernel."""
    if order not in (1, 2):
        raise ModelError(f"order must be 1 or 2, got {order}")
    r = np.asarray(r, dtype=float)
    if which == "se":
        return _se_derivative(r, params, order)
    if which == "rq":
        return _rq_derivative(r, params, order)
    if which == "sum":
        return _se_derivative(r, params, order) + _rq_derivative(r, params, order)
    raise ModelError(f"Unknown kernel '{which}' for derivatives")


@dataclass(frozen=True)
class GramMatrix:
    """Kernel matrix and the diagonal jitter needed to factorize it.

    ``values`` holds the exact kernel evaluations; ``jittered`` adds
    ``jitter_applied`` to the diagonal.
    """

    values: np.ndarray
    jitter_applied: float = 0.0

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def jittered(self) -> np.ndarray:
        return self.values + self.jitter_applied * np.eye(self.n)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.jittered)[0])


def as_inputs(inputs: np.ndarray) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ModelError(f"Inputs must be a non-empty n x d array, got shape {x.shape}")
    return x


def pairwise_distances(a: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """Euclidean distances; exact zeros on the diagonal when b is None."""
    a = as_inputs(a)
    if b is None:
        if a.shape[0] == 1:
            return np.zeros((1, 1))
        return squareform(pdist(a, metric="euclidean"))
    b = as_inputs(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"Input dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    return cdist(a, b, metric="euclidean")


def jittered_cholesky(matrix: np.ndarray) -> Tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter 1e-10 -> 1e-4 on failure."""
    eye = np.eye(matrix.shape[0])
    for jitter in (0.0, *JITTER_LADDER):
        try:
            factor = linalg.cholesky(matrix + jitter * eye, lower=True)
        except linalg.LinAlgError:
            continue
        if jitter > 0:
            logger.debug(f"Cholesky needed jitter {jitter:g}")
        return factor, jitter
    raise NotFactorizable(
        f"Matrix of size {matrix.shape[0]} is not factorizable with jitter up to {JITTER_LADDER[-1]:g}"
    )


def gram(
    inputs: np.ndarray,
    params: KernelParams,
    which: KernelKind = "sum",
    factorize: bool = True,
) -> GramMatrix:
    """K[i, j] = k(||t_i - t_j||) with the jitter that makes it factorizable."""
    values = kernel_value(pairwise_distances(inputs), params, which)
    values = 0.5 * (values + values.T)
    jitter = jittered_cholesky(values)[1] if factorize else 0.0
    return GramMatrix(values=values, jitter_applied=jitter)


def cross_gram(
    a: np.ndarray, b: np.ndarray, params: KernelParams, which: KernelKind = "sum"
) -> np.ndarray:
    return kernel_value(pairwise_distances(a, b), params, which)


def gram_param_gradients(
    inputs: np.ndarray,
    params: KernelParams,
    which: Literal["se", "rq", "sum"] = "sum",
    distances: Optional[np.ndarray] = None,
) -> Dict[str, np.ndarray]:
    """dK/d(log theta) for each active parameter, noise term included.

    K here is the noisy matrix K + sigma_n^2 I.
    """
    r = pairwise_distances(inputs) if distances is None else distances
    r2 = r**2
    n = r.shape[0]
    grads: Dict[str, np.ndarray] = {}

    if which in ("se", "sum"):
        kse = k_se(r, params)
        grads["sigma_se"] = 2.0 * kse
        grads["ell_se"] = kse * r2 / params.ell_se**2
    if which in ("rq", "sum"):
        alpha = params.alpha_rq
        ell2 = params.ell_rq**2
        u = r2 / (2.0 * alpha * ell2)
        krq = k_rq(r, params)
        grads["sigma_rq"] = 2.0 * krq
        grads["ell_rq"] = params.sigma_rq**2 * (r2 / ell2) * np.exp((-alpha - 1.0) * np.log1p(u))
        grads["alpha_rq"] = krq * alpha * (u / (1.0 + u) - np.log1p(u))
    grads["sigma_n"] = 2.0 * params.sigma_n**2 * np.eye(n)
    return {name: grads[name] for name in ACTIVE_PARAMS[which]}


@dataclass(frozen=True)
class InsignificanceCount:
    count: int
    fraction: float


def insignificance_fraction(matrix: Union[GramMatrix, np.ndarray], threshold: float = 0.2) -> InsignificanceCount:
    """Entries below ``threshold`` after min-max scaling the matrix to [0, 1]."""
    values = matrix.values if isinstance(matrix, GramMatrix) else np.asarray(matrix, dtype=float)
    low, high = float(values.min()), float(values.max())
    if high == low:
        raise ConstantMatrix("Cannot min-max scale a constant matrix")
    scaled = (values - low) / (high - low)
    count = int((scaled < threshold).sum())
    return InsignificanceCount(count=count, fraction=count / values.size)


def export_gram_csv(matrix: Union[GramMatrix, np.ndarray], path: Union[str, Path]) -> Path:
    values = matrix.values if isinstance(matrix, GramMatrix) else np.asarray(matrix)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(values).to_csv(path, index=False, header=False, float_format="%.17g")
    return path
