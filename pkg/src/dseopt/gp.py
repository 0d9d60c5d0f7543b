"""Exact Gaussian-process regression surrogate.

Squared-exponential kernel with per-dimension lengthscales, Gaussian
observation noise, Cholesky-based posterior, log marginal likelihood with
analytic gradients, and multi-start projected gradient ascent for
hyperparameter fitting. All hyperparameters live in log space.

The predictive distribution at a point x given training data (X, y) is

    mean(x) = k(x, X) @ (K(X, X) + noise * I)^{-1} @ y
    var(x)  = k(x, x) - k(x, X) @ (K(X, X) + noise * I)^{-1} @ k(X, x)

computed through a cached Cholesky factor rather than an explicit inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import (
    AllStartsFailedError,
    CacheMissingError,
    DimensionMismatchError,
    NotPositiveDefiniteError,
)

LOG_2PI = math.log(2.0 * math.pi)

# Projection box for fitting, in log space: lengthscales, signal variance,
# noise variance. Keeps noise from collapsing to zero on small data sets.
LOG_LENGTHSCALE_BOUNDS = (math.log(1e-3), math.log(1e3))
LOG_SIGNAL_VAR_BOUNDS = (math.log(1e-6), math.log(1e3))
LOG_NOISE_VAR_BOUNDS = (math.log(1e-8), math.log(1e1))

# Diagonal jitter escalation, as multiples of mean(diag), tried in order.
JITTER_LEVELS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

MAX_ASCENT_ITERS = 200
GRAD_TOL = 1e-6
# Ascent also stops after this many consecutive accepted steps with only
# marginal likelihood gain; flat ridges otherwise pin every start at the
# iteration cap without measurable model improvement.
STAGNATION_WINDOW = 5
STAGNATION_RTOL = 1e-9


@dataclass(frozen=True)
class KernelParams:
    """Log-space kernel hyperparameters: signal variance, ARD lengthscales, noise."""

    log_signal_variance: float
    log_lengthscales: tuple[float, ...]
    log_noise_variance: float

    def __post_init__(self):
        vals = (self.log_signal_variance, *self.log_lengthscales, self.log_noise_variance)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("kernel hyperparameters must be finite")

    @property
    def signal_variance(self) -> float:
        return math.exp(self.log_signal_variance)

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(np.asarray(self.log_lengthscales))

    @property
    def noise_variance(self) -> float:
        return math.exp(self.log_noise_variance)

    def to_vector(self) -> np.ndarray:
        """Flat layout: [log_signal_variance, log_lengthscales..., log_noise_variance]."""
        return np.array(
            [self.log_signal_variance, *self.log_lengthscales, self.log_noise_variance]
        )

    @classmethod
    def from_vector(cls, theta: np.ndarray) -> "KernelParams":
        theta = np.asarray(theta, dtype=float)
        return cls(
            log_signal_variance=float(theta[0]),
            log_lengthscales=tuple(float(t) for t in theta[1:-1]),
            log_noise_variance=float(theta[-1]),
        )

    def to_dict(self) -> dict:
        return {
            "signal_variance": self.signal_variance,
            "lengthscales": self.lengthscales.tolist(),
            "noise_variance": self.noise_variance,
        }


@dataclass(frozen=True)
class Prediction:
    """Predictive mean and variance at one query point."""

    mean: float
    variance: float


def kernel(params: KernelParams, a: np.ndarray, b: np.ndarray) -> float:
    """Squared-exponential covariance between two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = len(params.log_lengthscales)
    if a.shape != (d,) or b.shape != (d,):
        raise DimensionMismatchError(
            f"kernel inputs must have dimension {d}, got {a.shape} and {b.shape}"
        )
    ls = params.lengthscales
    sq = np.sum(((a - b) / ls) ** 2)
    return params.signal_variance * math.exp(-0.5 * sq)


def _kernel_matrix(params: KernelParams, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix between row sets A (m,d) and B (n,d).

    Uses the expanded weighted squared distance (a-b)^2 = a^2 + b^2 - 2ab so
    the inner loop is a single matrix product.
    """
    w = 1.0 / params.lengthscales**2
    sq = _weighted_sqdist(A, B, w)
    return params.signal_variance * np.exp(-0.5 * sq)


def _weighted_sqdist(A: np.ndarray, B: np.ndarray, w: np.ndarray) -> np.ndarray:
    a2 = (A * A) @ w
    b2 = (B * B) @ w
    cross = A @ (B * w).T
    return np.maximum(a2[:, None] + b2[None, :] - 2.0 * cross, 0.0)


def _chol_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of K, escalating diagonal jitter on failure."""
    n = K.shape[0]
    mean_diag = float(np.mean(np.diag(K))) if n else 0.0
    for level in JITTER_LEVELS:
        try:
            L = cholesky(K + level * mean_diag * np.eye(n), lower=True)
            return L, level * mean_diag
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefiniteError(
        "covariance matrix not positive definite after jitter schedule"
    )


class GpModel:
    """GP posterior over normalized inputs; immutable once caches are fitted.

    Targets may carry an affine transform (shift/scale): the model stores and
    fits transformed targets while ``predict`` reports in original units.
    Direct construction leaves the transform at identity, so ``predict``
    realizes the plain posterior formulas on the stored (X, y).
    """

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        params: KernelParams,
        y_shift: float = 0.0,
        y_scale: float = 1.0,
    ):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.size == 0:
            X = X.reshape(0, len(params.log_lengthscales))
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} inputs vs {y.shape[0]} targets")
        if X.shape[1] != len(params.log_lengthscales):
            raise DimensionMismatchError(
                f"inputs have dimension {X.shape[1]}, kernel has "
                f"{len(params.log_lengthscales)} lengthscales"
            )
        self.X = X
        self.y = y
        self.params = params
        self.y_shift = float(y_shift)
        self.y_scale = float(y_scale)
        self._chol: np.ndarray | None = None
        self._alpha: np.ndarray | None = None
        self._jitter: float | None = None
        # training-side terms of the expanded weighted squared distance
        self._w: np.ndarray | None = None
        self._Xw: np.ndarray | None = None
        self._x2: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def space_dim(self) -> int:
        return self.X.shape[1]

    @property
    def chol(self) -> np.ndarray:
        if self._chol is None:
            raise CacheMissingError("call fit_cache() first")
        return self._chol

    @property
    def alpha(self) -> np.ndarray:
        if self._alpha is None:
            raise CacheMissingError("call fit_cache() first")
        return self._alpha

    def fit_cache(self) -> "GpModel":
        """Factorize K(X,X) + noise*I and cache the solve against y."""
        self._w = 1.0 / self.params.lengthscales**2
        self._Xw = self.X * self._w
        self._x2 = (self.X * self.X) @ self._w
        if self.n == 0:
            self._chol = np.zeros((0, 0))
            self._alpha = np.zeros(0)
            self._jitter = 0.0
            return self
        K = _kernel_matrix(self.params, self.X, self.X)
        K[np.diag_indices_from(K)] += self.params.noise_variance
        self._chol, self._jitter = _chol_with_jitter(K)
        self._alpha = cho_solve((self._chol, True), self.y)
        return self

    def _require_cache(self):
        if self._chol is None or self._alpha is None:
            raise CacheMissingError("call fit_cache() first")

    def predict(self, x: np.ndarray) -> Prediction:
        """Posterior mean and variance at one normalized point."""
        means, variances = self.predict_batch(np.atleast_2d(np.asarray(x, dtype=float)))
        return Prediction(mean=float(means[0]), variance=float(variances[0]))

    def predict_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized posterior over rows of X; returns (means, variances)."""
        self._require_cache()
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.space_dim:
            raise DimensionMismatchError(
                f"query dimension {X.shape[1]} != model dimension {self.space_dim}"
            )
        prior_var = self.params.signal_variance
        if self.n == 0:
            means = np.zeros(X.shape[0])
            variances = np.full(X.shape[0], prior_var)
        else:
            q2 = (X * X) @ self._w
            sq = np.maximum(q2[:, None] + self._x2[None, :] - 2.0 * (X @ self._Xw.T), 0.0)
            Kx = prior_var * np.exp(-0.5 * sq)
            means = Kx @ self._alpha
            V = solve_triangular(self._chol, Kx.T, lower=True, check_finite=False)
            variances = prior_var - np.sum(V * V, axis=0)
        variances = np.maximum(variances, 0.0)
        return (
            means * self.y_scale + self.y_shift,
            variances * self.y_scale**2,
        )

    def log_marginal_likelihood(self) -> float:
        """Log marginal likelihood of the stored targets under the model."""
        self._require_cache()
        if self.n == 0:
            return 0.0
        return float(
            -0.5 * self.y @ self._alpha
            - np.sum(np.log(np.diag(self._chol)))
            - 0.5 * self.n * LOG_2PI
        )

    def lml_gradient(self) -> np.ndarray:
        """Gradient of the log marginal likelihood w.r.t. the log hyperparameters.

        Layout matches ``KernelParams.to_vector``.
        """
        self._require_cache()
        if self.n == 0:
            raise ValueError("gradient undefined for an empty model")
        D = _sq_diffs(self.X)
        return _lml_gradient_from_parts(
            D, self.params.to_vector(), self._chol, self._alpha
        )


def _sq_diffs(X: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, flattened to shape (n*n, d)."""
    diff = X[:, None, :] - X[None, :, :]
    n, _, d = diff.shape
    return (diff * diff).reshape(n * n, d)


def _lml_value_from_parts(chol: np.ndarray, alpha: np.ndarray, y: np.ndarray) -> float:
    n = y.shape[0]
    return float(-0.5 * y @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * LOG_2PI)


def _lml_gradient_from_parts(
    D: np.ndarray, theta: np.ndarray, chol: np.ndarray, alpha: np.ndarray
) -> np.ndarray:
    """Analytic gradient 0.5*tr((aa^T - K^{-1}) dK/dtheta) per log-hyperparameter.

    ``D`` holds flattened per-dimension squared differences, shape (n*n, d).
    """
    n = alpha.shape[0]
    d = D.shape[1]
    sf2 = math.exp(theta[0])
    inv_ls2 = np.exp(-2.0 * theta[1 : 1 + d])
    sn2 = math.exp(theta[-1])
    Kf = sf2 * np.exp(-0.5 * (D @ inv_ls2).reshape(n, n))
    Kinv = cho_solve((chol, True), np.eye(n))
    A = np.outer(alpha, alpha) - Kinv
    grad = np.empty(d + 2)
    AKf = A * Kf
    grad[0] = 0.5 * np.sum(AKf)
    grad[1 : 1 + d] = 0.5 * (AKf.reshape(n * n) @ D) * inv_ls2
    grad[-1] = 0.5 * sn2 * np.trace(A)
    return grad


def _theta_bounds(d: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([LOG_SIGNAL_VAR_BOUNDS[0]] + [LOG_LENGTHSCALE_BOUNDS[0]] * d + [LOG_NOISE_VAR_BOUNDS[0]])
    hi = np.array([LOG_SIGNAL_VAR_BOUNDS[1]] + [LOG_LENGTHSCALE_BOUNDS[1]] * d + [LOG_NOISE_VAR_BOUNDS[1]])
    return lo, hi


def _factorize(D: np.ndarray, y: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cholesky factor and alpha for hyperparameters theta over cached diffs."""
    n = y.shape[0]
    d = D.shape[1]
    sf2 = math.exp(theta[0])
    inv_ls2 = np.exp(-2.0 * theta[1 : 1 + d])
    sn2 = math.exp(theta[-1])
    K = sf2 * np.exp(-0.5 * (D @ inv_ls2).reshape(n, n))
    K[np.diag_indices(n)] += sn2
    L, _ = _chol_with_jitter(K)
    a = cho_solve((L, True), y)
    return L, a


def _ascend_from(
    D: np.ndarray, y: np.ndarray, theta0: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> tuple[np.ndarray, float]:
    """Projected gradient ascent with backtracking from one starting point.

    The backtracking search warm-starts from twice the previously accepted
    step so well-scaled regions cost one probe per iteration.
    """
    theta = np.clip(theta0, lo, hi)
    L, a = _factorize(D, y, theta)
    val = _lml_value_from_parts(L, a, y)
    grad = _lml_gradient_from_parts(D, theta, L, a)
    step0 = 1.0
    stagnant = 0
    for _ in range(MAX_ASCENT_ITERS):
        if np.max(np.abs(grad)) < GRAD_TOL:
            break
        step = step0
        accepted = False
        while step >= 1e-12:
            cand = np.clip(theta + step * grad, lo, hi)
            direction = cand - theta
            slope = grad @ direction
            if slope <= 0.0:
                break
            try:
                Lc, ac = _factorize(D, y, cand)
            except NotPositiveDefiniteError:
                step *= 0.5
                continue
            cval = _lml_value_from_parts(Lc, ac, y)
            if cval >= val + 1e-4 * slope:
                gain = cval - val
                theta, val = cand, cval
                grad = _lml_gradient_from_parts(D, cand, Lc, ac)
                accepted = True
                stagnant = stagnant + 1 if gain < STAGNATION_RTOL * (1.0 + abs(val)) else 0
                break
            step *= 0.5
        if not accepted or stagnant >= STAGNATION_WINDOW:
            break
        step0 = min(2.0 * step, 1.0)
    return theta, val


def _fit_starts(d: int, restarts: int, seed: int) -> list[np.ndarray]:
    """Deterministic starting points: one heuristic default, rest seeded-random.

    Random starts are isotropic (one shared lengthscale draw) with unit-scale
    signal variance, matching standardized targets over the unit cube;
    per-dimension structure is left for the ascent itself to discover.
    """
    starts = [np.array([0.0] + [math.log(0.5)] * d + [math.log(1e-2)])]
    for i in range(1, restarts):
        rng = np.random.default_rng([seed, i])
        ls = rng.uniform(math.log(0.1), math.log(1.0))
        starts.append(
            np.concatenate(
                [
                    rng.uniform(math.log(0.5), math.log(2.0), 1),
                    np.full(d, ls),
                    rng.uniform(math.log(1e-4), math.log(1e-1), 1),
                ]
            )
        )
    return starts


def fit_hyperparams(
    X: np.ndarray, y: np.ndarray, restarts: int = 5, seed: int = 0
) -> GpModel:
    """Fit kernel hyperparameters by maximizing the log marginal likelihood.

    Targets are standardized internally (zero mean, unit spread over the
    current training set); predictions from the returned model are reported
    in the original units. Multi-start projected gradient ascent, best
    achieved likelihood wins; deterministic given ``seed``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] < 1:
        raise ValueError("fitting requires at least one observation")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    shift = float(np.mean(y))
    scale = float(np.std(y))
    if not math.isfinite(scale) or scale <= 1e-12:
        scale = 1.0
    ys = (y - shift) / scale

    d = X.shape[1]
    D = _sq_diffs(X)
    lo, hi = _theta_bounds(d)
    best_theta = None
    best_val = -np.inf
    for theta0 in _fit_starts(d, restarts, seed):
        try:
            theta, val = _ascend_from(D, ys, theta0, lo, hi)
        except NotPositiveDefiniteError:
            continue
        if val > best_val:
            best_theta, best_val = theta, val
    if best_theta is None:
        raise AllStartsFailedError("no hyperparameter start could be factorized")
    model = GpModel(X, ys, KernelParams.from_vector(best_theta), y_shift=shift, y_scale=scale)
    return model.fit_cache()
