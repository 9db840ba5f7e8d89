"""Closed-form multi-label solvers over augmented training data.

The objective couples four terms: squared error on the real examples,
squared error on the virtual examples (weight ``alpha``), a Frobenius
penalty on the weights (``beta``), and an output-matching penalty that ties
each instance's prediction to its cluster center's prediction (``gamma``).
Both the linear primal form and the kernelized dual form minimize it in
closed form by eliminating the bias and solving one symmetric system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import dpocon

from ._accel import pairwise_sq_dists
from .augment import Augmentation, expand_centers, kmeans, make_virtual_examples
from .datasets import Dataset, NormStats, normalize, _freeze
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    NumericalError,
    ValidationError,
)

CONDITION_LIMIT = 1e12
SIGMA_SUBSAMPLE_LIMIT = 3000
# Fixed seed so sigma is a pure function of the data even when subsampling.
_SIGMA_SUBSAMPLE_SEED = 0


@dataclass(frozen=True)
class Hyperparams:
    """Trade-off weights and cluster count for one model fit."""

    alpha: float
    beta: float
    gamma: float
    num_clusters: int

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigurationError("alpha must be finite and >= 0")
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ConfigurationError("beta must be finite and > 0")
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ConfigurationError("gamma must be finite and >= 0")
        if self.num_clusters < 1:
            raise ConfigurationError("num_clusters must be at least 1")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice. For the gaussian kernel, ``sigma=None`` means "derive
    the bandwidth from the training features at fit time" via
    :func:`gaussian_sigma`."""

    kind: str
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise ConfigurationError(
                f"kernel kind {self.kind!r} must be 'gaussian' or 'linear'"
            )
        if self.kind == "linear" and self.sigma is not None:
            raise ConfigurationError("linear kernel takes no sigma")
        if (
            self.kind == "gaussian"
            and self.sigma is not None
            and not (np.isfinite(self.sigma) and self.sigma > 0)
        ):
            raise ConfigurationError("sigma must be finite and positive")

    def resolve(self, features) -> "KernelSpec":
        if self.kind == "gaussian" and self.sigma is None:
            return KernelSpec("gaussian", gaussian_sigma(features))
        return self


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: np.ndarray
    norm_stats: NormStats

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        if weights.ndim != 2 or bias.ndim != 1 or bias.shape[0] != weights.shape[1]:
            raise ValidationError("weights must be (d, q) and bias length q")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
            raise ValidationError("model parameters must be finite")
        object.__setattr__(self, "weights", _freeze(weights))
        object.__setattr__(self, "bias", _freeze(bias))


@dataclass(frozen=True)
class KernelModel:
    coefficients: np.ndarray
    bias: np.ndarray
    spec: KernelSpec
    train_features: np.ndarray
    norm_stats: NormStats

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        bias = np.asarray(self.bias, dtype=np.float64)
        train = np.asarray(self.train_features, dtype=np.float64)
        if coef.ndim != 2 or train.ndim != 2 or coef.shape[0] != train.shape[0]:
            raise ValidationError(
                "coefficients must have one row per retained training instance"
            )
        if bias.ndim != 1 or bias.shape[0] != coef.shape[1]:
            raise ValidationError("bias length must match the label count")
        if self.spec.kind == "gaussian" and self.spec.sigma is None:
            raise ValidationError("fitted kernel models need a concrete sigma")
        object.__setattr__(self, "coefficients", _freeze(coef))
        object.__setattr__(self, "bias", _freeze(bias))
        object.__setattr__(self, "train_features", _freeze(train))


# ---------------------------------------------------------------------------
# Kernels


def gaussian_sigma(features) -> float:
    """Mean Euclidean distance over all unordered instance pairs.

    Above SIGMA_SUBSAMPLE_LIMIT rows the mean is taken over a fixed-seed
    subsample of that size, keeping the cost bounded and the result
    deterministic.
    """
    X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ConfigurationError("sigma needs at least two instances")
    if n > SIGMA_SUBSAMPLE_LIMIT:
        rng = np.random.default_rng(_SIGMA_SUBSAMPLE_SEED)
        X = X[np.sort(rng.permutation(n)[:SIGMA_SUBSAMPLE_LIMIT])]
        n = SIGMA_SUBSAMPLE_LIMIT
    d2 = pairwise_sq_dists(X, X)
    # The full matrix counts each pair twice and the diagonal is zero.
    sigma = float(np.sqrt(np.maximum(d2, 0.0)).sum() / (n * (n - 1)))
    if sigma == 0.0:
        raise DegenerateDataError("all instances identical; sigma would be 0")
    return sigma


def kernel_matrix(rows_a, rows_b, spec: KernelSpec) -> np.ndarray:
    """Gram matrix: entry (i, j) is the kernel of a_i and b_j."""
    A = np.asarray(rows_a, dtype=np.float64)
    B = np.asarray(rows_b, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ValidationError(
            f"column mismatch: {A.shape} vs {B.shape}"
        )
    if spec.kind == "linear":
        return A @ B.T
    if spec.sigma is None:
        raise ConfigurationError("gaussian kernel_matrix needs a concrete sigma")
    d2 = pairwise_sq_dists(A, B)
    return np.exp(-d2 / (2.0 * spec.sigma**2))


def _kernel_system(X, aug: Augmentation, spec: KernelSpec):
    """(K, K_virtual, K_expanded): the expanded rows are gathered from the
    virtual rows through the assignment, never recomputed."""
    K = kernel_matrix(X, X, spec)
    Kv = kernel_matrix(aug.centers, X, spec)
    Ke = Kv[aug.assignment.assignment]
    return K, Kv, Ke


# ---------------------------------------------------------------------------
# Objective and gradient evaluators (used for verification and logging)


def _check_params(params, data, aug, spec):
    W, b = params
    W = np.asarray(W, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    rows = data.num_features if spec is None else data.num_examples
    if W.shape != (rows, data.num_labels):
        raise ValidationError(
            f"parameter matrix must be ({rows}, {data.num_labels}), got {W.shape}"
        )
    if b.shape != (data.num_labels,):
        raise ValidationError(f"bias must have length {data.num_labels}")
    if aug.centers.shape[1] != data.num_features:
        raise ValidationError("augmentation feature width does not match data")
    if aug.assignment.assignment.shape[0] != data.num_examples:
        raise ValidationError("augmentation covers a different number of instances")
    return W, b


def objective(params, data: Dataset, aug: Augmentation, hp: Hyperparams, spec=None):
    """Objective value at ``params`` ((W, b) linear, (A, b) kernelized)."""
    W, b = _check_params(params, data, aug, spec)
    Y = data.labels.astype(np.float64)
    T = aug.soft_labels
    if spec is None:
        X = data.features
        Z = aug.centers
        D = X - expand_centers(aug)
        fit = X @ W + b - Y
        vfit = Z @ W + b - T
        reg = (W**2).sum()
        smooth = ((D @ W) ** 2).sum()
    else:
        spec = spec.resolve(data.features)
        K, Kv, Ke = _kernel_system(data.features, aug, spec)
        fit = K @ W + b - Y
        vfit = Kv @ W + b - T
        reg = float((W * (K @ W)).sum())
        smooth = (((K - Ke) @ W) ** 2).sum()
    return float(
        0.5 * (fit**2).sum()
        + 0.5 * hp.alpha * (vfit**2).sum()
        + 0.5 * hp.beta * reg
        + 0.5 * hp.gamma * smooth
    )


def gradient(params, data: Dataset, aug: Augmentation, hp: Hyperparams, spec=None):
    """Analytic gradient of :func:`objective` with respect to both params."""
    W, b = _check_params(params, data, aug, spec)
    Y = data.labels.astype(np.float64)
    T = aug.soft_labels
    if spec is None:
        X = data.features
        Z = aug.centers
        D = X - expand_centers(aug)
        fit = X @ W + b - Y
        vfit = Z @ W + b - T
        grad_w = X.T @ fit + hp.alpha * (Z.T @ vfit) + hp.beta * W
        grad_w += hp.gamma * (D.T @ (D @ W))
    else:
        spec = spec.resolve(data.features)
        K, Kv, Ke = _kernel_system(data.features, aug, spec)
        D = K - Ke
        fit = K @ W + b - Y
        vfit = Kv @ W + b - T
        grad_w = K.T @ fit + hp.alpha * (Kv.T @ vfit) + hp.beta * (K @ W)
        grad_w += hp.gamma * (D.T @ (D @ W))
    grad_b = fit.sum(axis=0) + hp.alpha * vfit.sum(axis=0)
    return grad_w, grad_b


# ---------------------------------------------------------------------------
# Closed-form solvers


def _solve_spd(M, R, allow_singular=False):
    """Solve M S = R for symmetric positive (semi-)definite M.

    Primary path: Cholesky with a LAPACK reciprocal-condition estimate.
    When the factorization fails or the condition estimate exceeds
    CONDITION_LIMIT and ``allow_singular`` is set, a minimum-norm
    least-squares solution is accepted provided the system is consistent
    (rank-deficient kernel systems, e.g. the linear kernel with more
    instances than features, are consistent by construction).
    """
    M = 0.5 * (M + M.T)
    anorm = np.linalg.norm(M, 1)
    try:
        factor = cho_factor(M, lower=True)
        rcond, info = dpocon(factor[0], anorm, uplo="L")
        if info == 0 and rcond > 0 and 1.0 / rcond <= CONDITION_LIMIT:
            return cho_solve(factor, R)
    except np.linalg.LinAlgError:
        pass
    if allow_singular:
        solution, *_ = np.linalg.lstsq(M, R, rcond=None)
        residual = np.linalg.norm(M @ solution - R)
        if residual <= 1e-6 * max(np.linalg.norm(R), 1e-30):
            return solution
    raise NumericalError(
        f"system matrix is singular or ill-conditioned (condition estimate "
        f"above {CONDITION_LIMIT:g}); increase beta"
    )


def solve_linear(
    data: Dataset, aug: Augmentation, hp: Hyperparams, norm_stats=None
) -> LinearModel:
    """Closed-form weights and bias for the linear objective.

    The bias is eliminated at its optimum, leaving one d x d symmetric
    positive-definite system per fit (solved by factorization, never by
    explicit inversion); the gradient at the result vanishes to rounding.
    """
    X = data.features
    Y = data.labels.astype(np.float64)
    Z = aug.centers
    T = aug.soft_labels
    D = X - expand_centers(aug)
    n, d = X.shape
    c = aug.num_clusters
    alpha, beta, gamma = hp.alpha, hp.beta, hp.gamma
    mass = n + alpha * c

    sum_x = X.sum(axis=0)
    sum_z = Z.sum(axis=0)
    s = sum_x + alpha * sum_z
    sum_y = Y.sum(axis=0)
    sum_t = T.sum(axis=0)
    u = sum_y + alpha * sum_t

    M = X.T @ X + alpha * (Z.T @ Z) + beta * np.eye(d) + gamma * (D.T @ D)
    M -= np.outer(s, s) / mass
    R = X.T @ Y + alpha * (Z.T @ T) - np.outer(s, u) / mass

    W = _solve_spd(M, R)
    b = (sum_y - W.T @ sum_x + alpha * (sum_t - W.T @ sum_z)) / mass
    if norm_stats is None:
        norm_stats = NormStats.identity(d)
    return LinearModel(W, b, norm_stats)


def solve_kernel(
    data: Dataset,
    aug: Augmentation,
    hp: Hyperparams,
    spec: KernelSpec,
    norm_stats=None,
) -> KernelModel:
    """Closed-form dual coefficients and bias for the kernelized objective.

    One n x n symmetric solve; the expanded-center kernel block is gathered
    from the virtual-example rows through the assignment.
    """
    X = data.features
    Y = data.labels.astype(np.float64)
    T = aug.soft_labels
    n = X.shape[0]
    c = aug.num_clusters
    alpha, beta, gamma = hp.alpha, hp.beta, hp.gamma
    mass = n + alpha * c

    spec = spec.resolve(X)
    K, Kv, Ke = _kernel_system(X, aug, spec)
    D = K - Ke

    k_sum = K.sum(axis=0)
    kv_sum = Kv.sum(axis=0)
    s = k_sum + alpha * kv_sum
    sum_y = Y.sum(axis=0)
    sum_t = T.sum(axis=0)
    u = sum_y + alpha * sum_t

    M = K.T @ K + alpha * (Kv.T @ Kv) + beta * K + gamma * (D.T @ D)
    M -= np.outer(s, s) / mass
    R = K.T @ Y + alpha * (Kv.T @ T) - np.outer(s, u) / mass

    A = _solve_spd(M, R, allow_singular=True)
    b = (sum_y - A.T @ k_sum + alpha * (sum_t - A.T @ kv_sum)) / mass
    if norm_stats is None:
        norm_stats = NormStats.identity(X.shape[1])
    return KernelModel(A, b, spec, X, norm_stats)


# ---------------------------------------------------------------------------
# Prediction


def predict_scores(model, test_features) -> np.ndarray:
    """Pre-sign score matrix (m, q) for the given raw test features."""
    X = np.asarray(test_features, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("test features must be a 2-D matrix")
    if isinstance(model, LinearModel):
        d = model.weights.shape[0]
        if X.shape[1] != d:
            raise ValidationError(f"expected {d} features, got {X.shape[1]}")
        Xn = model.norm_stats.transform(X)
        return Xn @ model.weights + model.bias
    if isinstance(model, KernelModel):
        d = model.train_features.shape[1]
        if X.shape[1] != d:
            raise ValidationError(f"expected {d} features, got {X.shape[1]}")
        Xn = model.norm_stats.transform(X)
        return kernel_matrix(Xn, model.train_features, model.spec) @ model.coefficients + model.bias
    raise ValidationError(f"unknown model type {type(model).__name__}")


def predict_labels(scores) -> np.ndarray:
    """Elementwise sign with sign(0) = +1."""
    S = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(S)):
        raise ValidationError("scores contain non-finite entries")
    return np.where(S >= 0, 1, -1).astype(np.int64)


# ---------------------------------------------------------------------------
# Full training pipeline: cluster -> virtual examples -> solve


def train_model(
    data: Dataset,
    hp: Hyperparams,
    spec: KernelSpec | None = None,
    seed: int = 0,
    normalize_method: str = "zscore",
    max_iter: int = 300,
    tol: float = 1e-6,
    restarts: int = 1,
):
    """Normalize, cluster, build virtual examples and solve.

    ``spec=None`` fits the primal linear model; otherwise the kernelized
    model (gaussian sigma derived from the normalized training features
    when left unset). Returns (model, augmentation).
    """
    normalized, stats = normalize(data, normalize_method)
    assignment = kmeans(
        normalized.features,
        hp.num_clusters,
        seed,
        max_iter=max_iter,
        tol=tol,
        restarts=restarts,
    )
    aug = make_virtual_examples(normalized, assignment)
    if spec is None:
        model = solve_linear(normalized, aug, hp, norm_stats=stats)
    else:
        model = solve_kernel(normalized, aug, hp, spec, norm_stats=stats)
    return model, aug
