"""Gaussian-process surrogate on the unit hypercube.

Zero-mean GP with a Matern-5/2 ARD kernel. Kernel hyperparameters are not
optimized but sampled (univariate slice sampling in log space), and
predictions are an equally weighted mixture over the retained samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf, dtrtri

from ._kernels import log_posterior, matern_cross, matern_gram, predict_stack, slice_chain
from .errors import NumericalError, StateError

SQRT5 = math.sqrt(5.0)
LOG_2PI = math.log(2.0 * math.pi)

# hyperprior: log lengthscale ~ N(log 0.2, 1), log signal variance ~ N(0, 1)
PRIOR_LOG_LENGTHSCALE_MEAN = math.log(0.2)
PRIOR_LOG_LENGTHSCALE_STD = 1.0
PRIOR_LOG_SIGNAL_MEAN = 0.0
PRIOR_LOG_SIGNAL_STD = 1.0

JITTER_START = 1e-10
JITTER_MAX = 1e-4

SLICE_WIDTH = 1.0
BURN_IN = 50
THIN = 10
DEFAULT_SAMPLES = 10
MAX_STEP_OUT = 100


@dataclass(frozen=True)
class KernelHyperparams:
    """Log lengthscales (one per input dimension) and log signal variance."""

    log_lengthscales: np.ndarray
    log_signal_variance: float

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.log_lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size < 1:
            raise ValueError("log_lengthscales must be a non-empty vector")
        if not (np.all(np.isfinite(ls)) and math.isfinite(self.log_signal_variance)):
            raise ValueError("hyperparameters must be finite")
        ls.setflags(write=False)
        object.__setattr__(self, "log_lengthscales", ls)
        object.__setattr__(self, "log_signal_variance", float(self.log_signal_variance))

    @property
    def dim(self) -> int:
        return self.log_lengthscales.size

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(self.log_lengthscales)

    @property
    def signal_variance(self) -> float:
        return math.exp(self.log_signal_variance)

    def to_vector(self) -> np.ndarray:
        return np.append(self.log_lengthscales, self.log_signal_variance)

    @classmethod
    def from_vector(cls, v) -> "KernelHyperparams":
        v = np.asarray(v, dtype=float)
        return cls(v[:-1].copy(), float(v[-1]))

    @classmethod
    def prior_mode(cls, d: int) -> "KernelHyperparams":
        return cls(np.full(d, PRIOR_LOG_LENGTHSCALE_MEAN), PRIOR_LOG_SIGNAL_MEAN)


@dataclass(frozen=True)
class ObservationSet:
    """Queries ``X`` (n x d, inside [0,1]^d) and their outcomes ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if y.size != 1 or X.size == 1 else X.reshape(1, -1)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D array")
        if X.shape[0] != y.size:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if X.size and (np.any(X < 0.0) or np.any(X > 1.0)):
            raise ValueError("every query must lie in the unit hypercube")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def append(self, x, value) -> "ObservationSet":
        x = np.asarray(x, dtype=float).reshape(1, -1)
        X = np.vstack([self.X.reshape(-1, x.shape[1]), x])
        return ObservationSet(X, np.append(self.y, float(value)))


@dataclass(frozen=True)
class GPModel:
    """A fitted surrogate: one Cholesky factor and weight vector per sample."""

    dataset: ObservationSet
    theta_samples: tuple
    noise_variance: float
    factors: tuple = field(repr=False)
    alphas: tuple = field(repr=False)
    inv_factors: tuple = field(repr=False, default=())
    jitters: tuple = ()

    def __post_init__(self):
        # stacked copies feed the compiled prediction kernel in one call
        stacked = (
            np.array([np.exp(-t.log_lengthscales) for t in self.theta_samples]),
            np.array([t.signal_variance for t in self.theta_samples]),
            np.array(self.inv_factors) if self.inv_factors else None,
            np.array(self.alphas) if self.alphas else None,
        )
        object.__setattr__(self, "_stacked", stacked)

    @property
    def m(self) -> int:
        return len(self.theta_samples)

    @property
    def dim(self) -> int:
        return self.dataset.dim


def matern52(x, x2, theta: KernelHyperparams) -> float:
    """Matern-5/2 covariance between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape or x.size != theta.dim:
        raise ValueError(
            f"dimension mismatch: {x.size}, {x2.size} vs hyperparameters {theta.dim}"
        )
    r = math.sqrt(float(np.sum(((x - x2) / theta.lengthscales) ** 2)))
    sr = SQRT5 * r
    return theta.signal_variance * (1.0 + sr + sr * sr / 3.0) * math.exp(-sr)


def kernel_matrix(A, B, theta: KernelHyperparams) -> np.ndarray:
    """Matern-5/2 cross-covariance matrix between the rows of A and B."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != theta.dim or B.shape[1] != theta.dim:
        raise ValueError("dimension mismatch between points and hyperparameters")
    return matern_cross(A, B, np.exp(-theta.log_lengthscales), theta.signal_variance)


def gram_matrix(X, theta: KernelHyperparams, noise_variance: float = 0.0) -> np.ndarray:
    """``k(X, X) + noise_variance * I``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != theta.dim:
        raise ValueError("dimension mismatch between points and hyperparameters")
    return matern_gram(
        X, np.exp(-theta.log_lengthscales), theta.signal_variance, float(noise_variance)
    )


def cholesky_with_jitter(K, theta_index=None):
    """Lower Cholesky factor of K, escalating diagonal jitter on failure.

    Returns ``(L, jitter)``. Jitter starts at 1e-10 and grows tenfold up to
    1e-4; past that a :class:`NumericalError` is raised.
    """
    L, info = dpotrf(K, lower=1, clean=1, overwrite_a=0)
    if info == 0:
        return L, 0.0
    jitter = JITTER_START
    eye = np.eye(K.shape[0])
    while jitter <= JITTER_MAX * (1 + 1e-9):
        L, info = dpotrf(K + jitter * eye, lower=1, clean=1, overwrite_a=0)
        if info == 0:
            return L, jitter
        jitter *= 10.0
    raise NumericalError(
        "Gram matrix not positive definite after maximum jitter", theta_index=theta_index
    )


def fit(dataset: ObservationSet, theta_samples, noise_variance: float) -> GPModel:
    """Factorize ``K_i = k_i(X, X) + noise_variance * I`` for every sample."""
    if dataset.n < 1:
        raise ValueError("fit needs at least one observation")
    if noise_variance < 0:
        raise ValueError("noise_variance must be non-negative")
    theta_samples = tuple(theta_samples)
    if not theta_samples:
        raise ValueError("need at least one hyperparameter sample")
    X, y = dataset.X, dataset.y
    factors, inv_factors, alphas, jitters = [], [], [], []
    for i, theta in enumerate(theta_samples):
        if theta.dim != dataset.dim:
            raise ValueError("hyperparameter dimension does not match the data")
        K = gram_matrix(X, theta, noise_variance)
        L, jitter = cholesky_with_jitter(K, theta_index=i)
        alpha = solve_triangular(L, y, lower=True)
        alpha = solve_triangular(L.T, alpha, lower=False)
        Linv, info = dtrtri(L, lower=1)
        if info != 0:
            raise NumericalError("singular Cholesky factor", theta_index=i)
        factors.append(L)
        inv_factors.append(Linv)
        alphas.append(alpha)
        jitters.append(jitter)
    return GPModel(
        dataset=dataset,
        theta_samples=theta_samples,
        noise_variance=float(noise_variance),
        factors=tuple(factors),
        alphas=tuple(alphas),
        inv_factors=tuple(inv_factors),
        jitters=tuple(jitters),
    )


def predict_batch(model: GPModel, Xq):
    """Per-sample predictive means and variances at the rows of ``Xq``.

    Returns two ``(m, q)`` arrays. Variances are clamped at zero.
    """
    if not isinstance(model, GPModel) or not model.factors or model.dataset.n < 1:
        raise StateError("model is not fitted")
    Xq = np.ascontiguousarray(np.atleast_2d(np.asarray(Xq, dtype=float)))
    if Xq.shape[1] != model.dim:
        raise ValueError(f"query dimension {Xq.shape[1]} does not match the model ({model.dim})")
    inv_ls, sf2, inv_factors, alphas = model._stacked
    return predict_stack(np.ascontiguousarray(model.dataset.X), Xq, inv_ls, sf2, inv_factors, alphas)


def predict(model: GPModel, x):
    """List of ``(mean, variance)`` pairs, one per hyperparameter sample."""
    means, variances = predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return [(float(mu), float(var)) for mu, var in zip(means[:, 0], variances[:, 0])]


_LOG_NORM_LS = 0.5 * LOG_2PI + math.log(PRIOR_LOG_LENGTHSCALE_STD)
_LOG_NORM_SF = 0.5 * LOG_2PI + math.log(PRIOR_LOG_SIGNAL_STD)


def log_hyperprior(log_ls, log_sf2) -> float:
    """Log density of the independent Gaussian priors on the log hyperparameters."""
    total = 0.0
    for v in np.atleast_1d(log_ls).tolist():
        z = (v - PRIOR_LOG_LENGTHSCALE_MEAN) / PRIOR_LOG_LENGTHSCALE_STD
        total -= 0.5 * z * z + _LOG_NORM_LS
    z = (float(log_sf2) - PRIOR_LOG_SIGNAL_MEAN) / PRIOR_LOG_SIGNAL_STD
    return total - 0.5 * z * z - _LOG_NORM_SF


def _data_log_likelihood(K, y, theta_index=None):
    L, _ = cholesky_with_jitter(K, theta_index)
    a = solve_triangular(L, y, lower=True, check_finite=False)
    return float(
        -0.5 * a @ a - np.sum(np.log(np.diag(L))) - 0.5 * y.size * LOG_2PI
    )


def log_marginal_likelihood(
    dataset: ObservationSet, theta: KernelHyperparams, noise_variance: float
) -> float:
    """Log evidence of the zero-mean GP plus the log hyperprior density."""
    if dataset.n < 1:
        raise ValueError("log_marginal_likelihood needs at least one observation")
    K = gram_matrix(dataset.X, theta, noise_variance)
    return _data_log_likelihood(K, dataset.y) + log_hyperprior(
        theta.log_lengthscales, theta.log_signal_variance
    )


_PRIOR = np.array([
    PRIOR_LOG_LENGTHSCALE_MEAN, PRIOR_LOG_LENGTHSCALE_STD,
    PRIOR_LOG_SIGNAL_MEAN, PRIOR_LOG_SIGNAL_STD,
])


class _PosteriorTarget:
    """Unnormalized log posterior over the packed log-hyperparameter vector.

    Indefinite Gram matrices (after the jitter schedule) and states with any
    ``|v| >= 50`` get log density ``-inf``.
    """

    def __init__(self, dataset: ObservationSet, noise_variance: float):
        self.X = np.ascontiguousarray(dataset.X, dtype=float)
        self.y = np.array(dataset.y, dtype=float)
        self.noise_variance = float(noise_variance)
        n = self.y.size
        self._K = np.empty((n, n))
        self._L = np.zeros((n, n))

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(log_posterior(
            self.X, self.y, v, self.noise_variance, _PRIOR, JITTER_START, JITTER_MAX,
            self._K, self._L,
        ))


def slice_sweep(logp, x, lp, rng, width=SLICE_WIDTH):
    """One pass of univariate stepping-out/shrinkage slice updates.

    Coordinates are visited in index order. Returns the new state and its
    log density.
    """
    x = np.array(x, dtype=float)
    for j in range(x.size):
        level = lp - rng.standard_exponential()
        left = x.copy()
        right = x.copy()
        left[j] = x[j] - rng.random() * width
        right[j] = left[j] + width
        for _ in range(MAX_STEP_OUT):
            if logp(left) <= level:
                break
            left[j] -= width
        for _ in range(MAX_STEP_OUT):
            if logp(right) <= level:
                break
            right[j] += width
        prop = x.copy()
        while True:
            prop[j] = left[j] + rng.random() * (right[j] - left[j])
            lp_prop = logp(prop)
            if lp_prop > level:
                break
            if prop[j] < x[j]:
                left[j] = prop[j]
            elif prop[j] > x[j]:
                right[j] = prop[j]
            else:
                # interval collapsed onto the current point
                lp_prop = lp
                break
        x[j] = prop[j]
        lp = lp_prop
    return x, lp


def sample_hyperparams(
    dataset: ObservationSet,
    m: int = DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
    noise_variance: float = 1e-8,
    initial: KernelHyperparams | None = None,
    burn_in: int | None = None,
    thin: int = THIN,
):
    """Draw ``m`` kernel hyperparameter samples by slice sampling.

    Without ``initial`` the chain starts at the prior mode and runs
    ``BURN_IN`` sweeps first; a warm-started chain skips burn-in unless
    asked. ``thin`` sweeps separate consecutive retained samples, so the
    last returned sample is the chain's final state.
    """
    if dataset.n < 1:
        raise ValueError("sample_hyperparams needs at least one observation")
    if m < 1:
        raise ValueError("m must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    if initial is None:
        state = KernelHyperparams.prior_mode(dataset.dim).to_vector()
        burn = BURN_IN if burn_in is None else burn_in
    else:
        if initial.dim != dataset.dim:
            raise ValueError("initial state dimension does not match the data")
        state = initial.to_vector()
        burn = 0 if burn_in is None else burn_in
    if thin < 1:
        raise ValueError("thin must be >= 1")
    logp = _PosteriorTarget(dataset, noise_variance)
    if not math.isfinite(logp(state)):
        state = KernelHyperparams.prior_mode(dataset.dim).to_vector()
        if not math.isfinite(logp(state)):
            raise NumericalError("log posterior is not finite at the prior mode")
    chain, _ = slice_chain(
        logp.X, logp.y, logp.noise_variance, _PRIOR, JITTER_START, JITTER_MAX,
        state, rng, SLICE_WIDTH, burn, m, thin, MAX_STEP_OUT,
    )
    return [KernelHyperparams.from_vector(row) for row in chain]
