"""Compiled loops used on the hot path of fitting and prediction.

Distances and the Matern polynomial are compiled; the exponential goes
through NumPy, whose vectorized ``exp`` is several times faster than the
scalar libm call a compiled loop would make.
"""

import math

import numba
import numpy as np

_SQRT5 = math.sqrt(5.0)
_LOG_2PI = math.log(2.0 * math.pi)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
# reassociation and FMA contraction only: NaN/inf checks must survive
_FAST = {"reassoc", "contract", "arcp"}


@numba.njit(cache=True, fastmath=_FAST)
def _scaled_distances(A, B, scale):
    """``r[i, k] = || (A[i] - B[k]) * scale ||``."""
    n, d = A.shape
    q = B.shape[0]
    Bt = np.empty((d, q))
    for j in range(d):
        for k in range(q):
            Bt[j, k] = B[k, j] * scale[j]
    out = np.zeros((n, q))
    for i in range(n):
        row = out[i]
        for j in range(d):
            a = A[i, j] * scale[j]
            col = Bt[j]
            for k in range(q):
                t = a - col[k]
                row[k] += t * t
        for k in range(q):
            row[k] = math.sqrt(row[k])
    return out


@numba.njit(cache=True, fastmath=_FAST)
def _matern_polynomial(r, e, sf2):
    """Overwrite ``e = exp(-r)`` with ``sf2 * (1 + r + r^2/3) * exp(-r)``."""
    n, q = r.shape
    for i in range(n):
        for k in range(q):
            x = r[i, k]
            e[i, k] = sf2 * (1.0 + x + x * x * (1.0 / 3.0)) * e[i, k]
    return e


@numba.njit(cache=True)
def _matern_cross_scalar(A, B, inv_ls, sf2):
    n, d = A.shape
    q = B.shape[0]
    out = np.empty((n, q))
    for i in range(n):
        for k in range(q):
            r2 = 0.0
            for j in range(d):
                t = (A[i, j] - B[k, j]) * inv_ls[j]
                r2 += t * t
            sr = _SQRT5 * math.sqrt(r2)
            out[i, k] = sf2 * (1.0 + sr + sr * sr / 3.0) * math.exp(-sr)
    return out


# below this many entries call overhead outweighs the faster vectorized exp
_VECTORIZE_MIN = 4096


def matern_cross(A, B, inv_ls, sf2):
    """Matern-5/2 cross-covariance of the rows of A and B."""
    inv_ls = np.asarray(inv_ls, dtype=float)
    if A.shape[0] * B.shape[0] < _VECTORIZE_MIN:
        return _matern_cross_scalar(A, B, inv_ls, float(sf2))
    r = _scaled_distances(A, B, _SQRT5 * inv_ls)
    e = np.negative(r)
    np.exp(e, out=e)
    return _matern_polynomial(r, e, float(sf2))


def matern_gram(X, inv_ls, sf2, noise):
    """Gram matrix with ``noise`` added on the diagonal."""
    K = matern_cross(X, X, inv_ls, sf2)
    K.flat[:: K.shape[0] + 1] = sf2 + noise
    return K


@numba.njit(cache=True, fastmath=_FAST)
def _column_sq_norms(V):
    n, q = V.shape
    out = np.zeros(q)
    for j in range(n):
        row = V[j]
        for k in range(q):
            out[k] += row[k] * row[k]
    return out


@numba.njit(cache=True, fastmath=_FAST)
def _predict_stack_compiled(X, Xq, inv_ls, sf2, inv_factors, alphas):
    m = sf2.size
    n, d = X.shape
    q = Xq.shape[0]
    means = np.empty((m, q))
    variances = np.empty((m, q))
    kq = np.empty(n)
    for i in range(m):
        Li = inv_factors[i]
        a = alphas[i]
        for k in range(q):
            for l in range(n):
                r2 = 0.0
                for j in range(d):
                    t = (X[l, j] - Xq[k, j]) * inv_ls[i, j]
                    r2 += t * t
                sr = _SQRT5 * math.sqrt(r2)
                kq[l] = sf2[i] * (1.0 + sr + sr * sr / 3.0) * math.exp(-sr)
            mu = 0.0
            for l in range(n):
                mu += a[l] * kq[l]
            ss = 0.0
            for j in range(n):
                t = 0.0
                # the inverse Cholesky factor is lower triangular
                for l in range(j + 1):
                    t += Li[j, l] * kq[l]
                ss += t * t
            means[i, k] = mu
            variances[i, k] = max(sf2[i] - ss, 0.0)
    return means, variances


def predict_stack(X, Xq, inv_ls, sf2, inv_factors, alphas):
    """Means and variances ``(m, q)`` for m stacked hyperparameter samples."""
    if X.shape[0] * Xq.shape[0] < _VECTORIZE_MIN:
        return _predict_stack_compiled(X, Xq, inv_ls, sf2, inv_factors, alphas)
    m = sf2.size
    means = np.empty((m, Xq.shape[0]))
    variances = np.empty_like(means)
    for i in range(m):
        Ks = matern_cross(X, Xq, inv_ls[i], sf2[i])
        means[i] = alphas[i] @ Ks
        variances[i] = sf2[i] - _column_sq_norms(inv_factors[i] @ Ks)
    np.maximum(variances, 0.0, out=variances)
    return means, variances


@numba.njit(cache=True)
def ei_mixture(means, variances, y_best):
    """Column-wise average of the per-component expected improvement."""
    m, q = means.shape
    out = np.zeros(q)
    for k in range(q):
        acc = 0.0
        for i in range(m):
            gap = means[i, k] - y_best
            s = math.sqrt(variances[i, k])
            if s > 0.0:
                z = gap / s
                cdf = 0.5 * math.erfc(-z * _INV_SQRT2)
                pdf = _INV_SQRT2PI * math.exp(-0.5 * z * z)
                acc += gap * cdf + s * pdf
            elif gap > 0.0:
                acc += gap
        out[k] = max(acc / m, 0.0)
    return out


@numba.njit(cache=True)
def direct_select(keys, sizes, values, eps):
    """Potentially optimal DIRECT rectangles (maximization), ascending indices.

    The candidate of each size class is its first best rectangle. It is kept
    if some rate constant ``K >= 0`` makes ``value + K * size`` the largest
    among the candidates and at least ``eps`` (relative) above the best value.
    """
    n = values.size
    best = np.full(keys.max() + 1, -1)
    f_max = -np.inf
    for i in range(n):
        k = keys[i]
        if best[k] < 0 or values[i] > values[best[k]]:
            best[k] = i
        f_max = max(f_max, values[i])
    reps = best[best >= 0]
    threshold = f_max + eps * abs(f_max)
    keep = np.zeros(reps.size, dtype=np.bool_)
    for a in range(reps.size):
        da, fa = sizes[reps[a]], values[reps[a]]
        k_low = 0.0
        k_up = np.inf
        for b in range(reps.size):
            db, fb = sizes[reps[b]], values[reps[b]]
            if db < da:
                k_low = max(k_low, (fb - fa) / (da - db))
            elif db > da:
                k_up = min(k_up, (fa - fb) / (db - da))
        if k_low > k_up:
            continue
        if np.isfinite(k_up) and fa + k_up * da < threshold:
            continue
        keep[a] = True
    return np.sort(reps[keep])


@numba.njit(cache=True, fastmath=_FAST)
def _cholesky_into(K, L):
    """Lower Cholesky factor of K written to L; False if K is not positive definite."""
    n = K.shape[0]
    for j in range(n):
        s = K[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return False
        djj = math.sqrt(s)
        L[j, j] = djj
        inv = 1.0 / djj
        for i in range(j + 1, n):
            t = K[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t * inv
    return True


@numba.njit(cache=True)
def log_posterior(X, y, v, noise, prior, jitter_start, jitter_max, K, L):
    """Log evidence plus log hyperprior at the packed log-hyperparameters ``v``.

    ``prior`` holds (lengthscale mean, lengthscale std, signal mean, signal
    std) of the Gaussian priors in log space. Returns ``-inf`` outside
    ``|v| < 50`` or when the Gram matrix stays indefinite after the jitter
    schedule. ``K`` and ``L`` are ``(n, n)`` scratch buffers.
    """
    D = v.size
    for j in range(D):
        if not abs(v[j]) < 50.0:
            return -np.inf
    d = D - 1
    inv_ls = np.empty(d)
    for j in range(d):
        inv_ls[j] = math.exp(-v[j])
    sf2 = math.exp(v[d])
    n = X.shape[0]
    for i in range(n):
        K[i, i] = sf2 + noise
        for k in range(i + 1, n):
            r2 = 0.0
            for j in range(d):
                t = (X[i, j] - X[k, j]) * inv_ls[j]
                r2 += t * t
            sr = _SQRT5 * math.sqrt(r2)
            val = sf2 * (1.0 + sr + sr * sr / 3.0) * math.exp(-sr)
            K[i, k] = val
            K[k, i] = val
    jitter = 0.0
    while not _cholesky_into(K, L):
        jitter = jitter_start if jitter == 0.0 else 10.0 * jitter
        if jitter > jitter_max * (1.0 + 1e-9):
            return -np.inf
        for i in range(n):
            K[i, i] = sf2 + noise + jitter
    quad = 0.0
    logdet = 0.0
    a = np.empty(n)
    for i in range(n):
        t = y[i]
        for k in range(i):
            t -= L[i, k] * a[k]
        a[i] = t / L[i, i]
        quad += a[i] * a[i]
        logdet += math.log(L[i, i])
    lp = -0.5 * quad - logdet - 0.5 * n * _LOG_2PI
    for j in range(D):
        mean, std = (prior[0], prior[1]) if j < d else (prior[2], prior[3])
        z = (v[j] - mean) / std
        lp -= 0.5 * z * z + 0.5 * _LOG_2PI + math.log(std)
    return lp


@numba.njit(cache=True)
def slice_chain(X, y, noise, prior, jitter_start, jitter_max, x0, rng, width, burn_in, m, thin,
                max_step_out):
    """Compiled univariate slice sampler over the log posterior.

    Runs ``burn_in`` sweeps, then keeps the state after every ``thin``
    further sweeps, ``m`` times. Returns ``(samples, final log density)``;
    the log density at ``x0`` must be finite.
    """
    n = X.shape[0]
    K = np.empty((n, n))
    L = np.zeros((n, n))
    x = x0.copy()
    D = x.size
    lp = log_posterior(X, y, x, noise, prior, jitter_start, jitter_max, K, L)
    samples = np.empty((m, D))
    left = np.empty(D)
    right = np.empty(D)
    prop = np.empty(D)
    for sweep in range(burn_in + m * thin):
        for j in range(D):
            level = lp - rng.standard_exponential()
            left[:] = x
            right[:] = x
            left[j] = x[j] - rng.random() * width
            right[j] = left[j] + width
            for _ in range(max_step_out):
                if log_posterior(X, y, left, noise, prior, jitter_start, jitter_max, K, L) <= level:
                    break
                left[j] -= width
            for _ in range(max_step_out):
                if log_posterior(X, y, right, noise, prior, jitter_start, jitter_max, K, L) <= level:
                    break
                right[j] += width
            prop[:] = x
            while True:
                prop[j] = left[j] + rng.random() * (right[j] - left[j])
                lp_prop = log_posterior(X, y, prop, noise, prior, jitter_start, jitter_max, K, L)
                if lp_prop > level:
                    break
                if prop[j] < x[j]:
                    left[j] = prop[j]
                elif prop[j] > x[j]:
                    right[j] = prop[j]
                else:
                    lp_prop = lp
                    break
            x[j] = prop[j]
            lp = lp_prop
        done = sweep + 1 - burn_in
        if done > 0 and done % thin == 0:
            samples[done // thin - 1] = x
    return samples, lp
