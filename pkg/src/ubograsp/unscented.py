"""Unscented transform of input noise: sigma points, UEI and the unscented incumbent."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .acquisition import Incumbent, IncumbentKind, ei_from_moments
from .errors import StateError
from .gp import GPModel, ObservationSet, predict_batch


@dataclass(frozen=True)
class InputNoise:
    """Isotropic Gaussian query noise; ``sigma_x`` is a standard deviation."""

    sigma_x: float = 0.03
    k_scale: float = 1.0

    def __post_init__(self):
        if not self.sigma_x > 0:
            raise ValueError("sigma_x must be positive")

    def offset(self, d: int) -> float:
        if not d + self.k_scale > 0:
            raise ValueError("d + k_scale must be positive")
        return math.sqrt(d + self.k_scale) * self.sigma_x


@dataclass(frozen=True)
class SigmaPointSet:
    points: np.ndarray  # (2d+1, d), clamped to the unit hypercube
    weights: np.ndarray  # (2d+1,)


def sigma_weights(d: int, k_scale: float) -> np.ndarray:
    if not d + k_scale > 0:
        raise ValueError("d + k_scale must be positive")
    w = np.full(2 * d + 1, 1.0 / (2.0 * (d + k_scale)))
    w[0] = k_scale / (d + k_scale)
    return w


def _sigma_offsets(d, offset):
    # row 0 is the center, rows 2i-1 / 2i move coordinate i-1 by +/- offset
    deltas = np.zeros((2 * d + 1, d))
    for i in range(d):
        deltas[2 * i + 1, i] = offset
        deltas[2 * i + 2, i] = -offset
    return deltas


def sigma_points(center, noise: InputNoise) -> SigmaPointSet:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.size
    pts = np.clip(center[None, :] + _sigma_offsets(d, noise.offset(d)), 0.0, 1.0)
    return SigmaPointSet(points=pts, weights=sigma_weights(d, noise.k_scale))


def sigma_points_batch(centers, noise: InputNoise) -> np.ndarray:
    """Sigma points of many centers, shape ``(q, 2d+1, d)``."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d = centers.shape[1]
    deltas = _sigma_offsets(d, noise.offset(d))
    return np.clip(centers[:, None, :] + deltas[None, :, :], 0.0, 1.0)


def unscented_expectation(g, centers, noise: InputNoise) -> np.ndarray:
    """Sigma-point weighted average of a vectorized function ``g``.

    ``g`` maps an ``(r, d)`` array to ``r`` values. Returns one value per
    row of ``centers``.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    q, d = centers.shape
    pts = sigma_points_batch(centers, noise)
    vals = np.asarray(g(pts.reshape(-1, d)), dtype=float).reshape(q, 2 * d + 1)
    return vals @ sigma_weights(d, noise.k_scale)


def uei_batch(model: GPModel, centers, y_best: float, noise: InputNoise) -> np.ndarray:
    def ei(P):
        means, variances = predict_batch(model, P)
        return ei_from_moments(means, variances, y_best)

    return np.maximum(unscented_expectation(ei, centers, noise), 0.0)


def uei(model: GPModel, x, y_best: float, noise: InputNoise) -> float:
    """Unscented expected improvement at ``x``."""
    return float(uei_batch(model, np.reshape(x, (1, -1)), y_best, noise)[0])


def _mean_prediction(model):
    return lambda P: predict_batch(model, P)[0].mean(axis=0)


def unscented_outcome_batch(model: GPModel, centers, noise: InputNoise) -> np.ndarray:
    return unscented_expectation(_mean_prediction(model), centers, noise)


def unscented_outcome(model: GPModel, x, noise: InputNoise) -> float:
    """Sigma-point weighted GP mean, averaged over hyperparameter samples."""
    return float(unscented_outcome_batch(model, np.reshape(x, (1, -1)), noise)[0])


def unscented_incumbent(model: GPModel, dataset: ObservationSet, noise: InputNoise) -> Incumbent:
    """Dataset row with the largest unscented outcome (first one on ties)."""
    if dataset.n < 1:
        raise StateError("no observations yet")
    u = unscented_outcome_batch(model, dataset.X, noise)
    i = int(np.argmax(u))
    return Incumbent(
        x_opt=dataset.X[i].copy(), y_opt=float(u[i]), kind=IncumbentKind.UNSCENTED, index=i
    )
