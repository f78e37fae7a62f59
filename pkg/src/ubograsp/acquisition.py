"""Expected improvement, incumbent selection, acquisition search and LHS."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from ._kernels import direct_select, ei_mixture
from .errors import StateError
from .gp import GPModel, ObservationSet, predict_batch

INV_SQRT2 = 1.0 / math.sqrt(2.0)
INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

DIRECT_EPS = 1e-4
REFINE_START = 0.05
REFINE_STOP = 1e-4
MAX_REFINE_SWEEPS = 100


class IncumbentKind(str, enum.Enum):
    BEST_OBSERVED = "best-observed"
    UNSCENTED = "unscented"


@dataclass(frozen=True)
class Incumbent:
    x_opt: np.ndarray
    y_opt: float
    kind: IncumbentKind
    index: int


def norm_cdf(z):
    return 0.5 * erfc(-np.asarray(z, dtype=float) * INV_SQRT2)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return INV_SQRT2PI * np.exp(-0.5 * z * z)


def ei_from_moments(means, variances, y_best):
    """Expected improvement of a Gaussian mixture, columnwise.

    ``means`` and ``variances`` are ``(m, q)``; the m components are equally
    weighted, so the result is the average of the per-component closed forms.
    Zero-variance components contribute ``max(0, mu - y_best)``.
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    variances = np.atleast_2d(np.asarray(variances, dtype=float))
    if means.shape != variances.shape:
        raise ValueError("means and variances must have the same shape")
    return ei_mixture(np.ascontiguousarray(means), np.ascontiguousarray(variances), float(y_best))


def expected_improvement_batch(model: GPModel, Xq, y_best: float) -> np.ndarray:
    means, variances = predict_batch(model, Xq)
    return ei_from_moments(means, variances, y_best)


def expected_improvement(model: GPModel, x, y_best: float) -> float:
    """Expected improvement over ``y_best`` at a single point."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return float(expected_improvement_batch(model, x, y_best)[0])


def best_observed_incumbent(dataset: ObservationSet) -> Incumbent:
    if dataset.n < 1:
        raise StateError("no observations yet")
    i = int(np.argmax(dataset.y))  # first maximum on ties
    return Incumbent(
        x_opt=dataset.X[i].copy(),
        y_opt=float(dataset.y[i]),
        kind=IncumbentKind.BEST_OBSERVED,
        index=i,
    )


def _evaluator(acq, vectorized):
    if vectorized:
        return lambda P: np.asarray(acq(P), dtype=float).reshape(-1)
    return lambda P: np.array([float(acq(p)) for p in P])


def _potentially_optimal(sizes, values, eps, keys=None):
    """Indices of DIRECT rectangles worth dividing (maximization).

    Only the first best rectangle of each size class is a candidate; it
    qualifies if some rate constant K >= 0 makes its optimistic value
    ``f + K * size`` the largest overall and at least ``eps`` above the
    current best in relative terms. ``keys`` are non-negative integer size
    class labels; by default they are derived from the sizes.
    """
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if keys is None:
        keys = np.unique(np.round(sizes, 12), return_inverse=True)[1]
    return direct_select(np.asarray(keys, dtype=np.int64), sizes, values, float(eps)).tolist()


def _size_class(levels, d):
    """Integer class and half-diagonal of a rectangle with side levels ``levels``.

    Sides are 3^-low or 3^-(low+1), so (low, number of short sides) fixes the size.
    """
    low = min(levels)
    short = sum(1 for v in levels if v > low)
    size = 0.5 * math.sqrt((d - short) * 9.0 ** (-low) + short * 9.0 ** (-low - 1))
    return low * (d + 1) + short, size


def direct_search(evaluate, d: int, budget: int, eps: float = DIRECT_EPS):
    """Dividing-rectangles search for the maximum of ``evaluate`` on [0,1]^d.

    ``evaluate`` maps a ``(q, d)`` array to ``q`` values. Returns the
    evaluated centers and their values, in evaluation order.
    """
    centers = np.empty((budget, d))
    values = np.empty(budget)
    keys = np.empty(budget, dtype=np.int64)
    sizes = np.empty(budget)
    levels = [[0] * d]
    centers[0] = 0.5
    keys[0], sizes[0] = _size_class(levels[0], d)
    values[0] = evaluate(centers[:1])[0]
    used = 1
    while used < budget:
        chosen = direct_select(keys[:used], sizes[:used], values[:used], eps)
        plan = []
        planned = 0
        for r in chosen.tolist():
            low = min(levels[r])
            dims = [j for j in range(d) if levels[r][j] == low]
            if used + planned + 2 * len(dims) > budget:
                break
            plan.append((r, dims))
            planned += 2 * len(dims)
        if not plan:
            break
        points = np.empty((planned, d))
        pos = 0
        for r, dims in plan:
            delta = 3.0 ** (-min(levels[r]) - 1)
            for j in dims:
                points[pos : pos + 2] = centers[r]
                points[pos, j] += delta
                points[pos + 1, j] -= delta
                pos += 2
        new_values = evaluate(points)
        pos = 0
        for r, dims in plan:
            k = len(dims)
            vals = new_values[pos : pos + 2 * k].reshape(k, 2)
            base = pos
            pos += 2 * k
            # best side value first: it ends up in the largest child
            order = np.argsort(-vals.max(axis=1), kind="stable").tolist()
            lvl = list(levels[r])
            for o in order:
                lvl[dims[o]] += 1
                key_size = _size_class(lvl, d)
                for s in range(2):
                    centers[used] = points[base + 2 * o + s]
                    values[used] = vals[o, s]
                    keys[used], sizes[used] = key_size
                    levels.append(list(lvl))
                    used += 1
            levels[r] = lvl
            keys[r], sizes[r] = _size_class(lvl, d)
    return centers[:used].copy(), values[:used].copy()


def coordinate_refine(evaluate, x0, f0, start=REFINE_START, stop=REFINE_STOP):
    """Best-neighbour coordinate ascent with step halving, clamped to [0,1]^d."""
    x = np.array(x0, dtype=float)
    fx = float(f0)
    d = x.size
    h = start
    while h >= stop:
        for _ in range(MAX_REFINE_SWEEPS):
            cands = []
            for j in range(d):
                for sign in (1.0, -1.0):
                    c = x.copy()
                    c[j] = min(1.0, max(0.0, c[j] + sign * h))
                    if c[j] != x[j]:
                        cands.append(c)
            if not cands:
                break
            vals = evaluate(np.array(cands))
            k = int(np.argmax(vals))
            if vals[k] > fx:
                x, fx = cands[k], float(vals[k])
            else:
                break
        h /= 2.0
    return x, fx


def maximize_acquisition(acq, d: int, budget: int | None = None, vectorized: bool = False):
    """Maximize ``acq`` over [0,1]^d: DIRECT, then local coordinate refinement.

    With ``vectorized=True`` ``acq`` receives a ``(q, d)`` array and must
    return ``q`` values; otherwise it is called once per point.
    """
    if budget is None:
        budget = 1000 * d
    if budget < 2**d + 1:
        raise ValueError(f"budget must be at least 2**d + 1 = {2**d + 1}")
    evaluate = _evaluator(acq, vectorized)
    centers, values = direct_search(evaluate, d, budget)
    i = int(np.argmax(values))
    x, _ = coordinate_refine(evaluate, centers[i], values[i])
    return x


def latin_hypercube(p: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """``p`` points in [0,1]^d with one point per bin in every dimension."""
    if p < 1:
        raise ValueError("p must be >= 1")
    out = np.empty((p, d))
    for j in range(d):
        bins = rng.permutation(p)
        col = (bins + rng.random(p)) / p
        # k + u can round up to k + 1 when u is within an ulp of 1
        out[:, j] = np.minimum(col, np.nextafter((bins + 1) / p, 0.0))
    return out
