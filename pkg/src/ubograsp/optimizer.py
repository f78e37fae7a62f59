"""BO / UBO outer loop with a collision-penalized objective."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import gp
from .acquisition import (
    IncumbentKind,
    best_observed_incumbent,
    expected_improvement_batch,
    latin_hypercube,
    maximize_acquisition,
)
from .errors import NumericalError
from .unscented import InputNoise, uei_batch, unscented_incumbent


class Acquisition(str, enum.Enum):
    EI = "EI"
    UEI = "UEI"


@dataclass(frozen=True)
class OptimizerConfig:
    dimension: int = 1
    init_points: int = 20
    budget: int = 160
    noise: InputNoise = field(default_factory=InputNoise)
    noise_variance: float = 1e-8
    hyper_samples: int = gp.DEFAULT_SAMPLES
    acquisition: Acquisition = Acquisition.EI
    incumbent: IncumbentKind = IncumbentKind.BEST_OBSERVED
    collision_penalty_enabled: bool = True
    penalty_lambda: float = 0.1
    seed: int = 0
    acq_budget: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "acquisition", Acquisition(self.acquisition))
        object.__setattr__(self, "incumbent", IncumbentKind(self.incumbent))
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.budget >= self.init_points >= 1:
            raise ValueError("need budget >= init_points >= 1")
        if not self.penalty_lambda > 0:
            raise ValueError("penalty lambda must be positive")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")
        if (self.acquisition is Acquisition.UEI) != (self.incumbent is IncumbentKind.UNSCENTED):
            raise ValueError("UEI and the unscented incumbent must be used together")

    @classmethod
    def for_method(cls, method: str, **kwargs) -> "OptimizerConfig":
        """``method`` is ``"BO"`` (EI, best observed) or ``"UBO"`` (UEI, unscented)."""
        method = method.upper()
        if method == "BO":
            return cls(acquisition=Acquisition.EI, incumbent=IncumbentKind.BEST_OBSERVED, **kwargs)
        if method == "UBO":
            return cls(acquisition=Acquisition.UEI, incumbent=IncumbentKind.UNSCENTED, **kwargs)
        raise ValueError(f"unknown method {method!r}")

    @property
    def method(self) -> str:
        return "UBO" if self.acquisition is Acquisition.UEI else "BO"

    def snapshot(self) -> dict:
        out = asdict(self)
        out["noise"] = {"sigma_x": self.noise.sigma_x, "k_scale": self.noise.k_scale}
        out["acquisition"] = self.acquisition.value
        out["incumbent"] = self.incumbent.value
        return out


@dataclass
class RunRecord:
    """Per-evaluation trace of one run; row ``i`` describes evaluation ``i + 1``."""

    config: OptimizerConfig
    X: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    n_j: np.ndarray
    opt_index: np.ndarray
    opt_x: np.ndarray
    opt_value: np.ndarray

    @property
    def seed(self) -> int:
        return self.config.seed

    def __len__(self) -> int:
        return len(self.f)


def collision_penalty(n_j: int, lam: float = 0.1) -> float:
    """``1 - exp(-lam * n_j)``: 0 without collisions, approaching 1 as more joints collide."""
    if n_j < 0:
        raise ValueError("number of colliding joints must be non-negative")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return -math.expm1(-lam * n_j)


def raw_outcome(objective, u):
    """Evaluate ``objective`` and normalize the result to ``(f, n_j)``.

    Objectives may return a float (never colliding), a ``(f, n_j)`` pair, or
    a grasp outcome with ``quality`` and ``colliding_joints``.
    """
    out = objective(u)
    if hasattr(out, "quality"):
        return float(out.quality), int(out.colliding_joints)
    if isinstance(out, tuple):
        return float(out[0]), int(out[1])
    return float(out), 0


def raw_quality(objective, u) -> float:
    """The quality used for evaluation: 0 for a colliding (unexecuted) grasp."""
    f, n_j = raw_outcome(objective, u)
    return 0.0 if n_j >= 1 else f


def penalized_objective(objective, u, config: OptimizerConfig):
    """``(f, f_prime, n_j)``: the raw quality and the value the surrogate learns.

    A colliding query is never executed, so its quality is 0; with the
    penalty enabled the surrogate sees ``-CP(n_j)`` instead of 0.
    """
    f, n_j = raw_outcome(objective, u)
    if n_j >= 1:
        f = 0.0
        if config.collision_penalty_enabled:
            return f, f - collision_penalty(n_j, config.penalty_lambda), n_j
        return f, f, n_j
    return f, f, 0


def run_streams(seed: int):
    """Independent generators for the initial design, hyperparameters and MC."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def _acquisition_function(model, config, y_best):
    if config.acquisition is Acquisition.UEI:
        return lambda P: uei_batch(model, P, y_best, config.noise)
    return lambda P: expected_improvement_batch(model, P, y_best)


def run_optimization(objective, config: OptimizerConfig, callback=None) -> RunRecord:
    """Run BO or UBO for ``config.budget`` evaluations.

    The first ``init_points`` queries come from a Latin hypercube; each later
    query maximizes EI or UEI under a surrogate refitted (with freshly
    sampled hyperparameters) on all penalized outcomes so far. The configured
    incumbent is recorded after every evaluation. ``callback(i, record_row)``
    is optional progress reporting.
    """
    d = config.dimension
    N, p = config.budget, config.init_points
    lhs_rng, hyper_rng, _ = run_streams(config.seed)
    design = latin_hypercube(p, d, lhs_rng)

    X = np.empty((N, d))
    f = np.empty(N)
    f_prime = np.empty(N)
    n_j = np.empty(N, dtype=int)
    opt_index = np.empty(N, dtype=int)
    opt_value = np.empty(N)

    unscented = config.incumbent is IncumbentKind.UNSCENTED
    chain_state = None
    x_next = design[0]
    for i in range(N):
        X[i] = x_next
        f[i], f_prime[i], n_j[i] = penalized_objective(objective, x_next, config)
        data = gp.ObservationSet(X[: i + 1], f_prime[: i + 1])

        need_model = unscented or i + 1 >= p and i + 1 < N
        model = None
        if need_model:
            try:
                samples = gp.sample_hyperparams(
                    data,
                    config.hyper_samples,
                    hyper_rng,
                    noise_variance=config.noise_variance,
                    initial=chain_state,
                )
                chain_state = samples[-1]
                model = gp.fit(data, samples, config.noise_variance)
            except NumericalError as exc:
                exc.iteration = i + 1
                raise

        if unscented:
            inc = unscented_incumbent(model, data, config.noise)
        else:
            inc = best_observed_incumbent(data)
        opt_index[i] = inc.index
        opt_value[i] = inc.y_opt
        if callback is not None:
            callback(i, inc)

        if i + 1 >= N:
            break
        if i + 1 < p:
            x_next = design[i + 1]
        else:
            y_best = float(np.max(data.y))
            acq = _acquisition_function(model, config, y_best)
            x_next = maximize_acquisition(acq, d, config.acq_budget, vectorized=True)

    return RunRecord(
        config=config,
        X=X,
        f=f,
        f_prime=f_prime,
        n_j=n_j,
        opt_index=opt_index,
        opt_x=X[opt_index].copy(),
        opt_value=opt_value,
    )


def _gaussian_bump(x, center, width):
    return math.exp(-float(np.sum((np.asarray(x) - center) ** 2)) / (2.0 * width**2))


class SyntheticObjective:
    """Deterministic benchmark function on [0,1]^d built from Gaussian bumps."""

    def __init__(self, kind, dim, centers, widths, heights):
        self.kind = kind
        self.dim = dim
        self.centers = [np.atleast_1d(np.asarray(c, dtype=float)) for c in centers]
        self.widths = list(widths)
        self.heights = list(heights)

    def __call__(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.dim:
            raise ValueError(f"expected a {self.dim}-dimensional point")
        return float(
            sum(h * _gaussian_bump(x, c, w) for c, w, h in zip(self.centers, self.widths, self.heights))
        )


def make_synthetic_objective(kind: str, **params) -> SyntheticObjective:
    """Benchmark functions with a narrow tall peak and a broad lower one.

    ``safe-risky-1d``: 1.0 at x=0.2 (width 0.01) plus 0.8 at x=0.7 (width 0.1).
    ``safe-risky-2d``: the same pair of peaks on the diagonal of [0,1]^2.
    ``gaussian-mix``: user supplied ``centers``, ``widths``, ``heights``.
    """
    if kind == "safe-risky-1d":
        return SyntheticObjective(
            kind, 1,
            params.get("centers", [0.2, 0.7]),
            params.get("widths", [0.01, 0.1]),
            params.get("heights", [1.0, 0.8]),
        )
    if kind == "safe-risky-2d":
        return SyntheticObjective(
            kind, 2,
            params.get("centers", [(0.2, 0.2), (0.7, 0.7)]),
            params.get("widths", [0.02, 0.1]),
            params.get("heights", [1.0, 0.8]),
        )
    if kind == "gaussian-mix":
        try:
            centers = params["centers"]
            widths = params["widths"]
            heights = params["heights"]
        except KeyError as exc:
            raise ValueError(f"gaussian-mix needs {exc.args[0]!r}") from None
        dim = np.atleast_1d(np.asarray(centers[0])).size
        if not (len(centers) == len(widths) == len(heights)) or any(w <= 0 for w in widths):
            raise ValueError("gaussian-mix needs matching centers/widths/heights, widths > 0")
        return SyntheticObjective(kind, dim, centers, widths, heights)
    raise ValueError(f"unknown synthetic objective {kind!r}")
