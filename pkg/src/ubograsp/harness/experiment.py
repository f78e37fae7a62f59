"""Seeded repeated runs, Monte Carlo robustness of incumbents, aggregation."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import NumericalError
from ..grasp import GraspObjective, bundled_scene
from ..optimizer import make_synthetic_objective, raw_quality, run_optimization, run_streams
from ..unscented import InputNoise
from .config import ExperimentConfig, Scenario, format_config

log = logging.getLogger(__name__)

Z95 = 1.96
TRACE_FILE = "trace.csv"
RUNS_FILE = "runs.csv"
AGGREGATE_FILE = "aggregate.csv"
CONFIG_FILE = "config.txt"


def make_objective(scenario: Scenario):
    scenario = Scenario(scenario)
    if scenario is Scenario.SYNTHETIC_1D:
        return make_synthetic_objective("safe-risky-1d")
    if scenario is Scenario.SYNTHETIC_2D:
        return make_synthetic_objective("safe-risky-2d")
    return GraspObjective(bundled_scene(scenario.object_name, scenario.dimension))


def monte_carlo_eval(objective, x_opt, mc_samples: int, noise: InputNoise, rng):
    """Mean and sample std of the raw outcome under Gaussian input noise.

    Each draw ``x_opt + eps`` with ``eps ~ N(0, sigma_x^2 I)`` is clamped to
    the unit cube. Collisions count as quality 0; the penalized value is
    never used. The std uses ``mc_samples - 1`` and is 0 for one sample.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    x_opt = np.atleast_1d(np.asarray(x_opt, dtype=float))
    eps = rng.normal(0.0, noise.sigma_x, size=(mc_samples, x_opt.size))
    draws = np.clip(x_opt + eps, 0.0, 1.0)
    y = np.array([raw_quality(objective, u) for u in draws])
    std = float(np.std(y, ddof=1)) if mc_samples > 1 else 0.0
    return float(np.mean(y)), std


@dataclass
class RunResult:
    run_id: int
    seed: int
    record: object = None
    ymc_mean: np.ndarray = None
    ymc_std: np.ndarray = None
    error: str = ""
    failed_iteration: int | None = None

    @property
    def completed(self) -> bool:
        return self.record is not None


def _track_incumbent(objective, record, config: ExperimentConfig, rng):
    """Monte Carlo values of the incumbent at every iteration.

    New values are drawn only when the incumbent moves to a different
    location, unless ``mc_every_iteration`` asks for fresh draws each time.
    """
    N = len(record)
    means, stds = np.empty(N), np.empty(N)
    previous = None
    for i in range(N):
        x = record.opt_x[i]
        if config.mc_every_iteration or previous is None or not np.array_equal(x, previous):
            means[i], stds[i] = monte_carlo_eval(objective, x, config.mc_samples, config.noise, rng)
            previous = x
        else:
            means[i], stds[i] = means[i - 1], stds[i - 1]
    return means, stds


def execute_run(config: ExperimentConfig, run_id: int) -> RunResult:
    """One seeded run plus its Monte Carlo incumbent trace.

    Numerical failures are captured in the result rather than raised.
    """
    opt_config = config.optimizer_config(run_id)
    objective = make_objective(config.scenario)
    result = RunResult(run_id=run_id, seed=opt_config.seed)
    try:
        record = run_optimization(objective, opt_config)
    except NumericalError as exc:
        result.error = str(exc)
        result.failed_iteration = exc.iteration
        log.warning("run %d (seed %d) failed at iteration %s: %s",
                    run_id, opt_config.seed, exc.iteration, exc)
        return result
    mc_rng = run_streams(opt_config.seed)[2]
    result.record = record
    result.ymc_mean, result.ymc_std = _track_incumbent(objective, record, config, mc_rng)
    return result


def _fsum_stats(columns):
    """Mean, sample std and 95% half-width down axis 0, independent of row order."""
    runs, N = columns.shape
    mean = np.array([math.fsum(columns[:, i]) / runs for i in range(N)])
    if runs < 2:
        zero = np.zeros(N)
        return mean, zero, zero.copy()
    ss = np.array([math.fsum((columns[:, i] - mean[i]) ** 2) for i in range(N)])
    sd = np.sqrt(ss / (runs - 1))
    return mean, sd, Z95 * sd / math.sqrt(runs)


@dataclass
class AggregateStats:
    """Per-iteration statistics over completed runs."""

    ymc_mean: np.ndarray
    ymc_mean_sd: np.ndarray
    ymc_mean_ci: np.ndarray
    ymc_std: np.ndarray
    ymc_std_sd: np.ndarray
    ymc_std_ci: np.ndarray
    completed: int
    failed: int

    @property
    def iterations(self) -> int:
        return self.ymc_mean.size

    def final(self) -> dict:
        return {
            "ymc_mean": float(self.ymc_mean[-1]),
            "ymc_mean_ci95": float(self.ymc_mean_ci[-1]),
            "ymc_std": float(self.ymc_std[-1]),
            "ymc_std_ci95": float(self.ymc_std_ci[-1]),
            "runs": self.completed,
            "failed": self.failed,
        }


def aggregate(results, budget: int) -> AggregateStats:
    done = [r for r in results if r.completed]
    failed = len(results) - len(done)
    if not done:
        nan = np.full(budget, np.nan)
        return AggregateStats(nan, nan, nan, nan, nan, nan, 0, failed)
    m, m_sd, m_ci = _fsum_stats(np.array([r.ymc_mean for r in done]))
    s, s_sd, s_ci = _fsum_stats(np.array([r.ymc_std for r in done]))
    return AggregateStats(m, m_sd, m_ci, s, s_sd, s_ci, len(done), failed)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list
    stats: AggregateStats
    path: Path | None = None


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def trace_header(d: int):
    return (
        ["run_id", "iter"]
        + [f"x_{j}" for j in range(1, d + 1)]
        + ["f", "f_prime", "n_j"]
        + [f"opt_x_{j}" for j in range(1, d + 1)]
        + ["opt_value", "ymc_mean", "ymc_std"]
    )


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_outputs(result: ExperimentResult, out_dir) -> Path:
    """Write config, per-run status, trace and aggregate files.

    Every file is a pure function of the configuration and the results,
    so repeating an experiment reproduces them byte for byte.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = result.config
    d = config.dimension
    (out / CONFIG_FILE).write_text(format_config(config, include_output_dir=False))

    trace_rows = []
    for r in result.runs:
        if not r.completed:
            continue
        rec = r.record
        for i in range(len(rec)):
            trace_rows.append(
                [r.run_id, i + 1, *rec.X[i], rec.f[i], rec.f_prime[i], int(rec.n_j[i]),
                 *rec.opt_x[i], rec.opt_value[i], r.ymc_mean[i], r.ymc_std[i]]
            )
    _write_csv(out / TRACE_FILE, trace_header(d), trace_rows)

    _write_csv(
        out / RUNS_FILE,
        ["run_id", "seed", "status", "failed_iteration", "message"],
        [[r.run_id, r.seed, "completed" if r.completed else "failed",
          "" if r.failed_iteration is None else r.failed_iteration, r.error]
         for r in result.runs],
    )

    s = result.stats
    _write_csv(
        out / AGGREGATE_FILE,
        ["iter", "runs", "ymc_mean", "ymc_mean_sd", "ymc_mean_ci95",
         "ymc_std", "ymc_std_sd", "ymc_std_ci95"],
        [[i + 1, s.completed, s.ymc_mean[i], s.ymc_mean_sd[i], s.ymc_mean_ci[i],
          s.ymc_std[i], s.ymc_std_sd[i], s.ymc_std_ci[i]] for i in range(s.iterations)],
    )
    result.path = out
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1, out_dir=None) -> ExperimentResult:
    """Execute all runs, aggregate them and write the artifacts.

    ``out_dir`` defaults to ``config.output_dir``; pass ``False`` to skip
    writing. Runs may execute in ``workers`` processes; results are always
    ordered by run id, so the output does not depend on scheduling.
    """
    ids = range(config.runs)
    if workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute_run, [config] * config.runs, ids))
    else:
        results = [execute_run(config, i) for i in ids]
    results.sort(key=lambda r: r.run_id)
    result = ExperimentResult(config, results, aggregate(results, config.budget))
    if out_dir is None:
        out_dir = config.output_dir
    if out_dir is not False:
        write_outputs(result, out_dir)
    return result
