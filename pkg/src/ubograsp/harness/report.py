"""Summaries of finished experiment directories."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from ..errors import InputError
from .config import ConfigError, load_config
from .experiment import AGGREGATE_FILE, CONFIG_FILE, RUNS_FILE, TRACE_FILE, trace_header

REPORT_DIR = "report"
ITERATIONS_FILE = "iterations.csv"


@dataclass(frozen=True)
class ExperimentSummary:
    name: str
    scenario: str
    method: str
    cp: bool
    runs: int
    failed: int
    ymc_mean: list
    ymc_mean_ci: list
    ymc_std: list
    ymc_std_ci: list


def find_experiments(root) -> list:
    """Directories under ``root`` (itself included) holding an experiment config."""
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"{root} is not a directory", [root])
    return sorted(p.parent for p in root.rglob(CONFIG_FILE) if REPORT_DIR not in p.parts)


def _read_rows(path: Path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty file")
    return rows[0], rows[1:]


def _load_experiment(exp_dir: Path) -> ExperimentSummary:
    bad = []
    try:
        config = load_config(exp_dir / CONFIG_FILE)
    except (OSError, ConfigError) as exc:
        raise InputError(f"{exp_dir / CONFIG_FILE}: {exc}", [exp_dir / CONFIG_FILE]) from None

    try:
        header, rows = _read_rows(exp_dir / AGGREGATE_FILE)
        col = {h: i for i, h in enumerate(header)}
        series = {k: [float(r[col[k]]) for r in rows]
                  for k in ("ymc_mean", "ymc_mean_ci95", "ymc_std", "ymc_std_ci95")}
        if [int(r[col["iter"]]) for r in rows] != list(range(1, config.budget + 1)):
            raise ValueError("iteration column does not match the budget")
    except (OSError, ValueError, KeyError, IndexError) as exc:
        bad.append((exp_dir / AGGREGATE_FILE, exc))
        series = None

    try:
        header, runs = _read_rows(exp_dir / RUNS_FILE)
        status = [r[header.index("status")] for r in runs]
        if len(status) != config.runs or set(status) - {"completed", "failed"}:
            raise ValueError("run table does not match the config")
        completed = status.count("completed")
    except (OSError, ValueError, IndexError) as exc:
        bad.append((exp_dir / RUNS_FILE, exc))
        completed = 0

    try:
        header, rows = _read_rows(exp_dir / TRACE_FILE)
        if header != trace_header(config.dimension):
            raise ValueError("unexpected header")
        if len(rows) != completed * config.budget:
            raise ValueError(f"expected {completed * config.budget} rows, found {len(rows)}")
    except (OSError, ValueError) as exc:
        bad.append((exp_dir / TRACE_FILE, exc))

    if bad:
        detail = "; ".join(f"{p}: {e}" for p, e in bad)
        raise InputError(f"corrupt experiment output: {detail}", [p for p, _ in bad])
    return ExperimentSummary(
        name=exp_dir.name,
        scenario=config.scenario.value,
        method=config.method,
        cp=config.cp,
        runs=completed,
        failed=config.runs - completed,
        ymc_mean=series["ymc_mean"],
        ymc_mean_ci=series["ymc_mean_ci95"],
        ymc_std=series["ymc_std"],
        ymc_std_ci=series["ymc_std_ci95"],
    )


def load_summaries(root) -> list:
    dirs = find_experiments(root)
    if not dirs:
        raise InputError(f"no experiment outputs found under {root}", [Path(root)])
    summaries, bad = [], []
    for d in dirs:
        try:
            summaries.append(_load_experiment(d))
        except InputError as exc:
            bad.append(exc)
    if bad:
        raise InputError("; ".join(str(e) for e in bad), [f for e in bad for f in e.files])
    return summaries


def _num(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.4f}"


def markdown_table(summaries) -> str:
    lines = [
        "| experiment | scenario | method | CP | runs | failed | ymc_mean (x_opt) | std(y_mc) (x_opt) |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for s in summaries:
        lines.append(
            f"| {s.name} | {s.scenario} | {s.method} | {'yes' if s.cp else 'no'} | {s.runs} "
            f"| {s.failed} | {_num(s.ymc_mean[-1])} +- {_num(s.ymc_mean_ci[-1])} "
            f"| {_num(s.ymc_std[-1])} +- {_num(s.ymc_std_ci[-1])} |"
        )
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def report(in_dir, fmt: str = "md") -> dict:
    """Write the per-iteration trace and the final-iteration summary.

    Files go to ``<in_dir>/report/``: ``iterations.csv`` with one row per
    experiment and iteration, and ``summary.csv`` or ``summary.md``. Returns
    ``{"iterations": path, "summary": path, "text": summary text}``.
    """
    if fmt not in ("csv", "md"):
        raise ValueError("format must be 'csv' or 'md'")
    summaries = load_summaries(in_dir)
    out = Path(in_dir) / REPORT_DIR
    out.mkdir(exist_ok=True)

    iter_path = out / ITERATIONS_FILE
    rows = []
    for s in summaries:
        for i in range(len(s.ymc_mean)):
            rows.append([s.name, s.scenario, s.method, int(s.cp), i + 1,
                         repr(s.ymc_mean[i]), repr(s.ymc_mean_ci[i]),
                         repr(s.ymc_std[i]), repr(s.ymc_std_ci[i])])
    _write_csv(iter_path, ["experiment", "scenario", "method", "cp", "iter", "ymc_mean",
                           "ymc_mean_ci95", "ymc_std", "ymc_std_ci95"], rows)

    if fmt == "md":
        text = markdown_table(summaries)
        summary_path = out / "summary.md"
        summary_path.write_text(text)
    else:
        summary_path = out / "summary.csv"
        _write_csv(summary_path, ["experiment", "scenario", "method", "cp", "runs", "failed",
                                  "ymc_mean", "ymc_mean_ci95", "ymc_std", "ymc_std_ci95"],
                   [[s.name, s.scenario, s.method, int(s.cp), s.runs, s.failed,
                     repr(s.ymc_mean[-1]), repr(s.ymc_mean_ci[-1]),
                     repr(s.ymc_std[-1]), repr(s.ymc_std_ci[-1])] for s in summaries])
        text = summary_path.read_text()
    return {"iterations": iter_path, "summary": summary_path, "text": text}
