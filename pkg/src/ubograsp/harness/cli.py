"""Command line entry point: ``ubograsp run | bench | report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import NumericalError
from .config import ConfigError, ExperimentConfig, Scenario, load_config
from .experiment import run_experiment
from .report import report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

SUITES = {
    "safe-synthetic": [(Scenario.SYNTHETIC_1D, method) for method in ("BO", "UBO")],
    "planar-grasp": [
        (Scenario(f"{obj}-{dim}d"), method)
        for obj in ("glass", "bottle", "mug")
        for dim in (2, 3)
        for method in ("BO", "UBO")
    ],
}
DEFAULT_SUITE = "safe-synthetic"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ubograsp", description="Unscented Bayesian optimization for safe grasping.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment from a config file")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--workers", type=int, default=1)

    bench = sub.add_parser("bench", help="run a predefined suite of experiments")
    bench.add_argument("--suite", choices=sorted(SUITES), default=DEFAULT_SUITE)
    bench.add_argument("--out", required=True, type=Path)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--runs", type=int, help="override the number of runs (smoke tests)")
    bench.add_argument("--budget", type=int, help="override the evaluation budget (smoke tests)")

    rep = sub.add_parser("report", help="summarize experiment outputs")
    rep.add_argument("--in", dest="in_dir", required=True, type=Path)
    rep.add_argument("--format", choices=("csv", "md"), default="md")
    return parser


def suite_configs(suite: str, out: Path, seed: int = 0, runs=None, budget=None) -> list:
    """Configs of a bench suite, each writing to ``out/<experiment name>``."""
    configs = []
    for scenario, method in SUITES[suite]:
        cfg = ExperimentConfig(scenario=scenario, method=method, cp=True, seed=seed)
        overrides = {}
        if runs is not None:
            overrides["runs"] = runs
        if budget is not None:
            overrides["budget"] = budget
            overrides["init_points"] = min(cfg.init_points, budget)
        cfg = cfg.replace(**overrides)
        configs.append(cfg.replace(output_dir=str(out / cfg.name)))
    return configs


def _report_failures(result) -> bool:
    stats = result.stats
    if stats.failed:
        print(f"{result.config.name}: {stats.failed} of {result.config.runs} runs failed",
              file=sys.stderr)
    return stats.failed > 0


def _run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    result = run_experiment(config, workers=args.workers)
    print(f"{config.name}: final ymc_mean {result.stats.final()['ymc_mean']:.6f} -> {result.path}")
    return EXIT_NUMERICAL if _report_failures(result) else EXIT_OK


def _bench(args) -> int:
    failed = False
    for config in suite_configs(args.suite, args.out, args.seed, args.runs, args.budget):
        result = run_experiment(config, workers=args.workers)
        print(f"{config.name}: final ymc_mean {result.stats.final()['ymc_mean']:.6f}")
        failed |= _report_failures(result)
    return EXIT_NUMERICAL if failed else EXIT_OK


def _report(args) -> int:
    out = report(args.in_dir, args.format)
    sys.stdout.write(out["text"])
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _run, "bench": _bench, "report": _report}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
