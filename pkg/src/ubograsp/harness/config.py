"""Experiment configuration and its plain-text ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from pathlib import Path

from ..errors import UbograspError
from ..optimizer import OptimizerConfig
from ..unscented import InputNoise


class ConfigError(UbograspError, ValueError):
    """Invalid experiment configuration or config file."""


class Scenario(str, enum.Enum):
    SYNTHETIC_1D = "synthetic-1d"
    SYNTHETIC_2D = "synthetic-2d"
    GLASS_2D = "glass-2d"
    GLASS_3D = "glass-3d"
    BOTTLE_2D = "bottle-2d"
    BOTTLE_3D = "bottle-3d"
    MUG_2D = "mug-2d"
    MUG_3D = "mug-3d"

    @property
    def dimension(self) -> int:
        return int(self.value[-2])

    @property
    def is_grasp(self) -> bool:
        return not self.value.startswith("synthetic")

    @property
    def object_name(self) -> str:
        return self.value.rsplit("-", 1)[0]


@dataclass(frozen=True)
class ExperimentConfig:
    """One method on one scenario, repeated over seeded runs.

    Defaults follow the evaluation protocol: 20 runs of 20 Latin hypercube
    points plus 140 optimization steps, 10 Monte Carlo samples per new
    incumbent, sigma_x = 0.03, noise variance 1e-8, lambda = 0.1, m = 10.
    Run ``r`` uses seed ``seed + 1000 * r``.
    """

    scenario: Scenario = Scenario.SYNTHETIC_1D
    method: str = "UBO"
    cp: bool = True
    runs: int = 20
    mc_samples: int = 10
    mc_every_iteration: bool = False
    dimension: int | None = None
    init_points: int = 20
    budget: int = 160
    sigma_x: float = 0.03
    k_scale: float = 1.0
    noise_variance: float = 1e-8
    hyper_samples: int = 10
    penalty_lambda: float = 0.1
    seed: int = 0
    acq_budget: int | None = None
    output_dir: str = "results"

    def __post_init__(self):
        try:
            object.__setattr__(self, "scenario", Scenario(self.scenario))
        except ValueError:
            choices = ", ".join(s.value for s in Scenario)
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {choices}") from None
        method = str(self.method).upper()
        if method not in ("BO", "UBO"):
            raise ConfigError(f"method must be BO or UBO, got {self.method!r}")
        object.__setattr__(self, "method", method)
        if self.dimension is None:
            object.__setattr__(self, "dimension", self.scenario.dimension)
        elif self.dimension != self.scenario.dimension:
            raise ConfigError(
                f"dimension {self.dimension} does not match scenario {self.scenario.value}"
            )
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1")
        if self.sigma_x < 0 or self.k_scale <= 0:
            raise ConfigError("sigma_x must be >= 0 and k_scale > 0")
        try:
            self.optimizer_config(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def noise(self) -> InputNoise:
        return InputNoise(self.sigma_x, self.k_scale)

    @property
    def name(self) -> str:
        cp = "CP" if self.cp else "noCP"
        return f"{self.scenario.value}-{self.method}-{cp}"

    def run_seed(self, run_index: int) -> int:
        return self.seed + 1000 * run_index

    def optimizer_config(self, run_index: int) -> OptimizerConfig:
        return OptimizerConfig.for_method(
            self.method,
            dimension=self.dimension,
            init_points=self.init_points,
            budget=self.budget,
            noise=self.noise,
            noise_variance=self.noise_variance,
            hyper_samples=self.hyper_samples,
            collision_penalty_enabled=self.cp,
            penalty_lambda=self.penalty_lambda,
            seed=self.run_seed(run_index),
            acq_budget=self.acq_budget,
        )

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# the file key "lambda" is a Python keyword, so the field is penalty_lambda
_FILE_KEYS = {f.name: f.name for f in dataclasses.fields(ExperimentConfig)}
_FILE_KEYS["lambda"] = _FILE_KEYS.pop("penalty_lambda")
_FIELD_TO_KEY = {v: k for k, v in _FILE_KEYS.items()}
_TYPES = {
    "scenario": str, "method": str, "cp": bool, "runs": int, "mc_samples": int,
    "mc_every_iteration": bool, "dimension": int, "init_points": int, "budget": int,
    "sigma_x": float, "k_scale": float, "noise_variance": float, "hyper_samples": int,
    "penalty_lambda": float, "seed": int, "acq_budget": int, "output_dir": str,
}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(field_name, text):
    kind = _TYPES[field_name]
    if kind is bool:
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind is int:
        return int(text, 10)
    return kind(text)


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in _FILE_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        field_name = _FILE_KEYS[key]
        if field_name in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[field_name] = _convert(field_name, value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def format_config(config: ExperimentConfig, include_output_dir: bool = True) -> str:
    """Canonical file text for ``config``; parsing it gives the same config back."""
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if value is None or (f.name == "output_dir" and not include_output_dir):
            continue
        if isinstance(value, enum.Enum):
            value = value.value
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{_FIELD_TO_KEY[f.name]} = {value}")
    return "\n".join(lines) + "\n"
