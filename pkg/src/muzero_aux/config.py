"""Run configuration: flat ``key = value`` files with strict validation.

Two presets ship with the package (``cartpole.cfg`` and ``landerlite.cfg``);
load them with :func:`load_preset`.
"""
from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class LearningRate:
    """``init * rate ** (t * scale)``; a constant when ``rate == 1``."""

    init: float
    rate: float = 1.0
    scale: float = 0.0

    def __call__(self, t: int) -> float:
        return self.init * self.rate ** (t * self.scale)

    def __str__(self) -> str:
        if self.rate == 1.0 or self.scale == 0.0:
            return repr(self.init)
        return f"{self.init!r} * {self.rate!r} ^ (t * {self.scale!r})"


@dataclass(frozen=True)
class Temperature:
    """Piecewise-constant schedule: ``values[i]`` while ``t < bounds[i]``, then ``values[-1]``."""

    values: tuple[float, ...]
    bounds: tuple[int, ...] = ()

    def __call__(self, t: int) -> float:
        for v, b in zip(self.values, self.bounds):
            if t < b:
                return v
        return self.values[-1]

    def __str__(self) -> str:
        parts = [f"{v!r} if t < {b}" for v, b in zip(self.values, self.bounds)]
        return ", ".join(parts + [repr(self.values[-1])])


_NUM = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
_LR_RE = re.compile(rf"^{_NUM}\s*\*\s*{_NUM}\s*\^\s*\(\s*t\s*\*\s*{_NUM}\s*\)$")
_TEMP_RE = re.compile(rf"^{_NUM}\s+if\s+t\s*<\s*(\d+)$")


def parse_learning_rate(text: str) -> LearningRate:
    text = text.strip()
    m = _LR_RE.match(text)
    if m:
        return LearningRate(*(float(g) for g in m.groups()))
    return LearningRate(float(text))


def parse_temperature(text: str) -> Temperature:
    parts = [p.strip() for p in text.split(",")]
    values, bounds = [], []
    for p in parts[:-1]:
        m = _TEMP_RE.match(p)
        if not m:
            raise ValueError(f"expected '<value> if t < <step>', got {p!r}")
        values.append(float(m.group(1)))
        bounds.append(int(m.group(2)))
    values.append(float(parts[-1]))
    if bounds != sorted(bounds):
        raise ValueError("temperature boundaries must increase")
    return Temperature(tuple(values), tuple(bounds))


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "enabled", "on"):
        return True
    if t in ("false", "no", "0", "disabled", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    env: str = "cartpole"
    # hyperparameter table rows
    training_steps: int = 10000
    discount: float = 0.997
    td_steps: int = 50
    unroll_steps: int = 10
    state_dim: int = 8
    reanalyze: bool = False
    learning_rate: LearningRate = LearningRate(0.02, 0.9, 0.001)
    value_loss_weight: float = 1.0
    l2_weight: float = 1e-4
    buffer_size: int = 500
    priority_exponent: float = 0.5
    batch_size: int = 128
    simulations: int = 50
    dirichlet_alpha: float = 0.25
    exploration_fraction: float = 0.25
    puct_c1: float = 1.25
    puct_c2: float = 19652.0
    temperature: Temperature = Temperature((1.0, 0.5, 0.25), (5000, 7500))
    # auxiliary losses
    reconstruction_weight: float = 0.0
    consistency_weight: float = 0.0
    # run plumbing
    seed: int = 0
    pretrain_steps: int = 0
    pretrain_episodes: int = 50
    # network and optimisation choices the table leaves open
    hidden_sizes: tuple[int, ...] = (16,)
    bounded_latent: bool = False
    value_transform: bool = True
    gradient_scaling: bool = True
    train_steps_per_episode: int = 20
    eval_interval: int = 100
    eval_episodes: int = 1
    final_window: int = 500
    checkpoint_interval: int = 500
    out_dir: str = "runs/default"

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, str]:
        return {f.name: format_value(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def dumps(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())


# hyperparameter table row -> RunConfig field, exactly one each
TABLE_FIELDS = {
    "Training steps": "training_steps",
    "Discount factor": "discount",
    "TD steps": "td_steps",
    "Unroll steps": "unroll_steps",
    "State dimensions": "state_dim",
    "MuZero Reanalyze": "reanalyze",
    "Learning rate": "learning_rate",
    "Value loss weight": "value_loss_weight",
    "L2 reg. weight": "l2_weight",
    "Replay buffer size": "buffer_size",
    "Prioritization exp.": "priority_exponent",
    "Batch size": "batch_size",
    "Simulations": "simulations",
    "Dirichlet alpha": "dirichlet_alpha",
    "Exploration factor": "exploration_fraction",
    "pUCT c1": "puct_c1",
    "pUCT c2": "puct_c2",
    "Temperature": "temperature",
}

_PARSERS = {
    int: int,
    float: float,
    str: str.strip,
    bool: _parse_bool,
    LearningRate: parse_learning_rate,
    Temperature: parse_temperature,
    tuple[int, ...]: _parse_ints,
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
# `from __future__ import annotations` leaves the types as strings
_TYPE_NAMES = {"int": int, "float": float, "str": str, "bool": bool,
               "LearningRate": LearningRate, "Temperature": Temperature,
               "tuple[int, ...]": tuple[int, ...]}


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return str(v)


def _positive(cfg, name, strict=True):
    v = getattr(cfg, name)
    if (v <= 0) if strict else (v < 0):
        raise ConfigError(name, f"must be {'> 0' if strict else '>= 0'}, got {v!r}")


def validate(cfg: RunConfig) -> None:
    from .envs import ENVIRONMENTS

    if cfg.env not in ENVIRONMENTS:
        raise ConfigError("env", f"unknown environment {cfg.env!r}")
    if not 0.0 <= cfg.discount <= 1.0:
        raise ConfigError("discount", "must lie in [0, 1]")
    for name in ("td_steps", "unroll_steps", "state_dim", "buffer_size", "batch_size",
                 "simulations", "train_steps_per_episode", "eval_interval",
                 "eval_episodes", "final_window", "checkpoint_interval", "pretrain_episodes"):
        _positive(cfg, name)
    for name in ("training_steps", "pretrain_steps", "value_loss_weight", "l2_weight",
                 "priority_exponent", "reconstruction_weight", "consistency_weight"):
        _positive(cfg, name, strict=False)
    for name in ("dirichlet_alpha", "puct_c2"):
        _positive(cfg, name)
    if cfg.puct_c1 < 0:
        raise ConfigError("puct_c1", "must be >= 0")
    if not 0.0 <= cfg.exploration_fraction <= 1.0:
        raise ConfigError("exploration_fraction", "must lie in [0, 1]")
    if cfg.reanalyze:
        raise ConfigError("reanalyze", "target reanalysis is not implemented; set false")
    lr = cfg.learning_rate
    if lr.init <= 0 or lr.rate <= 0 or lr.scale < 0:
        raise ConfigError("learning_rate", f"schedule must stay positive, got {lr}")
    if any(v < 0 for v in cfg.temperature.values):
        raise ConfigError("temperature", "values must be >= 0")
    if not cfg.hidden_sizes or any(h <= 0 for h in cfg.hidden_sizes):
        raise ConfigError("hidden_sizes", "need one or more positive widths")
    if cfg.seed < 0:
        raise ConfigError("seed", "must be >= 0")


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown or repeated keys fail."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "given more than once")
        parser = _PARSERS[_TYPE_NAMES[_FIELD_TYPES[key]]]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    return dataclasses.replace(base or RunConfig(), **values)


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def load_preset(name: str) -> RunConfig:
    text = resources.files("muzero_aux").joinpath("presets", f"{name}.cfg").read_text()
    return parse_config(text)
