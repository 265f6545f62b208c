"""Run configuration: every tunable knob in one flat dataclass.

Config files are plain text, one ``key = value`` pair per line with ``#``
comments; unknown keys are rejected so typos fail loudly.  Loss and
temperature defaults follow the reference hyperparameters; encoder and
optimizer defaults are sized for the small bag-of-tokens model (the
fine-tuning learning rates used with large pretrained encoders do not
transfer to it).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError

RANK_METHODS = ("listnet", "listmle")
LR_SCHEDULES = ("constant", "linear")


@dataclass
class RunConfig:
    # loss temperatures and weights
    tau1: float = 0.05
    tau2: float = 0.025
    tau3: float = 0.0125
    alpha: float = 1.0 / 3.0
    beta: float = 1.0
    gamma: float = 1.0
    rank_method: str = "listnet"
    # encoder
    dim: int = 32
    dropout_p: float = 0.1
    min_count: int = 1
    # optimizer
    learning_rate: float = 1e-3
    lr_schedule: str = "constant"
    warmup_fraction: float = 0.0
    decay1: float = 0.9
    decay2: float = 0.999
    epsilon: float = 1e-8
    # loop
    batch_size: int = 32
    steps: int = 500
    eval_interval: int = 125
    seed: int = 0
    validation_sts: str = ""

    def validate(self) -> "RunConfig":
        checks = [
            (self.tau1 > 0.0, "tau1 must be > 0"),
            (self.tau2 > 0.0, "tau2 must be > 0"),
            (self.tau3 > 0.0, "tau3 must be > 0"),
            (0.0 <= self.alpha <= 1.0, "alpha must lie in [0, 1]"),
            (self.beta >= 0.0, "beta must be >= 0"),
            (self.gamma >= 0.0, "gamma must be >= 0"),
            (self.rank_method in RANK_METHODS, f"rank_method must be one of {RANK_METHODS}"),
            (self.dim >= 1, "dim must be >= 1"),
            (0.0 <= self.dropout_p < 1.0, "dropout_p must lie in [0, 1)"),
            (self.min_count >= 1, "min_count must be >= 1"),
            (self.learning_rate > 0.0, "learning_rate must be > 0"),
            (self.lr_schedule in LR_SCHEDULES, f"lr_schedule must be one of {LR_SCHEDULES}"),
            (0.0 <= self.warmup_fraction < 1.0, "warmup_fraction must lie in [0, 1)"),
            (0.0 <= self.decay1 < 1.0, "decay1 must lie in [0, 1)"),
            (0.0 <= self.decay2 < 1.0, "decay2 must lie in [0, 1)"),
            (self.epsilon > 0.0, "epsilon must be > 0"),
            (self.batch_size >= 2, "batch_size must be >= 2"),
            (self.steps >= 0, "steps must be >= 0"),
            (self.eval_interval >= 1, "eval_interval must be >= 1"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return self


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, text: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {text!r} as {kind}") from None


def parse_config(path) -> RunConfig:
    """Read a key = value config file into a validated RunConfig."""
    values = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
            key, _, text = line.partition("=")
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            values[key] = _coerce(key, text.strip())
    return RunConfig(**values).validate()
