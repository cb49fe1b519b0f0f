"""Pipeline configuration: defaults, JSON loading and validation."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .linear import C_GRID
from .lstm import TrainConfig
from .signals import COUNTING_MODES, POST_STOPWORD
from .synth import SyntheticSpec


@dataclass
class PipelineConfig:
    corpus: str | None = None
    validation: str | None = None
    test: str | None = None
    format: str = "jsonl"
    lowercase: bool = True
    stopwords: str | None = None
    min_count: int = 1
    min_responses: int = 2
    counting: str = POST_STOPWORD
    c_grid: list[float] = field(default_factory=lambda: list(C_GRID))
    cv_folds: int = 5
    linear_epochs: int = 100
    epsilon: float = 0.1
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)

    def validate(self) -> None:
        if self.format not in ("jsonl", "tsv"):
            raise ConfigError("format", "must be 'jsonl' or 'tsv'")
        if self.counting not in COUNTING_MODES:
            raise ConfigError("counting", f"must be one of {', '.join(COUNTING_MODES)}")
        if self.min_count < 1:
            raise ConfigError("min_count", "must be >= 1")
        if self.min_responses < 1:
            raise ConfigError("min_responses", "must be >= 1")
        if not self.c_grid:
            raise ConfigError("c_grid", "must not be empty")
        for k, c in enumerate(self.c_grid):
            if c <= 0:
                raise ConfigError(f"c_grid[{k}]", "must be > 0")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds", "must be >= 2")
        if self.linear_epochs < 1:
            raise ConfigError("linear_epochs", "must be >= 1")
        if self.epsilon < 0:
            raise ConfigError("epsilon", "must be >= 0")
        self.train.validate("train")
        self.synth.validate("synth")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def set_seed(self, seed: int) -> None:
        self.seed = seed
        self.train.seed = seed
        self.synth.seed = seed


def _coerce(path: str, value: Any, default: Any, annotation: str) -> Any:
    if dataclasses.is_dataclass(default):
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        return _from_dict(type(default), value, path)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true or false")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        out = []
        for k, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}[{k}]", "expected a number")
            out.append(float(v))
        return out
    # str or optional str
    if value is None and ("None" in annotation or default is None):
        return None
    if not isinstance(value, str):
        raise ConfigError(path, "expected a string")
    return value


def _from_dict(cls, obj: dict, prefix: str = ""):
    instance = cls()
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in obj.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in fields:
            raise ConfigError(path, "unknown field")
        default = getattr(instance, key)
        setattr(instance, key, _coerce(path, value, default, str(fields[key].type)))
    return instance


def config_from_dict(obj: dict) -> PipelineConfig:
    if not isinstance(obj, dict):
        raise ConfigError("<root>", "expected an object")
    cfg = _from_dict(PipelineConfig, obj)
    cfg.validate()
    return cfg


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        cfg = PipelineConfig()
        cfg.validate()
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return config_from_dict(obj)
