"""Run configuration: one JSON document with model, init, task, optim and io sections."""

from __future__ import annotations

import dataclasses
import json
import os
import re
from dataclasses import dataclass, field

from .cell import Nonlinearity
from .transition import Integrator


class ConfigError(ValueError):
    """Malformed or invalid run configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass
class ModelConfig:
    kappa: int = 128
    tau: float = 15.0
    integrator: str = "midpoint"
    nonlinearity: str = "modrelu"
    lam: float = 0.0
    cell: str = "lvf"
    hard_divfree: bool = False

    def validate(self):
        if self.kappa < 1:
            raise ValueError("model.kappa must be positive")
        if not self.tau > 0:
            raise ValueError("model.tau must be positive")
        Integrator(self.integrator)
        Nonlinearity(self.nonlinearity)
        if self.lam < 0:
            raise ValueError("model.lambda must be nonnegative")
        if self.cell not in ("lvf", "rnn"):
            raise ValueError("model.cell must be 'lvf' or 'rnn'")


@dataclass
class InitConfig:
    epsilon: float = 1e-8
    max_iters: int = 1000
    seed: int = 0

    def validate(self):
        if not self.epsilon > 0 or self.max_iters < 1:
            raise ValueError("init.epsilon must be positive and init.max_iters at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("init.seed must be a 64-bit unsigned integer")


@dataclass
class TaskConfig:
    T: int = 200
    K: int = 10
    L: int = 9
    batch: int = 128
    eval_batch: int = 256

    def validate(self):
        if self.T < 1 or self.K < 1 or self.L < 2 or self.batch < 1 or self.eval_batch < 1:
            raise ValueError("task needs T >= 1, K >= 1, L >= 2 and positive batch sizes")


@dataclass
class OptimConfig:
    lr: float = 1e-4
    decay: float = 1.0
    clip: float = -1.0
    steps: int = 20000
    eval_every: int = 100
    patience: int = 5

    def validate(self):
        if self.lr < 0:
            raise ValueError("optim.lr must be nonnegative")
        if not 0 < self.decay <= 1:
            raise ValueError("optim.decay must be in (0, 1]")
        if self.clip < 0 and self.clip != -1:
            raise ValueError("optim.clip must be nonnegative or -1 (disabled)")
        if self.steps < 0 or self.eval_every < 1 or self.patience < 1:
            raise ValueError("optim.steps >= 0, optim.eval_every >= 1, optim.patience >= 1")


@dataclass
class IOConfig:
    out_dir: str = "runs/copy"
    checkpoint_every: int = 1000
    wall_clock: bool = True

    def validate(self):
        if self.checkpoint_every < 0:
            raise ValueError("io.checkpoint_every must be nonnegative (0 disables)")


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    init: InitConfig = field(default_factory=InitConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    io: IOConfig = field(default_factory=IOConfig)

    def validate(self):
        for f in dataclasses.fields(self):
            getattr(self, f.name).validate()
        return self

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            section = dataclasses.asdict(getattr(self, f.name))
            out[f.name] = {_JSON_NAMES.get(k, k): v for k, v in section.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict, text: str = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("top level must be a JSON object")
        sections = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for name, value in d.items():
            if name not in sections:
                raise ConfigError(f"unknown section {name!r}", _line_of(text, name))
            kwargs[name] = _build_section(sections[name].default_factory, name, value, text)
        cfg = cls(**kwargs)
        try:
            return cfg.validate()
        except ValueError as exc:
            key = str(exc).split()[0].split(".")[-1]
            raise ConfigError(str(exc), _line_of(text, key)) from None

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
        return cls.from_dict(d, text)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            cfg = cls.from_json(fh.read())
        env = os.environ.get("LVF_OUT_DIR")
        if env:
            cfg.io.out_dir = env
        return cfg


# JSON key -> dataclass field where they differ
_FIELD_NAMES = {"lambda": "lam"}
_JSON_NAMES = {v: k for k, v in _FIELD_NAMES.items()}


def _line_of(text, key):
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _build_section(factory, section, value, text):
    if not isinstance(value, dict):
        raise ConfigError(f"section {section!r} must be an object", _line_of(text, section))
    obj = factory()
    types = {f.name: f.type for f in dataclasses.fields(obj)}
    for key, v in value.items():
        name = _FIELD_NAMES.get(key, key)
        if name not in types:
            raise ConfigError(f"unknown key {section}.{key}", _line_of(text, key))
        setattr(obj, name, _coerce(types[name], v, f"{section}.{key}", text, key))
    return obj


def _coerce(kind, v, label, text, key):
    ok = {
        "int": isinstance(v, int) and not isinstance(v, bool),
        "float": isinstance(v, (int, float)) and not isinstance(v, bool),
        "bool": isinstance(v, bool),
        "str": isinstance(v, str),
    }[kind]
    if not ok:
        raise ConfigError(f"{label} must be of type {kind}, got {v!r}", _line_of(text, key))
    return float(v) if kind == "float" else v
