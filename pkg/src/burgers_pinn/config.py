"""Run configuration and its flat ``section.key = value`` text format.

Values are JSON literals, one key per line; ``#`` starts a comment line.
Example::

    problem.name = "nonstationary"
    network.sizes = [3, 32, 32, 1]
    schedule.adam_epochs = 3000
    seed = 7
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, is_dataclass, replace

from .errors import InvalidInputError
from .sample import RarConfig


@dataclass
class ProblemConfig:
    name: str = "stationary"
    nu: float | None = None
    lo: list[float] | None = None
    hi: list[float] | None = None
    T: float | None = None


@dataclass
class NetworkConfig:
    sizes: list[int] | None = None  # None: [point_dim, 32, 32, 1]
    activation: str = "tanh"
    periodic_embedding: bool = False


@dataclass
class PointsConfig:
    interior: int = 8000
    boundary: int = 500
    initial: int = 500  # ignored for stationary problems


@dataclass
class ScheduleConfig:
    adam_epochs: int = 3000
    lbfgs_iters: int = 5000
    lr: float = 1e-3
    lbfgs_memory: int = 100


@dataclass
class RarSettings:
    enabled: bool = True
    pool_size: int = 100_000
    threshold: float = 5e-3
    add_per_round: int = 100
    max_rounds: int = 20
    retrain_adam: int = 1000
    retrain_lbfgs: int = 1000

    def to_rar_config(self, seed: int) -> RarConfig:
        return RarConfig(self.pool_size, self.threshold, self.add_per_round, self.max_rounds, seed)


@dataclass
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    points: PointsConfig = field(default_factory=PointsConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    rar: RarSettings = field(default_factory=RarSettings)
    grid_n: int = 32
    times: list[float] = field(default_factory=lambda: [0.0, 0.5, 1.0])
    seed: int = 0
    out_dir: str = "runs"


def _flatten(obj, prefix=""):
    for f in fields(obj):
        value = getattr(obj, f.name)
        key = prefix + f.name
        if is_dataclass(value):
            yield from _flatten(value, key + ".")
        else:
            yield key, f.type, value


def to_text(cfg: RunConfig) -> str:
    return "".join(f"{key} = {json.dumps(value)}\n" for key, _, value in _flatten(cfg))


def _coerce(type_str: str, value, key: str):
    if value is None:
        if "None" not in type_str:
            raise InvalidInputError(f"{key} may not be null")
        return None
    base = type_str.replace(" | None", "")
    try:
        if base == "float":
            return float(value)
        if base == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if base == "bool":
            if not isinstance(value, bool):
                raise ValueError
            return value
        if base == "str":
            return str(value)
        if base == "list[float]":
            return [float(v) for v in value]
        if base == "list[int]":
            return [int(v) for v in value]
    except (TypeError, ValueError):
        raise InvalidInputError(f"bad value for {key}: {value!r}") from None
    raise InvalidInputError(f"unsupported config type {type_str} for {key}")


def set_value(cfg: RunConfig, key: str, value) -> RunConfig:
    """Return a copy of ``cfg`` with the dotted ``key`` set (value already JSON-decoded)."""
    parts = key.split(".")
    types = {k: t for k, t, _ in _flatten(cfg)}
    if key not in types:
        raise InvalidInputError(f"unknown config key {key!r}")
    value = _coerce(types[key], value, key)
    if len(parts) == 1:
        return replace(cfg, **{key: value})
    section = getattr(cfg, parts[0])
    return replace(cfg, **{parts[0]: replace(section, **{parts[1]: value})})


def parse_assignment(line: str) -> tuple[str, object]:
    if "=" not in line:
        raise InvalidInputError(f"expected 'key = value', got {line!r}")
    key, raw = (s.strip() for s in line.split("=", 1))
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings are accepted
    return key, value


def from_text(text: str, base: RunConfig | None = None) -> RunConfig:
    cfg = base if base is not None else RunConfig()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cfg = set_value(cfg, *parse_assignment(line))
    return cfg


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return from_text(fh.read())
