"""Experiment configuration (JSON, lower-snake-case keys, every key optional)."""

from dataclasses import asdict, dataclass, field, fields, replace
import json
import os


class ConfigError(ValueError):
    pass


def _default_weight():
    return {"kind": "rotation", "amplitude": 1.2, "angle": 0.35}


def _default_symbol():
    return {"kind": "smooth", "amplitude": 1.0}


@dataclass
class ExperimentConfig:
    suite: str = "all"
    d: int = 1
    depths: list = field(default_factory=lambda: [4, 5])
    n: int = 2
    m: int = 2
    p: float = 2.0
    weight_u: dict = field(default_factory=_default_weight)
    weight_v: dict = field(default_factory=_default_weight)
    symbol: dict = field(default_factory=_default_symbol)
    seed: int = 0
    instances: int = 20
    restarts: int = 8
    lambda0: float = 4.0
    lambda_cap: float = 2.0**20
    bump_eps: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    max_cells: int = 4096
    out: str = "mwlab-out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.d not in (1, 2):
            raise ConfigError(f"d must be 1 or 2, got {self.d!r}")
        if not isinstance(self.depths, (list, tuple)) or not self.depths:
            raise ConfigError("depths must be a nonempty list of integers")
        if any(not isinstance(L, int) or L < 0 for L in self.depths):
            raise ConfigError(f"depths must be nonnegative integers, got {self.depths!r}")
        self.depths = sorted(set(self.depths))
        for L in self.depths:
            if (3 * 2**L) ** self.d > self.max_cells:
                raise ConfigError(
                    f"depth {L} in d={self.d} has {(3 * 2**L) ** self.d} cells, "
                    f"above max_cells={self.max_cells}"
                )
        if not 1 <= self.n <= 8 or not 1 <= self.m <= 8:
            raise ConfigError("matrix sizes n and m must lie in 1..8")
        if not self.p > 1:
            raise ConfigError(f"p must exceed 1, got {self.p!r}")
        if self.instances < 0 or self.restarts < 0:
            raise ConfigError("instances and restarts must be nonnegative")
        if not self.lambda0 > 1 or self.lambda_cap < self.lambda0:
            raise ConfigError("need 1 < lambda0 <= lambda_cap")
        for name in ("weight_u", "weight_v", "symbol"):
            spec = getattr(self, name)
            if not isinstance(spec, dict) or "kind" not in spec:
                raise ConfigError(f"{name} must be an object with a 'kind' key")
        if any(e <= 0 for e in self.bump_eps):
            raise ConfigError("bump_eps entries must be positive")

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes):
        return replace(self, **changes)


_TYPES = {f.name: f for f in fields(ExperimentConfig)}


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    clean = {}
    for key, value in data.items():
        default = _TYPES[key].default
        if isinstance(default, bool) or default is None:
            clean[key] = value
        elif isinstance(default, int) and not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        elif isinstance(default, float):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            clean[key] = float(value)
            continue
        elif isinstance(default, str) and not isinstance(value, str):
            raise ConfigError(f"{key} must be a string, got {value!r}")
        clean[key] = value
    try:
        return ExperimentConfig(**clean)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)
