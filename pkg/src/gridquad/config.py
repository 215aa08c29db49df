"""Training/model hyperparameters."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 15
    batch_size: int = 1
    h_p: int = 20
    h_s: int = 512
    h_e: int = 256
    h_r: int = 50
    dropout: float = 0.5
    seed: int = 0
    use_skem: bool = True
    use_pos: bool = True
    use_dep: bool = True
    randomize_syntax: bool = False
    normalize_adjacency: bool = False
    vocab_size: int = 0  # 0: size the table from the training corpus
    h_x: int = 100

    def validate(self) -> "TrainConfig":
        for name in ("h_p", "h_s", "h_e", "h_r", "h_x"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_size != 1:
            raise ConfigError("only batch_size=1 is supported")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.vocab_size < 0:
            raise ConfigError("vocab_size must be >= 0")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(names)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key, value in d.items():
            kind = type(getattr(cls(), key))
            if kind is bool and not isinstance(value, bool):
                raise ConfigError(f"{key} must be true/false, got {value!r}")
            if kind in (int, float):
                numeric = isinstance(value, (int, float)) and not isinstance(value, bool)
                if not numeric:
                    raise ConfigError(f"{key} must be a number, got {value!r}")
                if kind is int and not float(value).is_integer():
                    raise ConfigError(f"{key} must be an integer, got {value!r}")
            kw[key] = kind(value)
        return cls(**kw).validate()

    @classmethod
    def load(cls, path) -> "TrainConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
