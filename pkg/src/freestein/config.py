"""Run configuration: tolerances, grid sizes and output paths."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields

ENV_VAR = "FREESTEIN_CONFIG"

_TOLERANCES = ("eq_tol", "mm_tol", "check_tol", "sd_tol", "conv_eps")
_NODE_COUNTS = ("w2_nodes", "tensor_nodes", "convolve_grid", "stein_grid", "diffusion_nodes")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Defaults reproduce every acceptance check without overrides."""

    eq_tol: float = 1e-13
    mm_tol: float = 1e-10
    check_tol: float = 1e-8
    sd_tol: float = 1e-8
    conv_eps: float = 1e-4
    damping: float = 0.5
    max_iter: int = 200
    degree: int = 128
    w2_nodes: int = 256
    tensor_nodes: int = 128
    convolve_grid: int = 1024
    stein_grid: int = 64
    diffusion_nodes: int = 128
    out: str | None = None
    grid_out: str | None = None

    def __post_init__(self):
        for name in _TOLERANCES:
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        for name in _NODE_COUNTS:
            v = getattr(self, name)
            if not isinstance(v, int) or v < 32 or v > 4096 or v & (v - 1):
                raise ConfigError(f"{name} must be a power of two in [32, 4096], got {v!r}")
        if not 0 < self.damping <= 1:
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping!r}")
        if not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise ConfigError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not isinstance(self.degree, int) or self.degree < 8:
            raise ConfigError(f"degree must be an integer >= 8, got {self.degree!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig.from_dict(data)


def load_config(path: str | None = None) -> RunConfig:
    """Load from ``path``, else from ``$FREESTEIN_CONFIG``, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return RunConfig()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return RunConfig.from_dict(data)
