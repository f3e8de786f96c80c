"""Experiment configuration: a flat INI file with sections
[meta], [pool], [pipeline], [bench].

Keys (exhaustive): k, d, preset, delta, sigma | n_l1, t_l1, n_h, t_h,
n_l2, t_l2 | L, tau | trials, repeats, confidence, gamma2_grid,
em_max_iters, em_tol. Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields

from ..datagen import GenPreset, PoolSizes

__all__ = ["RunConfig", "parse_config", "config_hash"]

_SECTIONS = {
    "meta": ("k", "d", "preset", "delta", "sigma"),
    "pool": ("n_l1", "t_l1", "n_h", "t_h", "n_l2", "t_l2"),
    "pipeline": ("l", "tau"),
    "bench": (
        "trials",
        "repeats",
        "confidence",
        "gamma2_grid",
        "em_max_iters",
        "em_tol",
    ),
}


@dataclass(frozen=True)
class RunConfig:
    k: int = 2
    d: int = 16
    preset: str = "orthonormal"
    delta: float = 1.0
    sigma: float = 0.5
    n_l1: int = 1024
    t_l1: int = 4
    n_h: int = 64
    t_h: int = 32
    n_l2: int = 128
    t_l2: int = 16
    L: int = 0  # 0 = auto
    tau: int = 10
    trials: int = 10
    repeats: int = 3
    confidence: float = 0.9
    gamma2_grid: tuple[float, ...] = (0.0, 0.5)
    em_max_iters: int = 50
    em_tol: float = 1e-7

    def __post_init__(self):
        if self.k < 1 or self.d < self.k:
            raise ValueError("need d >= k >= 1")
        if self.t_l1 < 2:
            raise ValueError("t_l1 must be >= 2")
        for name in ("n_l1", "t_l1", "n_h", "t_h", "n_l2", "t_l2", "tau", "trials", "repeats", "em_max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.L < 0:
            raise ValueError("L must be >= 0 (0 selects the default)")
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError("confidence must be in (0, 1]")
        if self.em_tol <= 0:
            raise ValueError("em_tol must be positive")
        GenPreset(kind=self.preset, delta=self.delta, sigma=self.sigma)

    @property
    def gen_preset(self) -> GenPreset:
        return GenPreset(kind=self.preset, delta=self.delta, sigma=self.sigma)

    @property
    def pool_sizes(self) -> PoolSizes:
        return PoolSizes(
            n_l1=self.n_l1,
            t_l1=self.t_l1,
            n_h=self.n_h,
            t_h=self.t_h,
            n_l2=self.n_l2,
            t_l2=self.t_l2,
        )

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            out[f.name] = list(val) if isinstance(val, tuple) else val
        return out


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key == "preset":
        return raw
    if key == "gamma2_grid":
        return tuple(float(v) for v in raw.split(",") if v.strip())
    if key in ("delta", "sigma", "confidence", "em_tol"):
        return float(raw)
    return int(raw)


def parse_config(path: str | None) -> RunConfig:
    """Load a RunConfig from an INI file; missing keys keep their defaults."""
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    kwargs = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            name = "L" if key == "l" else key
            kwargs[name] = _parse_value(key, raw)
    return RunConfig(**kwargs)


def config_hash(config: RunConfig) -> str:
    """Stable hash of the resolved configuration."""
    items = sorted(config.as_dict().items())
    canonical = "\n".join(f"{k}={v!r}" for k, v in items)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]
