"""``cxd.toml`` loading with ``CXD_*_URL`` environment overrides.

Example::

    [backends]
    planner = "template"          # template | scripted | remote
    planner_fixtures = "fixtures/"
    denoiser = "mock"             # mock | remote
    timeout = 30

    [modulation]
    lambda_pos = 0.5
    omega = 0.7

    [lexicons]
    path = "my.lex"
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .analysis import MAX_SIMPLE_CONCEPTS
from .composer import DEFAULT_LAMBDA_NEG, DEFAULT_LAMBDA_POS, DEFAULT_OMEGA, DEFAULT_STEPS
from .latent import DEFAULT_SHAPE

DEFAULT_CONFIG_NAME = "cxd.toml"

ENV_URLS = {
    "planner_url": "CXD_PLANNER_URL",
    "denoiser_url": "CXD_DENOISER_URL",
    "retouch_url": "CXD_RETOUCH_URL",
}


@dataclass
class BackendConfig:
    planner: str = "template"
    planner_url: str | None = None
    planner_fixtures: str | None = None
    denoiser: str = "mock"
    denoiser_url: str | None = None
    retouch_url: str | None = None
    token: str | None = None
    timeout: float = 30.0


@dataclass
class ModulationConfig:
    lambda_pos: float = DEFAULT_LAMBDA_POS
    lambda_neg: float = DEFAULT_LAMBDA_NEG
    omega: float = DEFAULT_OMEGA
    steps: int = DEFAULT_STEPS
    seed: int = 0
    height: int = DEFAULT_SHAPE[0]
    width: int = DEFAULT_SHAPE[1]
    channels: int = DEFAULT_SHAPE[2]


@dataclass
class LexiconConfig:
    path: str | None = None
    max_concepts: int = MAX_SIMPLE_CONCEPTS


@dataclass
class Config:
    backends: BackendConfig = field(default_factory=BackendConfig)
    modulation: ModulationConfig = field(default_factory=ModulationConfig)
    lexicons: LexiconConfig = field(default_factory=LexiconConfig)
    source: str | None = None


def _fill(section, values: dict, where: str):
    known = {f.name: f for f in fields(section)}
    for key, val in values.items():
        if key not in known:
            raise ValueError(f"{where}: unknown key {key!r}")
        setattr(section, key, val)


def load_config(path: str | Path | None = None, env: dict | None = None) -> Config:
    """Read ``path`` (or ./cxd.toml when present), then apply env overrides."""
    env = os.environ if env is None else env
    cfg = Config()
    if path is None and Path(DEFAULT_CONFIG_NAME).is_file():
        path = DEFAULT_CONFIG_NAME
    if path is not None:
        p = Path(path)
        with p.open("rb") as fh:
            data = tomllib.load(fh)
        for name in ("backends", "modulation", "lexicons"):
            if name in data:
                _fill(getattr(cfg, name), data.pop(name), f"{p}[{name}]")
        if data:
            raise ValueError(f"{p}: unknown section(s) {sorted(data)}")
        cfg.source = str(p)
        if cfg.lexicons.path and not Path(cfg.lexicons.path).is_absolute():
            cfg.lexicons.path = str(p.parent / cfg.lexicons.path)
    for attr, var in ENV_URLS.items():
        if env.get(var):
            setattr(cfg.backends, attr, env[var])
    return cfg
