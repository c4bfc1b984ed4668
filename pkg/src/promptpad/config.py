"""Server configuration: one YAML file plus environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

_ENV_PREFIX = "PROMPTPAD_"


@dataclass
class Config:
    host: str = "127.0.0.1"
    port: int = 8470
    data_dir: str = "./promptpad-data"
    oracle: str = "mock"  # mock | live
    fsync_every: int = 8
    exec_timeout_ms: int = 10_000
    gen_concurrency: int = 2  # cap on concurrent live-oracle calls per process
    ui_dir: str = ""

    @classmethod
    def load(cls, path: str | None = None, env=os.environ) -> "Config":
        values: dict = {}
        if path:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
            if not isinstance(raw, dict):
                raise ValueError(f"config file {path} must hold a mapping")
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ValueError(f"unknown config keys: {sorted(unknown)}")
            values.update(raw)
        for f in fields(cls):
            key = _ENV_PREFIX + f.name.upper()
            if key in env:
                values[f.name] = env[key]
        cfg = cls(**{k: v for k, v in values.items()})
        cfg.port = int(cfg.port)
        cfg.fsync_every = int(cfg.fsync_every)
        cfg.exec_timeout_ms = int(cfg.exec_timeout_ms)
        cfg.gen_concurrency = int(cfg.gen_concurrency)
        return cfg
