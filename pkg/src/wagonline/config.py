"""Flat key=value configuration for the pipeline tunables and the service.

The file is pointed at by ``WAGONLINE_CONFIG`` (or a ``--config`` flag);
missing file or variable means defaults everywhere.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_VAR = "WAGONLINE_CONFIG"


@dataclass
class AppConfig:
    # tracking / counting
    iou_threshold: float = 0.3
    confirm_frames: int = 3
    close_after: int = 10
    gap_factor: float = 1.75
    min_region_conf: float = 0.25
    # recognition
    tau_conf: float = 0.5
    max_low: int = 1
    # service
    api_token: str = ""
    publish_endpoint: str = ""
    publish_interval_s: float = 30.0


def load_config(path: str | Path | None = None) -> AppConfig:
    """Read a ``key = value`` file; unknown keys are an error, comments allowed."""
    if path is None:
        env = os.environ.get(ENV_VAR)
        if not env:
            return AppConfig()
        path = env
    config = AppConfig()
    by_name = {f.name: f for f in fields(AppConfig)}
    text = Path(path).read_text(encoding="utf-8")
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in by_name:
            raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
        kind = by_name[key].type
        if kind in ("int", int):
            setattr(config, key, int(value))
        elif kind in ("float", float):
            setattr(config, key, float(value))
        else:
            setattr(config, key, value)
    return config
