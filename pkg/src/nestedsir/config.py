"""Flat ``key = value`` configuration with command-line overrides."""
from __future__ import annotations

import json
from pathlib import Path


class ConfigError(ValueError):
    """Missing or malformed configuration entry (a usage error)."""


def parse_value(text: str):
    """int, float, comma-separated list, or string."""
    text = text.strip()
    if "," in text:
        return [parse_value(t) for t in text.split(",") if t.strip()]
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def load_config(path) -> dict:
    """Read ``key = value`` lines (``#`` comments); a run manifest (JSON) is
    accepted too, in which case its recorded parameters are used."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        return dict(data.get("params", data))
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip()] = parse_value(v)
    return out


def apply_overrides(cfg: dict, items) -> dict:
    cfg = dict(cfg)
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg[k.strip()] = parse_value(v)
    return cfg


def require(cfg: dict, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"missing required config key(s): {', '.join(missing)}")


def as_list(v):
    if v == "" or v is None:
        return []
    return list(v) if isinstance(v, (list, tuple)) else [v]
