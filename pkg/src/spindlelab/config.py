"""TOML experiment configs and their canonical digest."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import tomli

from .errors import ConfigError


def _normalize(value):
    # floats with integral values hash like the integer, so 2 and 2.0 agree
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"non-finite number {value!r} in config")
        return int(value) if value.is_integer() else float(repr(value))
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    return value


def canonical_text(data: dict) -> str:
    """Sorted-key, whitespace-free JSON of the normalized config."""
    return json.dumps(_normalize(data), sort_keys=True, separators=(",", ":"))


def config_hash(data: dict) -> str:
    return hashlib.sha256(canonical_text(data).encode()).hexdigest()[:16]


def parse_config(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
