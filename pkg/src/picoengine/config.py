"""Configuration files and setting resolution.

Config files are either JSON objects or flat ``key=value`` lines (with
``#`` comments). Precedence when resolving one setting: explicit flag,
then environment variable, then config file, then built-in default.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import DataError

ENV_HOST = "PICOENGINE_HOST"
ENV_PORT = "PICOENGINE_PORT"

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8080


def _coerce(raw: str):
    text = raw.strip()
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config_file(path: str | Path) -> dict:
    """Parse a JSON-object or key=value config file into a flat dict."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON config: {exc}") from exc
        if not isinstance(data, dict):
            raise DataError(f"{path}: JSON config must be an object")
        return data
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {lineno}: expected key=value")
        key, _, raw = line.partition("=")
        values[key.strip()] = _coerce(raw)
    return values


def resolve(
    flag_value,
    config: dict,
    key: str,
    default,
    env_name: str | None = None,
):
    """Apply the flag > environment > config file > default precedence."""
    if flag_value is not None:
        return flag_value
    if env_name is not None:
        env_value = os.environ.get(env_name)
        if env_value is not None:
            return _coerce(env_value)
    if key in config:
        return config[key]
    return default
