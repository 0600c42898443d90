"""Run configuration files (INI syntax) mapped onto :class:`TrainConfig`."""

from __future__ import annotations

import configparser
import dataclasses
import io
from pathlib import Path

from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _coerce(name: str, raw: str):
    default = getattr(TrainConfig(), name)
    raw = raw.strip()
    try:
        if name == "seeds":
            return tuple(int(s) for s in raw.replace(",", " ").split())
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float) or default is None:
            if default is None and raw.lower() in ("", "none", "default"):
                return None
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config(text: str, source: str = "<config>", **overrides) -> TrainConfig:
    """Every section is read; keys must be :class:`TrainConfig` field names."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if key not in _FIELDS:
                raise ConfigError(f"{source}: [{section}] unknown key {key!r}")
            values[key] = _coerce(key, raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return TrainConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: str | Path | None, **overrides) -> TrainConfig:
    if path is None:
        return parse_config("", **overrides)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text("utf-8"), str(path), **overrides)


def dump_config(config: TrainConfig) -> str:
    cp = configparser.ConfigParser()
    cp["run"] = {}
    for f in dataclasses.fields(config):
        v = getattr(config, f.name)
        if f.name == "seeds":
            v = " ".join(map(str, v))
        cp["run"][f.name] = "none" if v is None else str(v)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
