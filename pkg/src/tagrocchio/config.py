"""Flat ``key=value`` configuration files for training and optimization settings.

Keys are the field names of :class:`TrainConfig` and :class:`OptConfig`;
``seed`` applies to both. Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import dataclasses
from typing import Any, Mapping

from .embedding import TrainConfig
from .optimizer import OptConfig


class ConfigError(ValueError):
    pass


def _field_types(cls) -> dict[str, type]:
    hints = {"int": int, "float": float, "str": str}
    return {f.name: hints[f.type] if isinstance(f.type, str) else f.type for f in dataclasses.fields(cls)}


TRAIN_FIELDS = _field_types(TrainConfig)
OPT_FIELDS = _field_types(OptConfig)


def parse_config(text: str, source: str = "<config>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    known = {**TRAIN_FIELDS, **OPT_FIELDS}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = known[key](value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def load_config(path) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


def build_configs(overrides: Mapping[str, Any]) -> tuple[TrainConfig, OptConfig]:
    """TrainConfig and OptConfig from defaults updated with every non-None override."""
    given = {k: v for k, v in overrides.items() if v is not None}
    train = TrainConfig(**{k: v for k, v in given.items() if k in TRAIN_FIELDS})
    opt = OptConfig(**{k: v for k, v in given.items() if k in OPT_FIELDS})
    return train, opt
