"""Plain key=value run configuration.

Files hold one ``key=value`` per line; ``#`` starts a comment. Values given
on the command line override file values. Ranges are written
``start:stop:step`` with the stop included when it lies on the grid.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def hash(self) -> str:
        """Digest of the command and its settings; the output location is excluded."""
        values = {k: v for k, v in self.values.items() if k != "out"}
        blob = json.dumps({"command": self.command, "values": values}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_pairs(lines, source: str = "<args>", warn_duplicates: bool = True) -> dict:
    """Parse ``key=value`` strings; comments and blank lines are skipped."""
    out = {}
    for no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{no}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{no}: empty key")
        if key in out and warn_duplicates:
            log.warning("%s:%d: duplicate key %r, last value wins", source, no, key)
        out[key] = value
    return out


def load_config(path, command: str, overrides: dict | None = None) -> RunConfig:
    """Read a config file and merge command-line overrides on top."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values = parse_pairs(fh.read().splitlines(), str(path))
    values.update(overrides or {})
    return RunConfig(command, values)


def parse_range(text: str) -> list:
    """'a:b:s' -> [a, a+s, ..., b]; a single number -> [x]; 'x,y,z' -> list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range {text!r} must be start:stop:step")
        a, b, s = (float(x) for x in parts)
        if s <= 0 or b < a:
            raise ConfigError(f"range {text!r} needs step > 0 and stop >= start")
        count = int(np.floor((b - a) / s + 1e-9)) + 1
        return [float(round(a + k * s, 12)) for k in range(count)]
    if "," in text:
        return [float(x) for x in text.split(",") if x.strip()]
    return [float(text)]


_CASTS = {
    "int": int,
    "float": float,
    "str": str,
    "range": parse_range,
    "ints": lambda t: [int(x) for x in t.split(",") if x.strip()],
    "bool": lambda t: {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}[t.lower()],
}

REQUIRED = object()


def typed(cfg: RunConfig, schema: dict) -> dict:
    """Validate against {key: (type, default)}; unknown or missing keys are errors."""
    unknown = sorted(set(cfg.values) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s) for {cfg.command}: {', '.join(unknown)}")
    out = {}
    for key, (kind, default) in schema.items():
        if key in cfg.values:
            try:
                out[key] = _CASTS[kind](cfg.values[key])
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"bad value for {key}: {cfg.values[key]!r}") from exc
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r} for {cfg.command}")
        elif isinstance(default, str) and kind != "str":
            out[key] = _CASTS[kind](default)
        else:
            out[key] = default
    return out
