"""Run reports and their CSV / JSON serialisation.

Floats are written with 17 significant digits so that every value
round-trips exactly. NaN or infinite values abort the write.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np


class NonFiniteError(ValueError):
    pass


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)


@dataclass
class RunReport:
    command: str
    config: dict
    config_hash: str
    version: str
    wall_time: float = 0.0
    tables: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    falsifications: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def add_table(self, name: str, columns, rows=()) -> Table:
        t = Table(name, list(columns), [tuple(r) for r in rows])
        self.tables.append(t)
        return t


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        raise NonFiniteError(f"non-finite value {x!r} in output")
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "n" not in s:
        s += ".0"
    return s


def _csv_cell(v) -> str:
    if isinstance(v, (int, float, np.integer, np.floating, bool, np.bool_)):
        return format_number(v)
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _json(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return format_number(obj)
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_json(str(k))}: {_json(obj[k], indent + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(obj) -> str:
    return _json(obj) + "\n"


def table_csv(table: Table, config_hash: str) -> str:
    lines = [f"# config_hash={config_hash}", ",".join(table.columns)]
    for row in table.rows:
        if len(row) != len(table.columns):
            raise ValueError(f"row width {len(row)} does not match {len(table.columns)} columns in {table.name}")
        lines.append(",".join(_csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def report_dict(report: RunReport) -> dict:
    return {
        "command": report.command,
        "config": report.config,
        "config_hash": report.config_hash,
        "version": report.version,
        "wall_time": report.wall_time,
        "summary": report.summary,
        "falsifications": report.falsifications,
        "outputs": report.outputs,
    }


def write_report(report: RunReport, prefix) -> list:
    """Write ``<prefix>_<table>.csv`` per table and ``<prefix>.json``.

    Everything is serialised before any file is opened, so a non-finite value
    leaves no partial output behind.
    """
    prefix = str(prefix)
    files = {}
    for t in report.tables:
        files[f"{prefix}_{t.name}.csv"] = table_csv(t, report.config_hash)
    report.outputs = sorted(set(report.outputs) | set(files) | {prefix + ".json"})
    files[prefix + ".json"] = to_json(report_dict(report))
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    for path, text in files.items():
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return list(files)
