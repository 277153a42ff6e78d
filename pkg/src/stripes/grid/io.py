"""Grid serialisation.

Binary layout (all integers little-endian):

    bytes 0-3   magic b"SGRD"
    bytes 4-7   uint32 header length H
    next H      UTF-8 JSON header {"d", "n", "L", "tau", "p", "version"}
    rest        occupancy bits, row-major (C order), packed MSB first,
                zero-padded to a whole byte

The JSON debug form is the header object with an extra "bits" string of
'0'/'1' characters in the same order.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..kernel import make_params
from .core import GridSet

MAGIC = b"SGRD"
VERSION = 1


def _header(grid: GridSet, tau: float, p: float) -> dict:
    return {"d": grid.d, "n": grid.n, "L": grid.L, "tau": tau, "p": p, "version": VERSION}


def grid_to_bytes(grid: GridSet, tau: float, p: float) -> bytes:
    head = json.dumps(_header(grid, tau, p), sort_keys=True).encode()
    bits = np.packbits(grid.occupancy.ravel(), bitorder="big").tobytes()
    return MAGIC + struct.pack("<I", len(head)) + head + bits


def grid_from_bytes(data: bytes):
    """Returns (grid, params)."""
    if data[:4] != MAGIC:
        raise ValueError("not a grid file (bad magic)")
    (h,) = struct.unpack("<I", data[4:8])
    head = json.loads(data[8:8 + h].decode())
    if head.get("version") != VERSION:
        raise ValueError(f"unsupported grid format version {head.get('version')}")
    d, n = int(head["d"]), int(head["n"])
    raw = np.frombuffer(data[8 + h:], dtype=np.uint8)
    size = n**d
    if raw.size != (size + 7) // 8:
        raise ValueError("truncated or oversized bit array")
    occ = np.unpackbits(raw, bitorder="big")[:size].reshape((n,) * d)
    grid = GridSet(d, n, float(head["L"]), occ)
    return grid, make_params(d, float(head["p"]), float(head["tau"]))


def grid_to_json(grid: GridSet, tau: float, p: float) -> str:
    obj = _header(grid, tau, p)
    obj["bits"] = "".join(map(str, grid.occupancy.ravel().tolist()))
    return json.dumps(obj, sort_keys=True)


def grid_from_json(text: str):
    obj = json.loads(text)
    d, n = int(obj["d"]), int(obj["n"])
    bits = obj["bits"]
    if len(bits) != n**d or set(bits) - {"0", "1"}:
        raise ValueError("bit string does not match the grid size")
    occ = (np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")).reshape((n,) * d)
    return GridSet(d, n, float(obj["L"]), occ), make_params(d, float(obj["p"]), float(obj["tau"]))


def save_grid(path, grid: GridSet, tau: float, p: float) -> None:
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            fh.write(grid_to_json(grid, tau, p))
    else:
        with open(path, "wb") as fh:
            fh.write(grid_to_bytes(grid, tau, p))


def load_grid(path):
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            return grid_from_json(fh.read())
    with open(path, "rb") as fh:
        return grid_from_bytes(fh.read())
