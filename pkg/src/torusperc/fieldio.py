"""Export and import of field samples.

Binary layout (little-endian)::

    magic   4 bytes   b"GFLD"
    version uint32    currently 1
    d       uint32
    n       uint32
    side    float64
    seed    uint64
    values  float64 * n**d, row-major (last axis fastest)

CSV layout: a ``# d=.. n=.. side=.. seed=..`` comment line, then one row of
``n`` comma-separated values per line for d = 2.
"""
from __future__ import annotations

import struct

import numpy as np

from .grid import TorusGrid
from .sampler import FieldSample

MAGIC = b"GFLD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdQ")
MAX_CSV_CELLS = 256 * 256


def write_binary(path, f: FieldSample) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, f.grid.d, f.grid.n, f.grid.side, int(f.seed)))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_binary(path) -> FieldSample:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, d, n, side, seed = _HEADER.unpack(head)
        if magic != MAGIC or version != VERSION:
            raise ValueError(f"{path}: not a version-{VERSION} field file")
        values = np.frombuffer(fh.read(), dtype="<f8")
    grid = TorusGrid(n, side, d)
    if values.size != grid.size:
        raise ValueError(f"{path}: expected {grid.size} values, found {values.size}")
    return FieldSample(grid, values.reshape(grid.shape).astype(float), "imported", seed)


def write_csv(path, f: FieldSample) -> None:
    if f.grid.d != 2 or f.grid.size > MAX_CSV_CELLS:
        raise ValueError("CSV export is for small two-dimensional grids")
    header = f"d={f.grid.d} n={f.grid.n} side={f.grid.side!r} seed={int(f.seed)}"
    np.savetxt(path, f.values, delimiter=",", fmt="%.17g", header=header)


def read_csv(path) -> FieldSample:
    with open(path) as fh:
        meta = dict(kv.split("=") for kv in fh.readline().lstrip("# ").split())
    values = np.loadtxt(path, delimiter=",", ndmin=2)
    grid = TorusGrid(int(meta["n"]), float(meta["side"]), int(meta["d"]))
    return FieldSample(grid, values, "imported", int(meta["seed"]))
