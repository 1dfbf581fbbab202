"""Discrete critical cells of a grid function on the torus.

Cells are added from the top value down (ties by flat index) to the cubical
complex of the superlevel set. The Euler characteristic changes by
``1 - (#earlier edge neighbors) + (#completed 2x2 blocks)``; a maximum adds an
isolated vertex, a minimum closes the last hole, and every negative change
counts that many saddles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DISTINCT_TOL = 1e-12


@dataclass(frozen=True)
class MorseReport:
    n_max: int
    n_min: int
    n_saddle: int
    euler: int
    distinct_critical_values: bool
    min_critical_gap: float
    degenerate: bool


def _rank_field(values: np.ndarray) -> np.ndarray:
    order = np.argsort(-values.ravel(), kind="stable")
    rank = np.empty(order.size, dtype=np.int64)
    rank[order] = np.arange(order.size)
    return rank.reshape(values.shape)


def euler_increments(values: np.ndarray) -> np.ndarray:
    r = _rank_field(values)
    upper = lambda di, dj: np.roll(r, (-di, -dj), axis=(0, 1)) < r
    edge = {s: upper(*s) for s in ((1, 0), (-1, 0), (0, 1), (0, -1))}
    blocks = np.zeros(r.shape, dtype=np.int64)
    for si in (1, -1):
        for sj in (1, -1):
            blocks += edge[(si, 0)] & edge[(0, sj)] & upper(si, sj)
    return 1 - sum(e.astype(np.int64) for e in edge.values()) + blocks


def morse_report(f) -> MorseReport:
    values = f.shifted_values
    if values.ndim != 2:
        raise ValueError("Morse diagnostics are implemented for two-dimensional grids")
    dchi = euler_increments(values)
    n_max = int(np.sum((dchi == 1) & _no_upper_neighbor(values)))
    n_min = int(np.sum(dchi == 1)) - n_max
    n_saddle = int(np.sum(np.maximum(0, -dchi)))
    crit = np.sort(values[dchi != 0])
    gap = float(np.min(np.diff(crit))) if crit.size > 1 else float("inf")
    ties = any(np.any(np.roll(values, s, axis=(0, 1)) == values)
               for s in ((1, 0), (0, 1), (1, 1), (1, -1)))
    return MorseReport(n_max, n_min, n_saddle, n_min - n_saddle + n_max,
                       gap > DISTINCT_TOL, gap, bool(ties))


def _no_upper_neighbor(values: np.ndarray) -> np.ndarray:
    r = _rank_field(values)
    out = np.ones(r.shape, dtype=bool)
    for s in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        out &= np.roll(r, s, axis=(0, 1)) > r
    return out
