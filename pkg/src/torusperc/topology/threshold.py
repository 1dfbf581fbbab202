"""Threshold map ``T_A`` and saddle proxy by a descending level sweep."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np

from .events import EventSpec, first_trigger, first_trigger_graph, site_graph
from .unionfind import PeriodicUnionFind


class NotIncreasing(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdResult:
    """``t_value`` is the infimum of levels at which ``{f + level > 0}`` realizes the event.

    ``saddle_cell`` is the ``(i, j)`` cell whose insertion triggered it.
    ``realizing_class`` is the homology class for loops, the winding number
    for circuits and empty for crossings.
    """
    t_value: float
    saddle_cell: tuple | None
    realizing_class: tuple
    trigger_step: int
    sweep_order_digest: str

    @property
    def merge_level(self) -> float:
        return -self.t_value

    @property
    def realized(self) -> bool:
        return math.isfinite(self.t_value)


def _digest(order: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(order, dtype=np.int64).tobytes()).hexdigest()[:16]


def threshold_sweep(f, e: EventSpec, connectivity: int = 4) -> ThresholdResult:
    if not e.increasing:
        raise NotIncreasing("thresholds are defined for increasing events only")
    values = f.shifted_values
    n = values.shape[0]
    if e.kind == "loop":
        step, cell, cls, order = first_trigger(values, e, connectivity)
    else:
        g = site_graph(e, f.grid, connectivity)
        step, cell, order = first_trigger_graph(values, g)
        cls = ()
    if step < 0:
        return ThresholdResult(math.inf, None, (), -1, _digest(order))
    if e.kind == "circuit":
        cls = _circuit_winding(values, e, f.grid, connectivity, step)
    t = -float(values.flat[cell])
    return ThresholdResult(t, divmod(cell, n), tuple(cls), step, _digest(order))


def _circuit_winding(values, e, grid, connectivity, step) -> tuple:
    # rerun the sweep up to the trigger and read off the closing class
    g = site_graph(e, grid, connectivity)
    local = np.argsort(-values.ravel()[g.cells], kind="stable")
    uf = PeriodicUnionFind(g.n_nodes, 1)
    present = np.zeros(g.n_nodes, dtype=bool)
    for c in local[:step + 1]:
        present[c] = True
        for k in range(g.indptr[c], g.indptr[c + 1]):
            nb = g.indices[k]
            if present[nb]:
                out = uf.union(c, nb, (g.weights[k],))
                if not out.merged and out.cycle_class[0] != 0:
                    return out.cycle_class
    return ()


@dataclass(frozen=True)
class DerivativeRow:
    t: float
    quotient: float
    predicted: float

    @property
    def error(self) -> float:
        return abs(self.quotient - self.predicted)


def saddle_derivative_check(f, e: EventSpec, v: np.ndarray, t_list, connectivity: int = 4) -> list[DerivativeRow]:
    """Difference quotients of the merge level along ``v`` against ``v`` at the saddle.

    The quotient is ``(T(f) - T(f + t v)) / t``, the rate at which the merge
    level ``-T`` moves. It tends to ``v(saddle)``; for ``v = 1`` it is one.
    """
    v = np.asarray(v, dtype=float)
    base = threshold_sweep(f, e, connectivity)
    if not base.realized:
        raise ValueError("event is never realized; no saddle to probe")
    predicted = float(v[base.saddle_cell])
    rows = []
    for t in t_list:
        moved = threshold_sweep(replace(f, values=f.values + t * v), e, connectivity)
        rows.append(DerivativeRow(float(t), (base.t_value - moved.t_value) / t, predicted))
    return rows
