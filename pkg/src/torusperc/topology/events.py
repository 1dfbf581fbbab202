"""Admissible events and the site graphs used to detect them.

Cells are sites. A loop lives on the whole torus; crossings and circuits live
on a small graph of the cells inside a rectangle or annulus, built once per
geometry and reused for every sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..grid import TorusGrid
from .unionfind import CONNECT, WIND, neighbor_offsets, sweep_graph, sweep_torus

KINDS = ("loop", "cross", "cross_dagger", "circuit")

# rectangle sides in units of R: (along the crossing, across it)
RECT_SHAPE = {"cross": (6.0, 4.0), "cross_dagger": (3.0, 4.0)}

_SNAP = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class EventSpec:
    """An increasing event of the excursion set ``{f + level > 0}``.

    * ``loop``: a cycle whose homology coordinate ``direction`` (1 or 2) is
      nonzero; ``direction = 0`` accepts any non-contractible cycle.
    * ``cross`` / ``cross_dagger``: a path joining the two short sides of a
      ``6R x 4R`` / ``3R x 4R`` rectangle with lower corner ``origin``. Even
      ``rotation`` crosses along the first axis, odd along the second.
      ``start_span`` / ``end_span`` restrict the terminals to an interval of the
      transverse coordinate, measured from the rectangle's corner.
    * ``circuit``: a cycle inside the annulus ``r1 <= |x - center| <= r2``
      that winds around the center.

    ``complement`` marks the decreasing negation of the event; it can be
    evaluated but has no threshold.
    """

    kind: str
    R: float = 1.0
    origin: tuple = (0.0, 0.0)
    rotation: int = 0
    direction: int = 1
    center: tuple = (0.0, 0.0)
    r1: float = 0.0
    r2: float = 0.0
    start_span: tuple | None = None
    end_span: tuple | None = None
    complement: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeometryError(f"unknown event kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "loop" and self.direction not in (0, 1, 2):
            raise GeometryError("loop direction must be 0, 1 or 2")
        if self.kind in RECT_SHAPE and not self.R > 0:
            raise GeometryError("rectangle scale R must be positive")
        if self.kind == "circuit" and not 0 < self.r1 < self.r2:
            raise GeometryError(f"annulus needs 0 < r1 < r2, got r1={self.r1}, r2={self.r2}")

    @classmethod
    def loop(cls, direction: int = 1) -> "EventSpec":
        return cls("loop", direction=direction)

    @classmethod
    def cross(cls, R, origin=(0.0, 0.0), rotation=0, **kw) -> "EventSpec":
        return cls("cross", R=float(R), origin=tuple(map(float, origin)), rotation=int(rotation), **kw)

    @classmethod
    def cross_dagger(cls, R, origin=(0.0, 0.0), rotation=0, **kw) -> "EventSpec":
        return cls("cross_dagger", R=float(R), origin=tuple(map(float, origin)), rotation=int(rotation), **kw)

    @classmethod
    def circuit(cls, center, r1, r2) -> "EventSpec":
        return cls("circuit", center=tuple(map(float, center)), r1=float(r1), r2=float(r2))

    @property
    def increasing(self) -> bool:
        return not self.complement

    def negated(self) -> "EventSpec":
        from dataclasses import replace
        return replace(self, complement=not self.complement)


@dataclass(frozen=True, eq=False)
class SiteGraph:
    """Cells of a region (ascending flat index) with CSR adjacency and terminals."""
    cells: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    n_nodes: int
    term_a: int
    term_b: int
    mode: int


def _cell_range(start: float, length: float, h: float, n: int) -> tuple[int, int]:
    # snap outward to whole cells
    lo = math.floor(start / h + _SNAP)
    hi = math.ceil((start + length) / h - _SNAP)
    if hi - lo > n:
        raise GeometryError(f"extent {length} needs {hi - lo} cells but the torus has {n}")
    return lo, hi - lo


def _span_cells(span, h: float, count: int) -> tuple[int, int]:
    if span is None:
        return 0, count
    lo = math.floor(span[0] / h + _SNAP)
    hi = math.ceil(span[1] / h - _SNAP)
    if lo < 0 or hi > count or hi <= lo:
        raise GeometryError(f"terminal span {span} does not fit the rectangle side")
    return lo, hi


def _csr(n_nodes: int, src, dst, wts) -> tuple:
    src, dst, wts = (np.asarray(a, dtype=np.int64) for a in (src, dst, wts))
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    return np.cumsum(indptr), dst[order], wts[order]


def rectangle_cells(e: EventSpec, grid: TorusGrid):
    """Local ``(along, across)`` cell grid of a rectangle as global ``(i, j)`` arrays."""
    h, n = grid.spacing, grid.n
    along, across = RECT_SHAPE[e.kind]
    odd = e.rotation % 2 == 1
    ext0, ext1 = (across, along) if odd else (along, across)
    lo0, c0 = _cell_range(e.origin[0], ext0 * e.R, h, n)
    lo1, c1 = _cell_range(e.origin[1], ext1 * e.R, h, n)
    a0, a1 = np.meshgrid(np.arange(c0), np.arange(c1), indexing="ij")
    gi, gj = (lo0 + a0) % n, (lo1 + a1) % n
    if odd:
        # put the crossing direction on the first local axis
        return gi.T, gj.T
    return gi, gj


@lru_cache(maxsize=1024)
def rectangle_graph(e: EventSpec, grid: TorusGrid, connectivity: int) -> SiteGraph:
    gi, gj = rectangle_cells(e, grid)
    ca, cb = gi.shape
    flat = (gi * grid.n + gj).ravel()
    cells = np.sort(flat)
    local = np.empty(grid.size, dtype=np.int64)
    local[cells] = np.arange(cells.size)
    node = local[flat].reshape(ca, cb)
    m = cells.size
    term_a, term_b = m, m + 1
    src, dst = [], []
    for da, db in neighbor_offsets(connectivity):
        a0, a1 = max(0, -da), min(ca, ca - da)
        b0, b1 = max(0, -db), min(cb, cb - db)
        src.append(node[a0:a1, b0:b1].ravel())
        dst.append(node[a0 + da:a1 + da, b0 + db:b1 + db].ravel())
    h = grid.spacing
    s0, s1 = _span_cells(e.start_span, h, cb)
    t0, t1 = _span_cells(e.end_span, h, cb)
    src += [node[0, s0:s1], node[ca - 1, t0:t1]]
    dst += [np.full(s1 - s0, term_a), np.full(t1 - t0, term_b)]
    src, dst = np.concatenate(src), np.concatenate(dst)
    indptr, indices, weights = _csr(m + 2, src, dst, np.zeros(src.size))
    return SiteGraph(cells, indptr, indices, weights, m + 2, term_a, term_b, CONNECT)


def annulus_cells(e: EventSpec, grid: TorusGrid):
    """Cells whose centers lie in the annulus, with their displacement from the center."""
    h, n, side = grid.spacing, grid.n, grid.side
    if e.r1 < h:
        raise GeometryError(f"inner radius {e.r1} is below one cell ({h})")
    if e.r2 >= side / 2:
        raise GeometryError(f"outer radius {e.r2} must be below half the torus side {side / 2}")
    centers = (np.arange(n) + 0.5) * h
    dx = (centers - e.center[0] + side / 2) % side - side / 2
    dy = (centers - e.center[1] + side / 2) % side - side / 2
    X, Y = np.meshgrid(dx, dy, indexing="ij")
    r = np.hypot(X, Y)
    inside = (r >= e.r1) & (r <= e.r2)
    return inside, X, Y


def ray_wraps(x0, y0, x1, y1) -> np.ndarray:
    """Sheet change of the angle along the short segment between two points.

    The angle lives in ``(-pi, pi]`` with its cut on the negative x-axis; the
    result is ``round((theta0 + dtheta - theta1) / 2pi)``.
    """
    th0, th1 = np.arctan2(y0, x0), np.arctan2(y1, x1)
    dth = np.arctan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1)
    return np.rint((th0 + dth - th1) / (2 * np.pi)).astype(np.int64)


@lru_cache(maxsize=1024)
def annulus_graph(e: EventSpec, grid: TorusGrid, connectivity: int) -> SiteGraph:
    n = grid.n
    inside, X, Y = annulus_cells(e, grid)
    cells = np.flatnonzero(inside.ravel())
    local = np.full(grid.size, -1, dtype=np.int64)
    local[cells] = np.arange(cells.size)
    ci, cj = np.divmod(cells, n)
    h = grid.spacing
    src, dst, wts = [], [], []
    for di, dj in neighbor_offsets(connectivity):
        ni, nj = (ci + di) % n, (cj + dj) % n
        nb = local[ni * n + nj]
        ok = nb >= 0
        x0, y0 = X[ci[ok], cj[ok]], Y[ci[ok], cj[ok]]
        src.append(np.arange(cells.size)[ok])
        dst.append(nb[ok])
        wts.append(ray_wraps(x0, y0, x0 + di * h, y0 + dj * h))
    src, dst, wts = np.concatenate(src), np.concatenate(dst), np.concatenate(wts)
    indptr, indices, weights = _csr(cells.size, src, dst, wts)
    return SiteGraph(cells, indptr, indices, weights, cells.size, -1, -1, WIND)


def site_graph(e: EventSpec, grid: TorusGrid, connectivity: int = 4) -> SiteGraph:
    if grid.d != 2:
        raise GeometryError("events are defined on square two-dimensional grids")
    if e.kind in RECT_SHAPE:
        return rectangle_graph(e, grid, connectivity)
    if e.kind == "circuit":
        return annulus_graph(e, grid, connectivity)
    raise GeometryError("loop events use the whole torus, not a site graph")


def descending_order(values: np.ndarray) -> np.ndarray:
    """Cells by decreasing value; equal values keep ascending flat index."""
    return np.argsort(-values.ravel(), kind="stable")


def _loop_axis(e: EventSpec) -> int:
    return e.direction - 1


def require_square(values: np.ndarray) -> None:
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise GeometryError("events are defined on square two-dimensional grids")


def first_trigger(values: np.ndarray, e: EventSpec, connectivity: int = 4, count: int | None = None):
    """Step at which the descending insertion realizes ``e``, the triggering flat cell, and the class.

    Only the first ``count`` cells of the order are inserted when given.
    Returns ``(step, cell, cls, order)`` with ``step = -1`` if never realized.
    """
    require_square(values)
    n = values.shape[0]
    nbrs = neighbor_offsets(connectivity)
    if e.kind == "loop":
        order = descending_order(values)
        count = order.size if count is None else count
        step, cls = sweep_torus(order, count, n, nbrs, _loop_axis(e), False)
        if step < 0:
            return -1, -1, None, order
        return int(step), int(order[step]), (int(cls[0, 0]), int(cls[0, 1])), order
    raise GeometryError("site-graph events need a grid; use first_trigger_graph")


def first_trigger_graph(values: np.ndarray, g: SiteGraph, count: int | None = None):
    sub = values.ravel()[g.cells]
    # g.cells is ascending, so a stable sort keeps the global tie order
    local = np.argsort(-sub, kind="stable")
    count = local.size if count is None else count
    step = sweep_graph(local, count, g.indptr, g.indices, g.weights, g.n_nodes, g.term_a, g.term_b, g.mode)
    if step < 0:
        return -1, -1, local
    return int(step), int(g.cells[local[step]]), local


def evaluate_event(f, level: float, e: EventSpec, connectivity: int = 4) -> bool:
    """Whether ``{f + level > 0}`` realizes ``e`` (its negation when ``e.complement``)."""
    values = f.shifted_values + level if level != 0 else f.shifted_values
    holds = _realized(values, e, f.grid, connectivity)
    return holds != e.complement


def _realized(values: np.ndarray, e: EventSpec, grid: TorusGrid, connectivity: int) -> bool:
    require_square(values)
    if e.kind == "loop":
        open_cells = np.flatnonzero(values.ravel() > 0)
        step, _ = sweep_torus(open_cells, open_cells.size, grid.n, neighbor_offsets(connectivity),
                              _loop_axis(e), False)
        return step >= 0
    g = site_graph(e, grid, connectivity)
    open_local = np.flatnonzero(values.ravel()[g.cells] > 0)
    step = sweep_graph(open_local, open_local.size, g.indptr, g.indices, g.weights,
                       g.n_nodes, g.term_a, g.term_b, g.mode)
    return step >= 0


def loop_classes(mask: np.ndarray, connectivity: int) -> np.ndarray:
    """Distinct nonzero homology classes of cycles in the cell set ``mask``."""
    require_square(mask)
    cells = np.flatnonzero(mask.ravel())
    _, found = sweep_torus(cells, cells.size, mask.shape[0], neighbor_offsets(connectivity), -1, True)
    if found.shape[0] == 0:
        return found
    # a class and its negative describe the same cycle set
    canon = np.where((found[:, :1] < 0) | ((found[:, :1] == 0) & (found[:, 1:] < 0)), -found, found)
    return np.unique(canon, axis=0)
