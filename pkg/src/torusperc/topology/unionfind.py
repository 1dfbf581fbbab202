"""Union-find that tracks how far each node has travelled around the torus.

``off[x]`` is the lift of ``x`` minus the lift of its root, measured in
fundamental domains. Joining two nodes of one component closes a cycle whose
homology class is ``off[u] + wrap - off[v]``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numba import njit


@njit(cache=True)
def uf_find(parent, off, stack, x):
    top = 0
    y = x
    while parent[y] != y:
        stack[top] = y
        top += 1
        y = parent[y]
    root = y
    # the node nearest the root already points at it; fold offsets downwards
    for k in range(top - 2, -1, -1):
        p = stack[k]
        q = parent[p]
        for c in range(off.shape[1]):
            off[p, c] += off[q, c]
        parent[p] = root
    return root


@njit(cache=True)
def uf_link(parent, rank, off, stack, u, v, w, out):
    """Join ``u`` to ``v`` across an edge with winding ``w``.

    Returns True on a merge. Otherwise the edge closes a cycle and its class
    is written to ``out``.
    """
    ru = uf_find(parent, off, stack, u)
    rv = uf_find(parent, off, stack, v)
    d = off.shape[1]
    if ru == rv:
        for c in range(d):
            out[c] = off[u, c] + w[c] - off[v, c]
        return False
    if rank[ru] < rank[rv]:
        parent[ru] = rv
        for c in range(d):
            off[ru, c] = off[v, c] - w[c] - off[u, c]
    else:
        parent[rv] = ru
        for c in range(d):
            off[rv, c] = off[u, c] + w[c] - off[v, c]
        if rank[ru] == rank[rv]:
            rank[ru] += 1
    return True


class UnionOutcome(NamedTuple):
    merged: bool
    cycle_class: tuple | None


class PeriodicUnionFind:
    """Stateful wrapper over the compiled helpers, for any dimension ``d``."""

    def __init__(self, n_nodes: int, d: int = 2):
        self.parent = np.arange(n_nodes, dtype=np.int64)
        self.rank = np.zeros(n_nodes, dtype=np.int64)
        self.offset = np.zeros((n_nodes, d), dtype=np.int64)
        self._stack = np.empty(n_nodes, dtype=np.int64)
        self._out = np.zeros(d, dtype=np.int64)
        self.wrap_found = None

    def find(self, x: int) -> int:
        return int(uf_find(self.parent, self.offset, self._stack, x))

    def relative_offset(self, x: int) -> tuple:
        """Offset of ``x`` relative to its root."""
        self.find(x)
        return tuple(int(c) for c in self.offset[x])

    def union(self, u: int, v: int, wrap) -> UnionOutcome:
        w = np.asarray(wrap, dtype=np.int64)
        if uf_link(self.parent, self.rank, self.offset, self._stack, u, v, w, self._out):
            return UnionOutcome(True, None)
        cls = tuple(int(c) for c in self._out)
        if any(cls) and self.wrap_found is None:
            self.wrap_found = cls
        return UnionOutcome(False, cls)


def uf_union(uf: PeriodicUnionFind, u: int, v: int, wrap) -> UnionOutcome:
    return uf.union(u, v, wrap)


# ------------------------------------------------------------- torus sweeps

NEIGHBORS_4 = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)
NEIGHBORS_8 = np.array([[1, 0], [-1, 0], [0, 1], [0, -1],
                        [1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=np.int64)


def neighbor_offsets(connectivity: int) -> np.ndarray:
    if connectivity == 4:
        return NEIGHBORS_4
    if connectivity == 8:
        return NEIGHBORS_8
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


@njit(cache=True)
def sweep_torus(order, count, n, nbrs, axis, collect):
    """Insert ``order[:count]`` into an ``n x n`` torus one cell at a time.

    Without ``collect``, stop at the first cycle whose class has a nonzero
    ``axis`` coordinate (any nonzero class when ``axis < 0``) and return its
    step. With ``collect``, insert everything and return all nonzero classes.
    """
    size = n * n
    present = np.zeros(size, dtype=np.bool_)
    parent = np.arange(size)
    rank = np.zeros(size, dtype=np.int64)
    off = np.zeros((size, 2), dtype=np.int64)
    stack = np.empty(size, dtype=np.int64)
    w = np.zeros(2, dtype=np.int64)
    cls = np.zeros(2, dtype=np.int64)
    found = np.zeros((0, 2), dtype=np.int64)
    if collect:
        found = np.zeros((count * nbrs.shape[0], 2), dtype=np.int64)
    n_found = 0
    for step in range(count):
        c = order[step]
        present[c] = True
        i = c // n
        j = c - i * n
        for e in range(nbrs.shape[0]):
            ii = i + nbrs[e, 0]
            jj = j + nbrs[e, 1]
            w[0] = 0
            w[1] = 0
            if ii < 0:
                ii += n
                w[0] = -1
            elif ii >= n:
                ii -= n
                w[0] = 1
            if jj < 0:
                jj += n
                w[1] = -1
            elif jj >= n:
                jj -= n
                w[1] = 1
            nb = ii * n + jj
            if not present[nb]:
                continue
            if uf_link(parent, rank, off, stack, c, nb, w, cls):
                continue
            if cls[0] == 0 and cls[1] == 0:
                continue
            if collect:
                found[n_found, 0] = cls[0]
                found[n_found, 1] = cls[1]
                n_found += 1
            elif axis < 0 or cls[axis] != 0:
                found = np.zeros((1, 2), dtype=np.int64)
                found[0, 0] = cls[0]
                found[0, 1] = cls[1]
                return step, found
    return -1, found[:n_found]


CONNECT = 0
WIND = 1


@njit(cache=True)
def sweep_graph(order, count, indptr, indices, weights, n_nodes, term_a, term_b, mode):
    """Insert nodes of a site graph in ``order``; return the step that realizes the goal, or -1.

    ``CONNECT`` waits until the always-present terminals share a component;
    ``WIND`` waits for a cycle with nonzero total edge weight.
    """
    present = np.zeros(n_nodes, dtype=np.bool_)
    parent = np.arange(n_nodes)
    rank = np.zeros(n_nodes, dtype=np.int64)
    off = np.zeros((n_nodes, 1), dtype=np.int64)
    stack = np.empty(n_nodes, dtype=np.int64)
    w = np.zeros(1, dtype=np.int64)
    cls = np.zeros(1, dtype=np.int64)
    if term_a >= 0:
        present[term_a] = True
        present[term_b] = True
    for step in range(count):
        c = order[step]
        present[c] = True
        for e in range(indptr[c], indptr[c + 1]):
            nb = indices[e]
            if not present[nb]:
                continue
            w[0] = weights[e]
            merged = uf_link(parent, rank, off, stack, c, nb, w, cls)
            if mode == CONNECT:
                if merged and uf_find(parent, off, stack, term_a) == uf_find(parent, off, stack, term_b):
                    return step
            elif not merged and cls[0] != 0:
                return step
    return -1
