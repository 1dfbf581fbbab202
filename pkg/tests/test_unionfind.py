import itertools

import numpy as np
from hypothesis import given, strategies as st

from oracles import lattice_hnf
from torusperc.topology import PeriodicUnionFind, uf_union
from torusperc.topology.unionfind import sweep_torus, NEIGHBORS_4


def test_two_cells_joined_twice_wind():
    # 1 x 2 torus: cells 0 and 1 touch directly and across the seam
    uf = PeriodicUnionFind(2)
    assert uf_union(uf, 0, 1, (0, 0)).merged
    out = uf_union(uf, 1, 0, (0, 1))
    assert not out.merged
    assert out.cycle_class in {(0, 1), (0, -1)}


def test_contractible_cycle_has_zero_class():
    uf = PeriodicUnionFind(4)
    # square 0-1-3-2 inside one fundamental domain
    for u, v in ((0, 1), (1, 3), (3, 2)):
        assert uf.union(u, v, (0, 0)).merged
    out = uf.union(2, 0, (0, 0))
    assert out == (False, (0, 0))
    assert uf.wrap_found is None


def test_path_across_the_seam_then_closing_is_contractible():
    uf = PeriodicUnionFind(3)
    uf.union(0, 1, (1, 0))
    uf.union(1, 2, (0, 1))
    # closing edge undoes both wraps
    assert uf.union(2, 0, (-1, -1)).cycle_class == (0, 0)


def _torus_edges(n):
    edges = []
    for i, j in itertools.product(range(n), repeat=2):
        u = i * n + j
        edges.append((u, ((i + 1) % n) * n + j, (1 if i + 1 == n else 0, 0)))
        edges.append((u, i * n + (j + 1) % n, (0, 1 if j + 1 == n else 0)))
    return edges


def _brute_classes(n_nodes, edges):
    """Cycle space image by spanning forest + chords, from scratch."""
    adj = {u: [] for u in range(n_nodes)}
    for u, v, w in edges:
        adj[u].append((v, w))
        adj[v].append((u, tuple(-x for x in w)))
    lift, chords = {}, []
    for s in range(n_nodes):
        if s in lift:
            continue
        lift[s] = (0, 0)
        stack = [s]
        while stack:
            u = stack.pop()
            for v, w in adj[u]:
                new = (lift[u][0] + w[0], lift[u][1] + w[1])
                if v not in lift:
                    lift[v] = new
                    stack.append(v)
                else:
                    chords.append((new[0] - lift[v][0], new[1] - lift[v][1]))
    return lattice_hnf(chords)


@given(st.lists(st.integers(0, 31), min_size=1, max_size=32, unique=True), st.randoms())
def test_random_unions_match_cycle_basis(picks, rnd):
    n = 4
    edges = [_torus_edges(n)[k] for k in picks]
    rnd.shuffle(edges)
    uf = PeriodicUnionFind(n * n)
    reported = []
    for u, v, w in edges:
        out = uf.union(u, v, w)
        if not out.merged:
            reported.append(out.cycle_class)
    assert lattice_hnf(reported) == _brute_classes(n * n, edges)


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7), st.integers(-1, 1), st.integers(-1, 1)),
                max_size=40))
def test_offsets_consistent_after_compression(ops):
    # the offset of x relative to its root agrees with a path sum through any union
    uf = PeriodicUnionFind(8)
    pos = {x: {x: (0, 0)} for x in range(8)}  # component -> lifts relative to a member
    comp = list(range(8))
    for u, v, a, b in ops:
        out = uf.union(u, v, (a, b))
        if out.merged:
            cu, cv = comp[u], comp[v]
            lu, lv = pos[cu][u], pos[cv][v]
            shift = (lu[0] + a - lv[0], lu[1] + b - lv[1])
            for x, l in pos.pop(cv).items():
                pos[cu][x] = (l[0] + shift[0], l[1] + shift[1])
                comp[x] = cu
        else:
            lu, lv = pos[comp[u]][u], pos[comp[v]][v]
            assert out.cycle_class == (lu[0] + a - lv[0], lu[1] + b - lv[1])
    for x in range(8):
        for y in range(8):
            if comp[x] == comp[y]:
                assert uf.find(x) == uf.find(y)
                ox, oy = uf.relative_offset(x), uf.relative_offset(y)
                lx, ly = pos[comp[x]][x], pos[comp[y]][y]
                assert (ox[0] - oy[0], ox[1] - oy[1]) == (lx[0] - ly[0], lx[1] - ly[1])


@given(st.integers(0, 2 ** 32 - 1))
def test_collected_classes_independent_of_insertion_order(seed):
    rng = np.random.default_rng(seed)
    n = 6
    cells = np.flatnonzero(rng.random(n * n) < 0.6)
    a = sweep_torus(cells, cells.size, n, NEIGHBORS_4, -1, True)[1]
    b = sweep_torus(rng.permutation(cells), cells.size, n, NEIGHBORS_4, -1, True)[1]
    assert lattice_hnf(a.tolist()) == lattice_hnf(b.tolist())
