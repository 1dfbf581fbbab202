import numpy as np
import pytest
from hypothesis import given, strategies as st

from torusperc import rng
from torusperc.grid import TorusGrid


@given(n=st.integers(1, 64), side=st.floats(0.5, 500), d=st.integers(1, 3))
def test_cell_volume_tiles_the_torus(n, side, d):
    g = TorusGrid(n, side, d)
    assert g.cell_volume * g.size == pytest.approx(g.volume, rel=1e-12)
    assert g.eps == g.spacing == side / n


def test_displacements_are_minimal_images():
    g = TorusGrid(8, 4.0)
    x, y = g.displacements()
    assert x[:, 0].tolist() == [0, 0.5, 1, 1.5, -2, -1.5, -1, -0.5]
    assert np.all(np.abs(x) <= g.side / 2) and np.all(y == x.T)


@pytest.mark.parametrize("n, side", [(0, 1.0), (2.5, 1.0), (4, 0.0), (4, float("inf"))])
def test_invalid_grids_rejected(n, side):
    with pytest.raises(ValueError):
        TorusGrid(n, side)


def test_streams_are_deterministic_and_tagged():
    a = rng.normals(5, (4, 4))
    assert np.array_equal(a, rng.normals(5, (4, 4)))
    assert not np.array_equal(a, rng.normals(6, (4, 4)))
    assert not np.array_equal(a, rng.normals(5, (4, 4), rng.REFINE))


def test_prefix_stability():
    # the k-th variate depends on k only, not on how many are drawn
    assert np.array_equal(rng.normals(9, 10), rng.normals(9, 100)[:10])


def test_uniforms_in_open_interval():
    u = rng.uniforms(3, 100000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01


def test_sample_seeds_distinct():
    seeds = {rng.sample_seed(1, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert rng.sample_seed(1, 3) == rng.sample_seed(1, 3)
