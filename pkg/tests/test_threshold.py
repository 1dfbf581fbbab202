import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import bandlimited
from oracles import bisection_threshold
from torusperc.grid import TorusGrid
from torusperc.kernel import make_kernel
from torusperc.sampler import field_from_array, sample_field
from torusperc.topology import (EventSpec, NotIncreasing, evaluate_event, saddle_derivative_check,
                                threshold_sweep)

EVENTS_24 = [EventSpec.loop(1), EventSpec.cross(0.75, (0.5, 1.0)),
             EventSpec.cross_dagger(1.0, (2.0, 0.0), rotation=1),
             EventSpec.circuit((3.0, 3.0), 0.5, 2.0)]


def test_constant_field():
    f = field_from_array(np.full((8, 8), 0.3), side=4.0)
    r = threshold_sweep(f, EventSpec.loop(1))
    assert r.t_value == -0.3
    assert r.saddle_cell == (7, 0)


def test_cos_band_saddle_on_top_row():
    n, side = 32, 8.0
    x = np.arange(n) * side / n
    f = field_from_array(np.cos(2 * np.pi * x / side)[None, :].repeat(n, 0), side=side)
    r = threshold_sweep(f, EventSpec.loop(1))
    assert r.t_value == -1.0
    assert r.saddle_cell[1] == 0
    assert r.realizing_class in {(1, 0), (-1, 0)}


def test_never_realized_is_infinite():
    # an annulus of cells that cannot close around its center: too thin for 4-connectivity
    f = field_from_array(np.ones((16, 16)), side=16.0)
    e = EventSpec.circuit((8.0, 8.0), 3.0, 3.05)
    r = threshold_sweep(f, e)
    assert r.t_value == math.inf and not r.realized and r.saddle_cell is None


def test_decreasing_event_rejected():
    f = field_from_array(np.ones((8, 8)))
    with pytest.raises(NotIncreasing):
        threshold_sweep(f, EventSpec.loop(1).negated())


@pytest.mark.parametrize("connectivity", [4, 8])
def test_matches_bisection_oracle(bf24, connectivity):
    g = bf24.grid
    for idx in range(10):
        f = sample_field(bf24, 3, idx)
        for e in EVENTS_24:
            t = threshold_sweep(f, e, connectivity).t_value
            assert t == bisection_threshold(f.values, e, g.spacing, g.side, connectivity)


def test_threshold_brackets_event(bf24):
    for idx in range(10):
        f = sample_field(bf24, 4, idx)
        for e in EVENTS_24:
            t = threshold_sweep(f, e).t_value
            assert evaluate_event(f, t + 1e-12, e)
            assert not evaluate_event(f, t - 1e-12, e)


@given(st.integers(0, 10 ** 6), st.floats(-3, 3))
def test_translation_equivariance(bf24, idx, c):
    f = sample_field(bf24, 5, idx)
    for e in EVENTS_24:
        a = threshold_sweep(f, e).t_value
        b = threshold_sweep(replace(f, values=f.values + c), e).t_value
        assert b == pytest.approx(a - c, abs=1e-12)


@given(st.integers(0, 10 ** 6), st.integers(0, 2 ** 32 - 1), st.floats(0.01, 1.0))
def test_one_lipschitz_and_monotone(bf24, idx, seed, scale):
    f = sample_field(bf24, 6, idx)
    d = np.random.default_rng(seed).uniform(-scale, scale, f.values.shape)
    g = replace(f, values=f.values + d)
    up = replace(f, values=f.values + np.abs(d))
    for e in EVENTS_24:
        a, b = threshold_sweep(f, e).t_value, threshold_sweep(g, e).t_value
        assert abs(a - b) <= np.max(np.abs(d)) + 1e-12
        assert threshold_sweep(up, e).t_value <= a


@given(st.integers(0, 10 ** 6), st.integers(0, 3))
def test_lattice_symmetries(bf24, idx, quarter_turns):
    f = sample_field(bf24, 8, idx)
    shift = (idx % 24, (idx // 24) % 24)
    moved = replace(f, values=np.roll(f.values, shift, axis=(0, 1)))
    rotated = replace(f, values=np.rot90(f.values, quarter_turns))
    e = EventSpec.loop(0)
    t = threshold_sweep(f, e).t_value
    assert threshold_sweep(moved, e).t_value == t
    assert threshold_sweep(rotated, e).t_value == t


def test_derivative_constant_direction(bf64):
    f = sample_field(bf64, 9, 0)
    for row in saddle_derivative_check(f, EventSpec.loop(1), np.ones((64, 64)), [1e-1, 1e-2, 1e-3]):
        assert row.predicted == 1.0
        assert row.quotient == pytest.approx(1.0, abs=1e-9)


def test_derivative_local_direction_vanishes(bf64):
    f = sample_field(bf64, 9, 1)
    s = threshold_sweep(f, EventSpec.loop(1)).saddle_cell
    v = np.zeros((64, 64))
    far = ((s[0] + 32) % 64, (s[1] + 32) % 64)
    v[far] = 1.0
    rows = saddle_derivative_check(f, EventSpec.loop(1), v, [1e-3, 1e-4])
    assert rows[-1].predicted == 0.0 and rows[-1].quotient == 0.0


def test_derivative_bandlimited(bf64):
    errs = []
    for i in range(10):
        f = sample_field(bf64, 10, i)
        rows = saddle_derivative_check(f, EventSpec.loop(1), bandlimited(64, i), [1e-2, 1e-3])
        assert rows[1].error <= rows[0].error + 1e-9
        errs.append(rows[1].error)
    assert max(errs) < 0.05
