import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from torusperc.experiments import (AuditPlan, BoundCheck, MCConfig, audit_sample, circuit_scan,
                                   concentration_tail_test, crossing_curve, fkg_test, implication_audit,
                                   phi, phi_psi, psi, quarter_bound_test, sample_thresholds, variance_scan)
from torusperc.experiments.runner import parallel_map
from torusperc.experiments.stats import (binomial, chebyshev_applies, chebyshev_bound,
                                         covariance_of_indicators, jackknife_variance)
from torusperc.kernel import PRESETS
from torusperc.sampler import field_from_array
from torusperc.topology import EventSpec, GeometryError, NotIncreasing

BF = PRESETS["bargmann_fock"]


def small(n_samples=100, seed=1, n=32, side=8.0):
    return MCConfig(BF, n, side, n_samples, seed, jobs=1)


# ------------------------------------------------------------------ stats


def test_bound_check_rule():
    assert BoundCheck("c", 1.0, 0.9, 0.04).verdict
    assert not BoundCheck("c", 1.0, 0.8, 0.05).verdict
    assert BoundCheck("c", 1.0, 0.9, 0.0).slack == pytest.approx(-0.1)
    assert not BoundCheck("s", 0.5, 0.6, 0.05, strict=True).verdict
    assert BoundCheck("s", 0.5, 0.7, 0.05, strict=True).verdict


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=50))
def test_jackknife_variance_is_sample_variance(x):
    est = jackknife_variance("v", x)
    assert est.value == pytest.approx(np.var(x, ddof=1), rel=1e-9, abs=1e-9)
    assert est.se >= 0


def test_jackknife_se_matches_normal_theory():
    x = np.random.default_rng(0).normal(size=20000)
    est = jackknife_variance("v", x)
    assert est.se == pytest.approx(math.sqrt(2 / 20000), rel=0.05)


def test_binomial():
    e = binomial("p", [True, False, True, True])
    assert (e.value, e.n) == (0.75, 4) and e.se == pytest.approx(math.sqrt(0.75 * 0.25 / 4))


@given(st.lists(st.booleans(), min_size=2, max_size=200))
def test_covariance_of_identical_events(a):
    c, _ = covariance_of_indicators(a, a)
    p = np.mean(a)
    assert c == pytest.approx(p * (1 - p), abs=1e-12) and c >= 0


@given(st.floats(0.05, 0.95), st.floats(0.1, 10), st.floats(0.1, 10))
def test_chebyshev_on_two_point_laws(w, lo, hi):
    # X = -lo with probability w, +hi otherwise
    mean = -w * lo + (1 - w) * hi
    a = math.sqrt(w * lo ** 2 + (1 - w) * hi ** 2 - mean ** 2)
    t = math.sqrt(w)
    for level in np.linspace(0.01, 3 * hi, 40):
        if chebyshev_applies(a, t, level):
            p_ge = (1 - w) if hi >= level else 0.0
            assert p_ge <= chebyshev_bound(a, level) + 1e-12


def test_phi_psi():
    for N in (1, 7, 20000):
        assert phi(0.0, N) == 0.0 and phi(1.0, N) == 1.0
    assert psi(0.3, 1) == pytest.approx(1 - 0.7 ** (1 / 16))
    assert phi_psi(0.3, "psi", 2) == psi(0.3, 2)
    assert 0 < phi(0.99, 20000) < 1e-3
    for bad in (lambda: phi(1.5, 2), lambda: phi(0.5, 0), lambda: psi(-0.1, 1), lambda: phi_psi(0.5, "x", 1)):
        with pytest.raises(ValueError):
            bad()


# ------------------------------------------------------------------ harnesses


def test_parallel_map_is_order_stable():
    assert parallel_map(abs, 10, 2) == parallel_map(abs, 10, 1) == list(range(10))


def test_sample_thresholds_independent_of_jobs():
    cfg = small(12)
    a = sample_thresholds(cfg, [EventSpec.loop(1)])
    b = sample_thresholds(MCConfig(BF, 32, 8.0, 12, 1, jobs=2), [EventSpec.loop(1)])
    assert np.array_equal(a, b)


def test_level_coupling_is_monotone():
    t = sample_thresholds(small(30), [EventSpec.cross(1.0)])[:, 0]
    levels = np.linspace(-1, 1, 9)
    held = np.array([t < lvl for lvl in levels])
    assert np.all(held[1:] >= held[:-1])


def test_quarter_bound_has_two_checks():
    res = quarter_bound_test(small())
    assert len(res.checks) == 2
    le, ge = res.estimates[:2]
    assert abs(le.value + ge.value - 1) <= 3 * le.se


def test_variance_scan_single_size():
    res = variance_scan(BF, [8.0], 20, 0, jobs=1)
    assert len(res.table) == 1 and res.checks == []


def test_variance_scan_columns():
    res = variance_scan(BF, [8.0, 16.0], 20, 0, jobs=1)
    assert len(res.table) == 2 and len(res.checks) == 2
    row = dict(zip(res.columns, res.table[0]))
    assert row["product"] == pytest.approx(row["var"] / row["alpha2"])


def test_tails():
    res = concentration_tail_test(small(200, n=64, side=16.0), [1.0, 2.0])
    lower = [r[1] for r in res.table]
    upper = [r[3] for r in res.table]
    assert lower[0] >= lower[1] and upper[0] >= upper[1]
    assert all(c.verdict for c in res.checks)
    with pytest.raises(ValueError):
        concentration_tail_test(small(200), [0.01])


def test_crossing_curve_shape():
    res = crossing_curve(BF, [1.0, 2.0], [-0.2, 0.0, 0.2], 20, 0, side_factor=8, jobs=1)
    assert len(res.table) == 6
    assert all(0 <= row[4] <= 1 for row in res.table)


def test_fkg_identical_events():
    e = EventSpec.cross_dagger(1.0)
    res = fkg_test(small(), e, e)
    p = res.estimates[0].value
    assert res.estimates[3].value == pytest.approx(p * (1 - p))
    assert res.checks[0].verdict


def test_fkg_rejects_decreasing_event():
    e = EventSpec.cross_dagger(1.0)
    with pytest.raises(NotIncreasing):
        fkg_test(small(), e, e.negated())


def test_fkg_rejects_odd_kernel():
    cfg = MCConfig(PRESETS["odd_gaussian"], 64, 16.0, 100, 0, jobs=1)
    with pytest.raises(ValueError):
        fkg_test(cfg, EventSpec.cross_dagger(1.0), EventSpec.cross_dagger(1.0, (0.0, 5.0)))


def test_circuit_scan():
    res = circuit_scan(small(100, n=64, side=16.0), [1.0], [2, 4], 6.0)
    assert all(row[3] >= 0.999 for row in res.table)
    with pytest.raises(GeometryError):
        circuit_scan(small(), [1.0], [2, 8], 0.0)
    with pytest.raises(GeometryError):
        EventSpec.circuit((0, 0), 2.0, 2.0)


# ------------------------------------------------------------------ audits


@pytest.fixture(scope="module")
def plan():
    return AuditPlan.build(2.0, 2, 6, 4, 0.0, 0.4)


def test_audit_plan_geometry(plan):
    assert plan.n_placements == 72 and len(plan.placements()) == 72
    left, right, circ, cross = plan.glue_events()
    assert len(left) == len(right) == 64 and len(circ) == 8
    with pytest.raises(GeometryError):
        AuditPlan.build(2.0, 2, side_factor=5)
    with pytest.raises(GeometryError):
        AuditPlan.build(1.1, 2)


def test_audit_full_field_holds_everything(plan):
    f = field_from_array(np.ones(plan.grid.shape), side=plan.grid.side)
    rec = dict(zip(("loop", "loop_cross", "cross_dagger", "cooccur", "cross", "loop_violation",
                    "glue_violation"), audit_sample(f, plan)))
    assert rec["loop"] and rec["loop_cross"] and rec["cooccur"] and rec["cross"]
    assert not rec["loop_violation"] and not rec["glue_violation"]


def test_audit_random_samples_have_no_violations(plan):
    res = implication_audit(BF, plan, 30, 0, jobs=1)
    assert res.counts["loop_to_cross_violations"] == 0
    assert res.counts["gluing_violations"] == 0
    assert not res.deterministic_failure


def test_corrupted_audit_fails(plan):
    res = implication_audit(BF, plan, 30, 0, jobs=1, corrupt=True)
    assert res.counts["gluing_violations"] > 0 and res.deterministic_failure


def test_summary_is_deterministic():
    a = quarter_bound_test(small()).summary()
    b = quarter_bound_test(small()).summary()
    assert a == b
