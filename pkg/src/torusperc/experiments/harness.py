"""Monte Carlo harnesses built on per-sample thresholds.

An increasing event holds for ``f + level`` exactly when its threshold is below
``level``, so one sweep per sample and event serves every level at once and
couples the levels monotonically through the shared noise.
"""
from __future__ import annotations

import math
from functools import partial

import numpy as np

from ..grid import TorusGrid
from ..kernel import KernelSpec, validate_conditions
from ..sampler import sample_field
from ..topology import EventSpec, GeometryError, NotIncreasing, threshold_sweep
from .runner import MCConfig, MCResult, Timer, cached_kernel, parallel_map, records_digest
from .stats import (BoundCheck, Estimate, SE_MULTIPLIER, binomial, chebyshev_applies, chebyshev_bound,
                    covariance_of_indicators, jackknife_variance)

LOOP = EventSpec.loop(1)


def _thresholds_one(spec, n, side, route, seed, events, connectivity, idx):
    k = cached_kernel(spec, TorusGrid(n, side))
    f = sample_field(k, seed, idx, route)
    return np.array([threshold_sweep(f, e, connectivity).t_value for e in events])


def sample_thresholds(cfg: MCConfig, events, connectivity: int = 4) -> np.ndarray:
    """``(n_samples, n_events)`` array of thresholds, row ``i`` from sample ``i``."""
    fn = partial(_thresholds_one, cfg.kernel, cfg.n, cfg.side, cfg.route, cfg.master_seed,
                 tuple(events), connectivity)
    rows = parallel_map(fn, cfg.n_samples, cfg.jobs)
    return np.array(rows).reshape(cfg.n_samples, len(events))


def _diff_se(a: Estimate, b: Estimate) -> float:
    return math.hypot(a.se, b.se)


def variance_scan(kernel: KernelSpec, sides, n_samples: int, seed: int, cells_per_unit: int = 4,
                  event: EventSpec = LOOP, route: str = "white_noise", jobs=None) -> MCResult:
    """Variance of the threshold against torus size, next to ``alpha^2`` and their ratio."""
    res = MCResult("variance-scan", {"kernel": kernel.describe(), "sides": list(map(float, sides)),
                                     "cells_per_unit": cells_per_unit, "n_samples": n_samples,
                                     "master_seed": seed, "route": route})
    res.columns = ("volume", "side", "n", "var", "var_se", "alpha2", "product", "product_se")
    digests, rows = [], []
    with Timer() as clock:
        for side in sides:
            cfg = MCConfig(kernel, int(round(side * cells_per_unit)), float(side), n_samples, seed, route, jobs)
            k = cached_kernel(kernel, cfg.grid)
            t = sample_thresholds(cfg, [event])[:, 0]
            var = res.add(jackknife_variance(f"var[side={side:g}]", t))
            # 1 / alpha^2 = 1 + |ln(sigma sqrt|T| / ||q||_1)| since ||q||_2 = sigma
            factor = 1.0 / k.alpha ** 2
            prod = res.add(Estimate(f"product[side={side:g}]", var.value * factor, var.se * factor, var.n))
            rows.append((var, prod))
            res.table.append((k.grid.volume, float(side), cfg.n, var.value, var.se, k.alpha ** 2,
                              prod.value, prod.se))
            digests.append(t)
    for (va, pa), (vb, pb) in zip(rows, rows[1:]):
        res.add(BoundCheck(f"product nonincreasing {pa.name} -> {pb.name}", pb.value, pa.value, _diff_se(pa, pb)))
        res.add(BoundCheck(f"variance decreasing {va.name} -> {vb.name}", vb.value, va.value,
                           _diff_se(va, vb), strict=True))
    res.digest = records_digest(digests)
    res.wall_clock = clock.elapsed
    return res


def _require_symmetric(kernel: KernelSpec, grid: TorusGrid):
    report = validate_conditions(cached_kernel(kernel, grid))
    if not report.symmetry.passed:
        raise ValueError("this experiment needs a kernel invariant under quarter turns")


def quarter_bound_test(cfg: MCConfig, event: EventSpec = LOOP) -> MCResult:
    """``P[T <= 0] >= 1/4`` and ``P[T >= 0] >= 1/4`` for the loop threshold."""
    _require_symmetric(cfg.kernel, cfg.grid)
    res = MCResult("quarter-bound", cfg.to_dict())
    with Timer() as clock:
        t = sample_thresholds(cfg, [event])[:, 0]
    le = res.add(binomial("P[T<=0]", t <= 0))
    ge = res.add(binomial("P[T>=0]", t >= 0))
    res.add(BoundCheck("P[T<=0] >= 1/4", 0.25, le.value, le.se))
    res.add(BoundCheck("P[T>=0] >= 1/4", 0.25, ge.value, ge.se))
    # the two events overlap only on the null event T = 0
    res.add(Estimate("P[T<=0]+P[T>=0]", le.value + ge.value, le.se, le.n))
    res.columns = ("name", "value", "se", "n")
    res.table = [(e.name, e.value, e.se, e.n) for e in (le, ge)]
    res.digest = records_digest([t])
    res.wall_clock = clock.elapsed
    return res


def concentration_tail_test(cfg: MCConfig, eps_list, event: EventSpec = LOOP) -> MCResult:
    """Both threshold tails at ``+-sigma*eps`` against ``4 Var(T) / (sigma eps)^2``."""
    res = MCResult("tails", {**cfg.to_dict(), "eps_list": list(map(float, eps_list))})
    sigma = cached_kernel(cfg.kernel, cfg.grid).sigma
    with Timer() as clock:
        t = sample_thresholds(cfg, [event])[:, 0]
    var = res.add(jackknife_variance("var", t))
    a = math.sqrt(var.value)
    t_up = math.sqrt(np.mean(t <= 0))
    t_low = math.sqrt(np.mean(t >= 0))
    res.columns = ("eps", "lower", "lower_se", "upper", "upper_se", "bound")
    for eps in eps_list:
        lvl = sigma * eps
        if not (chebyshev_applies(a, t_up, lvl) and chebyshev_applies(a, t_low, lvl)):
            raise ValueError(f"eps={eps} is below the range 2a/t where the Chebyshev bound applies")
        bound = chebyshev_bound(a, lvl)
        lower = res.add(binomial(f"P[T<=-sigma*{eps:g}]", t <= -lvl))
        upper = res.add(binomial(f"P[T>=sigma*{eps:g}]", t >= lvl))
        res.add(BoundCheck(f"lower tail eps={eps:g}", lower.value, bound, lower.se))
        res.add(BoundCheck(f"upper tail eps={eps:g}", upper.value, bound, upper.se))
        res.table.append((float(eps), lower.value, lower.se, upper.value, upper.se, bound))
    res.digest = records_digest([t])
    res.wall_clock = clock.elapsed
    return res


def crossing_curve(kernel: KernelSpec, R_list, levels, n_samples: int, seed: int, side_factor: float = 10,
                   cells_per_unit: int = 4, route: str = "white_noise", jobs=None,
                   target: float | None = None) -> MCResult:
    """``P[Cross_R]`` on tori of side ``side_factor * R``, for every ``R`` and level.

    Positive levels must give probabilities increasing in ``R``, negative levels
    decreasing ones, and level 0 stays inside ``[0.05, 0.95]``. With ``target``,
    the largest ``R`` must reach it at every positive level.
    """
    res = MCResult("crossing-curve", {"kernel": kernel.describe(), "R_list": list(map(float, R_list)),
                                      "levels": list(map(float, levels)), "side_factor": side_factor,
                                      "cells_per_unit": cells_per_unit, "n_samples": n_samples,
                                      "master_seed": seed, "route": route, "target": target})
    res.columns = ("R", "side", "n", "level", "p", "se")
    est = {}
    digests = []
    with Timer() as clock:
        for R in R_list:
            side = side_factor * R
            cfg = MCConfig(kernel, int(round(side * cells_per_unit)), float(side), n_samples, seed, route, jobs)
            t = sample_thresholds(cfg, [EventSpec.cross(R)])[:, 0]
            digests.append(t)
            for lvl in levels:
                e = est[R, lvl] = res.add(binomial(f"P[Cross_{R:g}] level={lvl:g}", t < lvl))
                res.table.append((float(R), side, cfg.n, float(lvl), e.value, e.se))
    for lvl in levels:
        for ra, rb in zip(R_list, R_list[1:]):
            a, b = est[ra, lvl], est[rb, lvl]
            if lvl > 0:
                res.add(BoundCheck(f"increasing in R at level {lvl:g}: R={ra:g}->{rb:g}", a.value, b.value,
                                   _diff_se(a, b)))
            elif lvl < 0:
                res.add(BoundCheck(f"decreasing in R at level {lvl:g}: R={ra:g}->{rb:g}", b.value, a.value,
                                   _diff_se(a, b)))
        if lvl == 0:
            for R in R_list:
                e = est[R, lvl]
                res.add(BoundCheck(f"level 0 above 0.05 at R={R:g}", 0.05, e.value, e.se))
                res.add(BoundCheck(f"level 0 below 0.95 at R={R:g}", e.value, 0.95, e.se))
        if target is not None and lvl > 0:
            e = est[R_list[-1], lvl]
            res.add(BoundCheck(f"reaches {target:g} at level {lvl:g}", target, e.value, e.se))
    res.digest = records_digest(digests)
    res.wall_clock = clock.elapsed
    return res


def fkg_test(cfg: MCConfig, event_a: EventSpec, event_b: EventSpec, level: float = 0.0) -> MCResult:
    """``P[A and B] - P[A] P[B] >= 0`` for increasing events ``A`` and ``B``."""
    for e in (event_a, event_b):
        if not e.increasing:
            raise NotIncreasing(f"FKG needs increasing events; got the complement of {e.kind}")
    report = validate_conditions(cached_kernel(cfg.kernel, cfg.grid))
    if not report.weak_positivity.passed:
        raise ValueError("FKG needs a kernel with q*q >= 0")
    res = MCResult("fkg", {**cfg.to_dict(), "level": level})
    with Timer() as clock:
        t = sample_thresholds(cfg, [event_a, event_b])
    a, b = t[:, 0] < level, t[:, 1] < level
    res.add(binomial("P[A]", a))
    res.add(binomial("P[B]", b))
    res.add(binomial("P[A and B]", a & b))
    cov, se = covariance_of_indicators(a, b)
    res.add(Estimate("cov", cov, se, cfg.n_samples))
    res.add(BoundCheck("P[A and B] >= P[A] P[B]", 0.0, cov, se))
    res.columns = ("name", "value", "se", "n")
    res.table = [(e.name, e.value, e.se, e.n) for e in res.estimates]
    res.digest = records_digest([t])
    res.wall_clock = clock.elapsed
    return res


def circuit_scan(cfg: MCConfig, r_list, L_list, level: float, center=(0.0, 0.0)) -> MCResult:
    """``P[Circ(r, L r)]`` for every ``r`` and scale factor ``L``."""
    half = cfg.side / 2
    if max(L_list) * max(r_list) >= half:
        raise GeometryError(f"outer radius {max(L_list) * max(r_list)} must stay below {half}")
    events = [EventSpec.circuit(center, r, L * r) for r in r_list for L in L_list]
    res = MCResult("circuit-scan", {**cfg.to_dict(), "r_list": list(map(float, r_list)),
                                    "L_list": list(map(float, L_list)), "level": level,
                                    "center": list(center)})
    res.columns = ("r", "L", "level", "p", "se")
    with Timer() as clock:
        t = sample_thresholds(cfg, events)
    est = {}
    for col, (r, L) in enumerate((r, L) for r in r_list for L in L_list):
        e = est[r, L] = res.add(binomial(f"P[Circ({r:g},{L:g}r)]", t[:, col] < level))
        res.table.append((float(r), float(L), float(level), e.value, e.se))
    for r in r_list:
        for la, lb in zip(L_list, L_list[1:]):
            a, b = est[r, la], est[r, lb]
            res.add(BoundCheck(f"increasing in L at r={r:g}: L={la:g}->{lb:g}", a.value, b.value, _diff_se(a, b)))
    res.digest = records_digest([t])
    res.wall_clock = clock.elapsed
    return res


__all__ = ["sample_thresholds", "variance_scan", "quarter_bound_test", "concentration_tail_test",
           "crossing_curve", "fkg_test", "circuit_scan", "SE_MULTIPLIER"]
