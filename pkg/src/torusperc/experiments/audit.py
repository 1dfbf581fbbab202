"""Per-sample audits of two deterministic inclusions between percolation events.

* Loop to cross: a loop winding in the first coordinate forces a crossing of
  one of the ``2 * side_factor^2`` translated and rotated ``3R x 4R`` rectangles.
* Gluing: with ``r = R / L``, crossings of the two halves of ``[0, 6R] x [0, 4R]``
  that meet the middle line in the same window ``[j r, (j + 1) r]``, together
  with a circuit of ``Ann((3R, j r), r, R)``, force a lengthwise crossing.

Any violation is a bug in the topology code, never bad luck.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from ..grid import TorusGrid
from ..kernel import KernelSpec
from ..sampler import sample_field
from ..topology import EventSpec, GeometryError, evaluate_event
from .runner import MCResult, Timer, cached_kernel, parallel_map, records_digest
from .stats import BoundCheck, binomial, phi, psi


@dataclass(frozen=True)
class AuditPlan:
    grid: TorusGrid
    R: float
    L: int
    side_factor: int
    loop_level: float
    glue_level: float
    connectivity: int = 4

    @classmethod
    def build(cls, R: float, L: int = 2, side_factor: int = 10, cells_per_unit: int = 4,
              loop_level: float = 0.0, glue_level: float = 0.0, connectivity: int = 4) -> "AuditPlan":
        # the lengthwise crossing of the gluing step spans 6R
        if side_factor < 6:
            raise GeometryError("the audit needs side_factor >= 6")
        side = side_factor * R
        grid = TorusGrid(int(round(side * cells_per_unit)), side)
        plan = cls(grid, float(R), int(L), int(side_factor), float(loop_level), float(glue_level), connectivity)
        plan._check()
        return plan

    def _check(self):
        h = self.grid.spacing
        for name, length in (("R", self.R), ("R / L", self.R / self.L)):
            cells = length / h
            if abs(cells - round(cells)) > 1e-9:
                raise GeometryError(f"{name} = {length} must be a whole number of cells (h = {h})")

    @property
    def n_placements(self) -> int:
        return 2 * self.side_factor ** 2

    def placements(self) -> list[EventSpec]:
        R, k = self.R, self.side_factor
        return [EventSpec.cross_dagger(R, (a * R, b * R), rot) for rot in (0, 1)
                for a in range(k) for b in range(k)]

    def glue_events(self):
        R, L = self.R, self.L
        r = R / L
        windows = range(4 * L)
        span = lambda j: (j * r, (j + 1) * r)
        left = {(j1, j2): EventSpec.cross_dagger(R, (0.0, 0.0), 0, start_span=span(j1), end_span=span(j2))
                for j1 in windows for j2 in windows}
        right = {(j1, j2): EventSpec.cross_dagger(R, (3 * R, 0.0), 0, start_span=span(j2), end_span=span(j1))
                 for j1 in windows for j2 in windows}
        circ = {j2: EventSpec.circuit((3 * R, j2 * r), r, R) for j2 in windows}
        return left, right, circ, EventSpec.cross(R)


FIELDS = ("loop", "loop_cross", "cross_dagger", "cooccur", "cross", "loop_violation", "glue_violation",
          "cross_dagger_big", "circuit")


def audit_sample(f, plan: AuditPlan, corrupt: bool = False) -> np.ndarray:
    """One record of ``FIELDS`` (as 0/1) for a single field sample.

    ``corrupt`` replaces the lengthwise-crossing detector by one that always
    answers no, to exercise the failure path.
    """
    conn = plan.connectivity
    holds = lambda e, lvl: evaluate_event(f, lvl, e, conn)
    lv = plan.loop_level
    loop = holds(EventSpec.loop(1), lv)
    loop_cross = any(holds(e, lv) for e in plan.placements()) if loop else False
    dagger = holds(EventSpec.cross_dagger(plan.R), lv)

    gv = plan.glue_level
    left, right, circ, cross = plan.glue_events()
    c_ok = {j: holds(e, gv) for j, e in circ.items()}
    cooccur = False
    any_left = False
    for (j1, j2), e in left.items():
        a = holds(e, gv)
        any_left |= a
        if a and c_ok[j2] and holds(right[j1, j2], gv):
            cooccur = True
    crossed = False if corrupt else holds(cross, gv)
    return np.array([loop, loop_cross, dagger, cooccur, crossed, loop and not loop_cross,
                     cooccur and not crossed, any_left, c_ok[0]], dtype=np.int64)


def _audit_one(spec, plan, route, seed, corrupt, idx):
    k = cached_kernel(spec, plan.grid)
    return audit_sample(sample_field(k, seed, idx, route), plan, corrupt)


def implication_audit(kernel: KernelSpec, plan: AuditPlan, n_samples: int, seed: int,
                      route: str = "white_noise", jobs=None, corrupt: bool = False) -> MCResult:
    res = MCResult("audit", {"kernel": kernel.describe(), "grid": plan.grid.to_dict(), "R": plan.R,
                             "L": plan.L, "side_factor": plan.side_factor, "loop_level": plan.loop_level,
                             "glue_level": plan.glue_level, "n_samples": n_samples, "master_seed": seed,
                             "route": route, "corrupt": corrupt})
    with Timer() as clock:
        rec = np.array(parallel_map(partial(_audit_one, kernel, plan, route, seed, corrupt), n_samples, jobs))
    col = {name: rec[:, i].astype(bool) for i, name in enumerate(FIELDS)}
    res.counts = {
        "loop_to_cross_violations": int(col["loop_violation"].sum()),
        "gluing_violations": int(col["glue_violation"].sum()),
        "loop_events": int(col["loop"].sum()),
        "gluing_cooccurrences": int(col["cooccur"].sum()),
        "placements": plan.n_placements,
    }
    p_loop = res.add(binomial("P[Loop]", col["loop"]))
    p_dag = res.add(binomial("P[Cross_dagger]", col["cross_dagger"]))
    res.add(binomial("P[gluing co-occurrence]", col["cooccur"]))
    p_cross = res.add(binomial("P[Cross_LR]", col["cross"]))
    p_big = res.add(binomial("P[Cross_dagger_LR]", col["cross_dagger_big"]))
    p_circ = res.add(binomial("P[Circ(r,Lr)]", col["circuit"]))
    res.add(BoundCheck(f"P[Cross_dagger] >= phi_{plan.n_placements}(P[Loop])",
                       phi(p_loop.value, plan.n_placements), p_dag.value, p_dag.se))
    res.add(BoundCheck(f"P[Cross_LR] >= psi_{plan.L}(P[Cross_dagger_LR])^2 P[Circ]",
                       psi(p_big.value, plan.L) ** 2 * p_circ.value, p_cross.value, p_cross.se))
    res.deterministic_failure = bool(res.counts["loop_to_cross_violations"] or res.counts["gluing_violations"])
    res.columns = ("sample",) + FIELDS
    res.table = [(i, *map(int, r)) for i, r in enumerate(rec)]
    res.digest = records_digest([rec])
    res.wall_clock = clock.elapsed
    return res
