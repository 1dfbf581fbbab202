"""Sample-parallel execution and result bookkeeping.

Each sample is a pure function of ``(config, master_seed, index)``. Workers
return per-sample records, which are gathered in index order, so every
estimate is the same whatever the number of processes.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..grid import TorusGrid
from ..kernel import Kernel, KernelSpec, make_kernel
from .stats import BoundCheck, Estimate

_KERNELS: dict = {}


def cached_kernel(spec: KernelSpec, grid: TorusGrid) -> Kernel:
    """Per-process kernel cache; kernels are immutable so sharing is safe."""
    key = (repr(sorted(spec.describe().items())), grid)
    k = _KERNELS.get(key)
    if k is None:
        if len(_KERNELS) > 16:
            _KERNELS.clear()
        k = _KERNELS[key] = make_kernel(spec, grid)
    return k


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def parallel_map(fn, n_items: int, jobs: int | None = None) -> list:
    """``[fn(i) for i in range(n_items)]``, optionally spread over processes."""
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    if jobs == 1 or n_items < 2:
        return [fn(i) for i in range(n_items)]
    chunk = max(1, n_items // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(n_items), chunksize=chunk))


def records_digest(records) -> str:
    """Checksum of per-sample outputs, insensitive to how they were computed."""
    h = hashlib.sha256()
    for rec in records:
        h.update(np.asarray(rec, dtype=float).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class MCConfig:
    kernel: KernelSpec
    n: int
    side: float
    n_samples: int
    master_seed: int
    route: str = "white_noise"
    jobs: int | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.n, self.side)

    def to_dict(self) -> dict:
        return {"kernel": self.kernel.describe(), "n": self.n, "side": self.side,
                "n_samples": self.n_samples, "master_seed": self.master_seed, "route": self.route}


@dataclass
class MCResult:
    name: str
    config: dict
    estimates: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    table: list = field(default_factory=list)
    columns: tuple = ()
    counts: dict = field(default_factory=dict)
    digest: str = ""
    wall_clock: float = 0.0
    deterministic_failure: bool = False

    def add(self, item):
        if isinstance(item, Estimate):
            self.estimates.append(item)
        elif isinstance(item, BoundCheck):
            self.checks.append(item)
        else:
            raise TypeError(type(item))
        return item

    @property
    def passed(self) -> bool:
        return all(c.verdict for c in self.checks) and not self.deterministic_failure

    def summary(self) -> dict:
        """Everything except wall-clock, so identical runs give identical summaries."""
        return {
            "experiment": self.name,
            "config": self.config,
            "estimates": [e.to_dict() for e in self.estimates],
            "checks": [c.to_dict() for c in self.checks],
            "counts": self.counts,
            "digest": self.digest,
            "deterministic_failure": self.deterministic_failure,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True, default=float)


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
