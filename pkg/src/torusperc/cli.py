"""Command line entry point.

    torusperc validate-kernel [--config FILE] [--out DIR]
    torusperc threshold       [--config FILE] [--seed S] [--samples N] [--event KIND] [--jobs J] [--out DIR]
    torusperc experiment NAME [--config FILE] [--seed S] [--samples N] [--jobs J] [--out DIR]

Every run writes the fully resolved configuration to ``DIR/config.ini``; running
again with ``--config DIR/config.ini`` reproduces the outputs.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, parse_config
from .experiments import (AuditPlan, MCConfig, circuit_scan, concentration_tail_test, crossing_curve, fkg_test,
                          implication_audit, parallel_map, quarter_bound_test, variance_scan)
from .experiments.runner import cached_kernel
from .experiments.stats import jackknife_variance
from .grid import TorusGrid
from .kernel import KernelError, make_kernel, validate_conditions
from .rng import sample_seed
from .sampler import draw_field
from .topology import EventSpec, threshold_sweep

EXPERIMENTS = ("variance-scan", "quarter-bound", "tails", "crossing-curve", "fkg", "audit", "circuit-scan")
THRESHOLD_COLUMNS = ("seed", "kernel_id", "n", "side", "event", "t_value", "saddle_x", "saddle_y",
                     "class_1", "class_2")
MIN_SAMPLES = 100


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--samples", type=int, help="number of Monte Carlo samples")
    common.add_argument("--jobs", type=int, help="worker processes (default: available cores)")
    p = argparse.ArgumentParser(prog="torusperc", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"torusperc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate-kernel", parents=[common], help="check kernel conditions")
    th = sub.add_parser("threshold", parents=[common], help="threshold of one event per sample")
    th.add_argument("--event", choices=("loop", "cross", "cross_dagger", "circuit"))
    ex = sub.add_parser("experiment", parents=[common], help="run a Monte Carlo experiment")
    ex.add_argument("name", choices=EXPERIMENTS)
    return p


def _load(args) -> RunConfig:
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    overrides = {("run", "seed"): args.seed, ("run", "samples"): args.samples,
                 ("run", "jobs"): args.jobs, ("run", "out"): args.out}
    if getattr(args, "event", None):
        overrides["event", "kind"] = args.event
    try:
        return parse_config(text, overrides)
    except (ConfigError, KernelError) as exc:
        raise UsageError(str(exc)) from None


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg["run"]["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.to_ini())
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _write_csv(path: Path, schema: str, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema {schema} v1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


def _grid(cfg: RunConfig) -> TorusGrid:
    return TorusGrid(cfg["grid"]["n"], cfg["grid"]["side"])


def _event(cfg: RunConfig) -> EventSpec:
    e = cfg["event"]
    kind = e["kind"]
    if kind == "loop":
        return EventSpec.loop(e["direction"])
    if kind in ("cross", "cross_dagger"):
        return EventSpec(kind, R=e["R"], origin=tuple(e["origin"]), rotation=e["rotation"])
    if kind == "circuit":
        return EventSpec.circuit(tuple(e["center"]), e["r1"], e["r2"])
    raise UsageError(f"unknown event kind {kind!r}")


# ---------------------------------------------------------------- commands


def cmd_validate_kernel(cfg: RunConfig) -> int:
    spec = cfg.kernel_spec()
    try:
        k = make_kernel(spec, _grid(cfg))
    except KernelError as exc:
        raise UsageError(str(exc)) from None
    report = validate_conditions(k)
    out = _outdir(cfg)
    failed = report.failed_required()
    _write_json(out / "conditions.json", {
        "version": __version__, "config_digest": cfg.digest(), "kernel": spec.describe(),
        "kernel_id": k.digest, "sigma": k.sigma, "l1_norm": k.l1_norm, "l2_norm": k.l2_norm,
        "alpha": k.alpha, "conditions": report.to_flat(), "failed": failed,
    })
    for name in report.NAMES:
        chk = getattr(report, name)
        print(f"{name:18s} {'pass' if chk.passed else 'FAIL'}  {chk.statistic} = {chk.value:.6g}")
    if failed:
        print("failed required conditions: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def _threshold_row(spec, grid, route, seed, event, conn, idx):
    k = cached_kernel(spec, grid)
    s = sample_seed(seed, idx)
    f = draw_field(k, s, route)
    r = threshold_sweep(f, event, conn)
    sx, sy = r.saddle_cell if r.saddle_cell is not None else (None, None)
    cls = list(r.realizing_class) + [None, None]
    return (s, k.digest, grid.n, grid.side, event.kind, r.t_value, sx, sy, cls[0], cls[1])


def cmd_threshold(cfg: RunConfig) -> int:
    spec, grid, event = cfg.kernel_spec(), _grid(cfg), _event(cfg)
    try:
        cached_kernel(spec, grid)
    except KernelError as exc:
        raise UsageError(str(exc)) from None
    run = cfg["run"]
    fn = partial(_threshold_row, spec, grid, run["route"], run["seed"], event, cfg["grid"]["connectivity"])
    rows = parallel_map(fn, run["samples"], run["jobs"])
    out = _outdir(cfg)
    _write_csv(out / "thresholds.csv", "torusperc-threshold", THRESHOLD_COLUMNS, rows)
    t = np.array([r[5] for r in rows])
    finite = t[np.isfinite(t)]
    summary = {"version": __version__, "config_digest": cfg.digest(), "n_samples": len(rows),
               "n_realized": int(finite.size), "mean_t": float(finite.mean()) if finite.size else math.nan}
    if finite.size >= 3:
        summary["var_t"] = jackknife_variance("var_t", finite).to_dict()
    _write_json(out / "summary.json", summary)
    return 0


def _mc(cfg: RunConfig) -> MCConfig:
    run = cfg["run"]
    return MCConfig(cfg.kernel_spec(), cfg["grid"]["n"], cfg["grid"]["side"], run["samples"], run["seed"],
                    run["route"], run["jobs"])


def run_experiment(name: str, cfg: RunConfig):
    ex, run, g = cfg["experiment"], cfg["run"], cfg["grid"]
    spec = cfg.kernel_spec()
    if name == "variance-scan":
        return variance_scan(spec, ex["sides"], run["samples"], run["seed"], g["cells_per_unit"],
                             _event(cfg), run["route"], run["jobs"])
    if name == "quarter-bound":
        return quarter_bound_test(_mc(cfg), _event(cfg))
    if name == "tails":
        return concentration_tail_test(_mc(cfg), ex["eps_list"], _event(cfg))
    if name == "crossing-curve":
        return crossing_curve(spec, ex["R_list"], ex["levels"], run["samples"], run["seed"], ex["side_factor"],
                              g["cells_per_unit"], run["route"], run["jobs"], ex["target"])
    if name == "fkg":
        R, gap = ex["R"], ex["gap"]
        a = EventSpec.cross_dagger(R, (0.0, 0.0))
        b = EventSpec.cross_dagger(R, (0.0, (4.0 + gap) * R))
        return fkg_test(_mc(cfg), a, b, ex["level"])
    if name == "audit":
        plan = AuditPlan.build(ex["R"], ex["L"], ex["side_factor"], g["cells_per_unit"], ex["loop_level"],
                               ex["glue_level"], g["connectivity"])
        return implication_audit(spec, plan, run["samples"], run["seed"], run["route"], run["jobs"],
                                 corrupt=cfg["debug"]["corrupt_topology"])
    if name == "circuit-scan":
        return circuit_scan(_mc(cfg), ex["r_list"], ex["L_list"], ex["level"])
    raise UsageError(f"unknown experiment {name!r}")


def cmd_experiment(name: str, cfg: RunConfig) -> int:
    if cfg["run"]["samples"] < MIN_SAMPLES:
        raise UsageError(f"experiments report confidence intervals and need at least {MIN_SAMPLES} samples")
    try:
        res = run_experiment(name, cfg)
    except (KernelError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    out = _outdir(cfg)
    stem = name.replace("-", "_")
    _write_csv(out / f"{stem}.csv", f"torusperc-{name}", res.columns, res.table)
    summary = {"version": __version__, "config_digest": cfg.digest(), **res.summary()}
    _write_json(out / f"{stem}.json", summary)
    _write_json(out / "timing.json", {"wall_clock_seconds": res.wall_clock})
    for c in res.checks:
        print(f"{'pass' if c.verdict else 'FAIL'}  {c.name}: lhs={c.lhs:.6g} rhs={c.rhs:.6g} se={c.se:.3g}")
    for key, val in res.counts.items():
        print(f"{key} = {val}")
    if res.deterministic_failure:
        print("deterministic audit failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "validate-kernel":
            return cmd_validate_kernel(cfg)
        if args.command == "threshold":
            return cmd_threshold(cfg)
        return cmd_experiment(args.name, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"torusperc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
