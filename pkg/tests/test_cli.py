import csv
import json

import numpy as np
import pytest

from torusperc.cli import main
from torusperc.grid import TorusGrid
from torusperc.kernel import KernelSpec, make_kernel
from torusperc.rng import sample_seed
from torusperc.sampler import draw_field


def run(tmp_path, *args, config=None, name="out"):
    out = tmp_path / name
    argv = list(args) + ["--out", str(out)]
    if config is not None:
        cfg = tmp_path / f"{name}.ini"
        cfg.write_text(config)
        argv += ["--config", str(cfg)]
    return main(argv), out


def test_validate_bargmann_fock(tmp_path):
    code, out = run(tmp_path, "validate-kernel")
    assert code == 0
    report = json.loads((out / "conditions.json").read_text())
    assert report["failed"] == [] and report["conditions"]["symmetry.pass"]
    assert (out / "config.ini").exists()


def test_validate_odd_kernel_fails(tmp_path, capsys):
    code, _ = run(tmp_path, "validate-kernel", config="[kernel]\npreset = odd_gaussian\n")
    assert code == 1
    assert "symmetry" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["[kernel]\nbogus = 1\n", "[nonsense]\n", "not an ini",
                                  "[grid]\nn = many\n", "[kernel]\npreset = nope\n"])
def test_malformed_config_writes_nothing(tmp_path, text):
    code, out = run(tmp_path, "validate-kernel", config=text)
    assert code == 2
    assert not out.exists()


def test_underresolved_grid_is_usage_error(tmp_path):
    code, out = run(tmp_path, "validate-kernel", config="[grid]\nn = 16\nside = 16\n")
    assert code == 2 and not out.exists()


def test_threshold_is_deterministic(tmp_path):
    a = run(tmp_path, "threshold", "--samples", "1", "--seed", "7", name="a")[1]
    b = run(tmp_path, "threshold", "--samples", "1", "--seed", "7", name="b")[1]
    assert (a / "thresholds.csv").read_bytes() == (b / "thresholds.csv").read_bytes()


def test_threshold_constant_field(tmp_path):
    text = "[kernel]\npreset = constant\nvalue = 0.5\n[grid]\nn = 8\nside = 4\n"
    code, out = run(tmp_path, "threshold", "--samples", "3", "--seed", "2", "--event", "loop", config=text)
    assert code == 0
    lines = (out / "thresholds.csv").read_text().splitlines()
    assert lines[0].startswith("# schema torusperc-threshold v1")
    rows = list(csv.DictReader(lines[1:]))
    k = make_kernel(KernelSpec("constant", {"value": 0.5}, name="constant"), TorusGrid(8, 4.0))
    for i, row in enumerate(rows):
        c = draw_field(k, sample_seed(2, i)).values[0, 0]
        assert float(row["t_value"]) == -c
        assert (row["saddle_x"], row["saddle_y"]) == ("7", "0")


def test_config_echo_reproduces(tmp_path):
    a = run(tmp_path, "threshold", "--samples", "4", "--seed", "3", "--event", "cross_dagger", name="a")[1]
    code = main(["threshold", "--config", str(a / "config.ini"), "--out", str(tmp_path / "b")])
    assert code == 0
    assert (a / "thresholds.csv").read_bytes() == (tmp_path / "b" / "thresholds.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_quarter_bound_json(tmp_path):
    code, out = run(tmp_path, "experiment", "quarter-bound", "--samples", "100", "--jobs", "1",
                    config="[grid]\nn = 32\nside = 8\n")
    assert code == 0
    summary = json.loads((out / "quarter_bound.json").read_text())
    assert len(summary["checks"]) == 2
    assert {"version", "config_digest"} <= set(summary)
    assert (out / "quarter_bound.csv").read_text().startswith("# schema torusperc-quarter-bound v1")
    assert "wall_clock_seconds" in json.loads((out / "timing.json").read_text())


AUDIT = "[experiment]\nR = 1\nL = 2\nside_factor = 6\nglue_level = 0.4\n"


def test_corrupted_audit_exits_nonzero(tmp_path):
    code, out = run(tmp_path, "experiment", "audit", "--samples", "100", "--jobs", "1",
                    config=AUDIT + "[debug]\ncorrupt_topology = true\n")
    assert code == 1
    assert json.loads((out / "audit.json").read_text())["counts"]["gluing_violations"] > 0


def test_clean_audit_exits_zero(tmp_path):
    code, out = run(tmp_path, "experiment", "audit", "--samples", "100", "--jobs", "1", config=AUDIT)
    assert code == 0


def test_experiment_needs_enough_samples(tmp_path):
    code, out = run(tmp_path, "experiment", "fkg", "--samples", "10")
    assert code == 2 and not out.exists()


def test_unknown_experiment(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["experiment", "nope", "--out", str(tmp_path / "x")])
    assert exc.value.code == 2
    assert not (tmp_path / "x").exists()


def test_readme_config_parses_and_round_trips():
    import re
    from pathlib import Path
    from torusperc.config import parse_config
    text = (Path(__file__).parent.parent / "README.md").read_text()
    block = re.search(r"```ini\n(.*?)```", text, re.S).group(1)
    cfg = parse_config(block)
    assert cfg["run"]["jobs"] is None and cfg["grid"]["n"] == 64
    assert parse_config(cfg.to_ini()).sections == cfg.sections
