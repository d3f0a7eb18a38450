import csv
import json
import subprocess
import sys

import pytest

from igr.cli import main

SMALL_TASK = {"train_length": 40, "test_length": 20, "channel_lengths_um": [20, 1000],
              "warmup_steps": 5, "substeps_per_step": 50}


def write_config(tmp_path, data, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(tmp_path, *args, out="out"):
    return main([*args, "--out", str(tmp_path / out), "--jobs", "1"])


def test_narma2_is_byte_identical_across_runs(tmp_path):
    cfg = write_config(tmp_path, SMALL_TASK)
    assert run(tmp_path, "narma2", "--config", cfg, out="a") == 0
    assert run(tmp_path, "narma2", "--config", cfg, out="b") == 0
    for name in ("report.json", "prediction.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["seed"] == 0
    assert report["config"]["train_length"] == 40


def test_seed_override_changes_results(tmp_path):
    cfg = write_config(tmp_path, SMALL_TASK)
    assert run(tmp_path, "second-order", "--config", cfg, "--seed", "5", out="a") == 0
    assert run(tmp_path, "second-order", "--config", cfg, out="b") == 0
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    assert ra["seed"] == 5 and ra["config"]["rng_seed"] == 5
    assert ra["config"]["kind"] == "second_order"
    assert (tmp_path / "a" / "prediction.csv").read_bytes() != (tmp_path / "b" / "prediction.csv").read_bytes()
    assert rb["seed"] == 0


def test_config_errors_exit_1(tmp_path, capsys):
    assert run(tmp_path, "narma2", "--config", write_config(tmp_path, {"no_such_key": 1})) == 1
    assert "unknown keys" in capsys.readouterr().err
    assert run(tmp_path, "narma2", "--config", write_config(tmp_path, {"device": {"bogus": 0}})) == 1
    assert run(tmp_path, "narma2", "--config", write_config(tmp_path, {"kind": "second_order"})) == 1
    assert run(tmp_path, "narma2", "--config", write_config(tmp_path, {"train_length": -1})) == 1
    assert run(tmp_path, "narma2", "--config", str(tmp_path / "missing.json")) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(tmp_path, "narma2", "--config", str(bad)) == 1
    assert run(tmp_path, "narma2", "--seed", "-1") == 1
    assert main(["no-such-command"]) == 1
    assert main(["narma2", "--jobs", "0"]) == 1


def test_runtime_error_exits_2(tmp_path, capsys):
    # inputs up to 5 make the recurrence leave [0, 1)
    cfg = write_config(tmp_path, {**SMALL_TASK, "input_high": 5.0})
    assert run(tmp_path, "narma2", "--config", cfg) == 2
    assert "DivergenceError" in capsys.readouterr().err


def test_sweep_default_grid(tmp_path):
    cfg = write_config(tmp_path, {"task": SMALL_TASK})
    assert run(tmp_path, "sweep", "--config", cfg) == 0
    with open(tmp_path / "out" / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 16
    assert {float(r["period_s"]) for r in rows} == {0.01, 0.02, 0.05, 0.1}


def test_sweep_custom_grid(tmp_path):
    cfg = write_config(tmp_path, {"periods": [0.05], "duties": [0.5, 0.75], "task": SMALL_TASK})
    assert run(tmp_path, "sweep", "--config", cfg) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert len(report["cells"]) == 2
    assert report["config"]["duties"] == [0.5, 0.75]


def test_ablation_outputs(tmp_path):
    cfg = write_config(tmp_path, SMALL_TASK)
    assert run(tmp_path, "ablation", "--config", cfg) == 0
    lines = (tmp_path / "out" / "ablation.csv").read_text().splitlines()
    assert lines[0] == "virtual_node,nmse_test"
    assert len(lines) == 12 and lines[-1].startswith("all,")


def test_simulate_outputs(tmp_path):
    cfg = write_config(tmp_path, {"steps": 5, "channel_length_um": 100, "samples_per_step": 10})
    assert run(tmp_path, "simulate", "--config", cfg) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["samples"] == 50
    assert report["max_kirchhoff_residual_A"] < 1e-15
    assert (tmp_path / "out" / "trace.csv").exists()


def test_lyapunov_outputs(tmp_path):
    cfg = write_config(tmp_path, {"cycles": 10, "washout": 20, "channel_lengths_um": [20, 100],
                                  "substeps_per_step": 50})
    assert run(tmp_path, "lyapunov", "--config", cfg) == 0
    out = tmp_path / "out"
    report = json.loads((out / "report.json").read_text())
    assert report["dimension"] == 11
    assert len(report["exponents"]) == 11
    maps = sorted(p.name for p in out.glob("return_map_*.csv"))
    assert len(maps) == 2
    assert (out / maps[0]).read_text().splitlines()[0] == "x_k,x_k1"


def test_mnist_outputs(tmp_path):
    cfg = write_config(tmp_path, {"train_count": 100, "test_count": 50, "train_sizes": [100],
                                  "epochs": 2})
    assert run(tmp_path, "mnist", "--config", cfg) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["config"]["data_dir"]
    assert len((tmp_path / "out" / "pattern_table.csv").read_text().splitlines()) == 17


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "igr.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("simulate", "narma2", "second-order", "mnist", "lyapunov", "sweep", "ablation"):
        assert cmd in res.stdout
