import csv
import json
import subprocess
import sys

import pytest

from duospace.cli import main

from .conftest import SCENARIOS, scenario_text, write_trajectory

FIXED = str(SCENARIOS / "fixed_delay.toml")


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--scenario", FIXED, "--mode", "baseline", "--seed", "7", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["frames.csv", "merges.csv", "report.json"]
    stdout = capsys.readouterr().out
    assert stdout.count("\n") == 1 and "mean_aoi_s=1.022222212" in stdout
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 7 and report["mode"] == "baseline"


def test_run_twice_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["run", "--scenario", FIXED, "--mode", "duo", "--seed", "5", "--out", str(tmp_path / d),
                     "--format", "jsonl"]) == 0
    for name in ("frames.jsonl", "merges.jsonl", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_scenario_exit_1(tmp_path, capsys):
    assert main(["run", "--scenario", str(tmp_path / "none.toml"), "--out", str(tmp_path)]) == 1
    captured = capsys.readouterr()
    assert captured.out == "" and "config error" in captured.err


def test_bad_flag_exit_1(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--scenario", FIXED, "--out", str(tmp_path), "--mode", "quantum"])
    assert info.value.code == 1


def test_runtime_error_exit_2(tmp_path, capsys):
    write_trajectory(tmp_path / "head.csv", 1.0, lambda t: (0, 0, 1.6))
    scn = tmp_path / "s.toml"
    scn.write_text(scenario_text(horizon='"1s"'))
    out = tmp_path / "out"
    out.write_text("a file where a directory is expected")
    assert main(["run", "--scenario", str(scn), "--out", str(out)]) == 2
    assert "runtime error" in capsys.readouterr().err


def test_compare(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--scenario", FIXED, "--out", str(out)]) == 0
    comp = json.loads((out / "comparison.json").read_text())
    assert comp["baseline_fingerprint"] != comp["duo_fingerprint"]
    assert len(comp["baseline_fingerprint"]) == 16
    expected = 100 * (1 - comp["duo_mean_aoi_s"] / comp["baseline_mean_aoi_s"])
    assert comp["latency_reduction_pct"] == pytest.approx(expected)
    assert (out / "baseline" / "frames.csv").exists() and (out / "duo" / "report.json").exists()


def test_compare_zero_delay_near_zero(tmp_path):
    out = tmp_path / "z"
    assert main(["compare", "--scenario", str(SCENARIOS / "zero_delay.toml"), "--out", str(out)]) == 0
    comp = json.loads((out / "comparison.json").read_text())
    assert abs(comp["latency_reduction_pct"]) <= 5.0


def test_sweep_rows(tmp_path):
    out = tmp_path / "sw"
    code = main(["sweep", "--scenario", FIXED, "--mode", "duo", "--param",
                 "calibration_period=100ms,500ms,1s", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader((out / "sweep.csv").open()))
    assert rows[0] == ["value", "mean_aoi_s", "mean_delta_d_m", "max_max_step_m"]
    assert [r[0] for r in rows[1:]] == ["100ms", "500ms", "1s"]


def test_sweep_merge_strategies(tmp_path):
    out = tmp_path / "sw"
    scn = str(SCENARIOS / "circle_merge.toml")
    assert main(["sweep", "--scenario", scn, "--param", "merge=snap,blend:0.3,interp:300ms", "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    snap = float(rows[0]["max_max_step_m"])
    assert float(rows[0]["mean_delta_d_m"]) > 0
    assert all(snap >= float(r["max_max_step_m"]) for r in rows[1:])


def test_sweep_unknown_key(tmp_path, capsys):
    assert main(["sweep", "--scenario", FIXED, "--param", "warp.factor=1,2", "--out", str(tmp_path)]) == 1
    assert "warp.factor" in capsys.readouterr().err


def test_sweep_invalid_value(tmp_path):
    assert main(["sweep", "--scenario", FIXED, "--param", "frame_rate=90,0", "--out", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "duospace", "run", "--scenario", FIXED, "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("baseline mean_aoi_s=")
