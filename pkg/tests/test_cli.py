import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from optstop import cli
from optstop.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def load(name):
    return json.loads((CONFIGS / name).read_text())


def write(tmp_path, raw, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


def test_levy_solve(tmp_path, capsys):
    assert cli.run(["solve", "--config", str(CONFIGS / "levy_call_cost.json"), "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["thresholds"][0] == pytest.approx(2 * math.log(7.5), abs=1e-9)
    assert s["value"] == pytest.approx(0.7511111, abs=1e-7)
    assert s["closed_form"]["value"] == pytest.approx(s["value"], abs=1e-10)
    assert json.loads(capsys.readouterr().out) == s
    rows = list(csv.reader(open(tmp_path / "value_table.csv")))
    assert rows[0] == list(cli.CSV_COLUMNS) and len(rows) == 102


def test_solve_output_is_byte_stable(tmp_path):
    cfg = str(CONFIGS / "bm_call.json")
    cli.run(["solve", "--config", cfg, "--out", str(tmp_path / "a")])
    cli.run(["solve", "--config", cfg, "--out", str(tmp_path / "b")])
    for f in ("summary.json", "value_table.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_degenerate_problem(tmp_path, capsys):
    assert cli.run(["solve", "--config", str(CONFIGS / "zero.json"), "--out", str(tmp_path)]) == 0
    s = json.loads(capsys.readouterr().out)
    assert s["degenerate"] and s["value"] == 0.0


def test_config_round_trip():
    raw = load("bm_strangle.json")
    cfg = cli.parse_config(raw)
    again = cli.parse_config(json.loads(json.dumps(raw)))
    assert cfg == again


@pytest.mark.parametrize("patch", [
    {"discount": {"q": 0.0}},
    {"bogus": 1},
    {"reward": "__import__('os').system('true')"},
    {"reward": {"type": "call", "K": 1.0, "space": "price"}},
])
def test_config_errors_exit_2(tmp_path, patch, capsys):
    raw = load("bm_call.json")
    raw["problem"].update(patch)
    assert cli.run(["solve", "--config", write(tmp_path, raw), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_and_malformed_files(tmp_path):
    assert cli.run(["solve", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.run(["solve", "--config", str(bad)]) == cli.EXIT_CONFIG
    with pytest.raises(ConfigError):
        cli.load_config(bad)


def test_solver_failure_exits_3(tmp_path, capsys):
    raw = load("bm_call.json")
    raw["problem"]["mode"] = "two_sided"
    assert cli.run(["solve", "--config", write(tmp_path, raw), "--out", str(tmp_path)]) == cli.EXIT_SOLVER
    assert "NoInteriorSolution" in capsys.readouterr().err


def test_verification_failure_exits_4(tmp_path, monkeypatch):
    def failing(cfg, perturb=0.0, k=3.0):
        return {"checks": [{"name": "value", "solver_value": 1.0, "mc_mean": 0.0, "mc_se": 0.01, "gap": 1.0,
                            "pass": False}], "passed": False, "perturb": perturb}

    monkeypatch.setattr(cli, "cmd_verify", failing)
    code = cli.run(["verify", "--config", str(CONFIGS / "bm_call.json"), "--out", str(tmp_path)])
    assert code == cli.EXIT_VERIFY
    assert (tmp_path / "verify.json").exists()


def test_verify_and_perturbed_verify(tmp_path, capsys, warm_jit):
    cfg = str(CONFIGS / "bm_call.json")
    assert cli.run(["verify", "--config", cfg, "--out", str(tmp_path)]) == 0
    v = json.loads(capsys.readouterr().out)
    assert {c["name"] for c in v["checks"]} == {"value", "dominance"}
    assert cli.run(["verify", "--config", cfg, "--out", str(tmp_path), "--perturb", "0.5",
                    "--format", "csv"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    gap = [r for r in rows if r["name"] == "optimality_gap"][0]
    assert float(gap["gap"]) > 0


def test_table_and_simulate(tmp_path, capsys, warm_jit):
    cfg = str(CONFIGS / "bm_call.json")
    assert cli.run(["table", "--config", cfg, "--grid", "11"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,value,reward,delta,stop" and len(lines) == 12
    assert cli.run(["table", "--config", cfg, "--grid", "5", "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)["x"]) == 5
    assert cli.run(["simulate", "--config", cfg, "--seed", "3"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert est["seed"] == 3 and est["n"] == 20000


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "optstop", "solve", "--config", str(CONFIGS / "zero.json"),
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["value"] == 0.0
