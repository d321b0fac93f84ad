import json
import subprocess
import sys

import pytest

from favdown import cli
from favdown.stats import Outcome


def run_main(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


def test_simulate_writes_outputs(tmp_path, capsys):
    code, rep = run_main(["simulate", "--steps", "20000", "--seed", "3", "--out", str(tmp_path)], capsys)
    assert code == 0 and rep["outcome"] == "PASS"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"steps", "seed", "f_counts", "d_counts", "prop12_violations", "truncated"}
    assert (tmp_path / "events.csv").read_text().startswith("n,x,r\n")
    assert json.loads((tmp_path / "report.json").read_text()) == rep


def test_replicas_get_their_own_event_files(tmp_path, capsys):
    code, _ = run_main(["simulate", "--steps", "5000", "--replicas", "2", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert (tmp_path / "events_r0.csv").exists() and (tmp_path / "events_r1.csv").exists()


def test_reports_are_deterministic(capsys):
    _, a = run_main(["tiecheck", "--replicas", "20000", "--seed", "9"], capsys)
    _, b = run_main(["tiecheck", "--replicas", "20000", "--seed", "9"], capsys)
    assert a == b and "wall_clock" not in a
    assert a["schema"] == cli.SCHEMA and a["config"]["seed"] == 9


def test_timing_is_opt_in(capsys):
    _, rep = run_main(["lemmas", "--h-grid", "4,8,16", "--timing"], capsys)
    assert rep["wall_clock"] >= 0


def test_config_file_and_flag_override(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"seed": 1, "steps": 100, "window": [-2, 3]}))
    args = cli.build_parser().parse_args(["simulate", "--config", str(tmp_path / "c.json"), "--steps", "50"])
    cfg = cli.config_from_args(args)
    assert cfg.seed == 1 and cfg.steps == 50 and cfg.window == (-2, 3)


@pytest.mark.parametrize("argv", [
    ["rayknight", "--x", "5", "--window=-2:2"],
    ["tiecheck", "--r-total", "7"],
    ["enumerate", "--n", "30"],
    ["lemmas", "--h-grid", "1,4"],
    ["simulate", "--steps", "0"],
])
def test_bad_configs_exit_2(argv, capsys):
    assert cli.main(argv) == 2


def test_unknown_config_key_exits_2(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"sed": 1}))
    assert cli.main(["simulate", "--config", str(tmp_path / "c.json")]) == 2


def test_failed_gate_exits_1(monkeypatch, capsys):
    def wrong_level(cfg):
        return cli.cmd_rayknight(cfg, construction_h=cfg.h + 1)
    monkeypatch.setitem(cli.RUNNERS, "rayknight", wrong_level)
    code, rep = run_main(["rayknight", "--replicas", "20000", "--x", "1", "--h", "2"], capsys)
    assert code == 1
    assert {c["name"]: c["outcome"] for c in rep["checks"]}["rayknight"] == "FAIL"


def test_heavy_truncation_skips_rayknight(capsys):
    code, rep = run_main(["rayknight", "--replicas", "10000", "--x", "3", "--h", "3",
                          "--step-cap", "5"], capsys)
    assert code == 0
    assert rep["checks"][0]["outcome"] == Outcome.SKIPPED.value


def test_enumerate_command(tmp_path, capsys):
    code, rep = run_main(["enumerate", "--n", "10", "--replicas", "20000", "--out", str(tmp_path)], capsys)
    assert code == 0 and rep["results"]["kd_size"]
    assert (tmp_path / "enumeration.csv").exists()


def test_lemmas_command(tmp_path, capsys):
    code, rep = run_main(["lemmas", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert all(c["outcome"] == "PASS" for c in rep["checks"])
    assert (tmp_path / "lemmas.csv").read_text().startswith("kernel,h,start,quantity,value\n")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "favdown", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
