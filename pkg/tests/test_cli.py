import json
import subprocess
import sys

import pytest

from funnelplatoon.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_OK, main
from funnelplatoon.config import config_to_dict, preset


def short_doc(horizon=1.0, n=3, **integration):
    doc = config_to_dict(preset("scenario2"))
    doc["platoon"]["vehicles"] = doc["platoon"]["vehicles"][:n]
    doc["platoon"]["n"] = n
    doc["platoon"]["initial_gaps"] = doc["platoon"]["initial_gaps"][:n]
    doc["platoon"]["initial_velocities"] = doc["platoon"]["initial_velocities"][:n]
    doc["integration"].update(horizon=horizon, **integration)
    return doc


def dump(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--config", dump(tmp_path, short_doc()), "--out", str(out), "--plots"])
    assert code == EXIT_OK
    for name in ("trace.csv", "report.txt", "report.json", "manifest.json", "config.json",
                 "distances.svg", "velocities.svg", "accelerations.svg"):
        assert (out / name).exists(), name
    man = json.loads((out / "manifest.json").read_text())
    assert man["exit_status"] == 0 and "trace.csv" in man["artifacts"]
    assert "result: PASS" in capsys.readouterr().out


def test_run_horizon_zero(tmp_path):
    out = tmp_path / "h0"
    assert main(["run", "--preset", "scenario1", "--horizon", "0", "--out", str(out)]) == EXIT_OK
    assert len((out / "trace.csv").read_text().splitlines()) == 2


def test_config_error_exit(tmp_path, capsys):
    doc = short_doc()
    doc["controller"]["d_max"] = 1.0
    assert main(["run", "--config", dump(tmp_path, doc), "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    assert main(["validate", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_check_failure_exit(tmp_path):
    doc = short_doc()
    doc["checks"]["mass_chain"] = {"p": 0.5, "q": 0.6, "n0": 2}
    path = dump(tmp_path, doc)
    assert main(["run", "--config", path, "--out", str(tmp_path / "m")]) == EXIT_CHECK
    assert main(["run", "--config", path, "--out", str(tmp_path / "m2"), "--no-checks"]) == EXIT_OK
    assert main(["validate", "--config", path]) == EXIT_CHECK


def test_domain_exit_code(tmp_path):
    # a step floor far above what the tolerance needs forces the integrator to give up
    doc = short_doc(rtol=1e-12, atol=1e-12, max_step=0.5, min_step=0.4)
    out = tmp_path / "d"
    assert main(["run", "--config", dump(tmp_path, doc), "--out", str(out)]) == EXIT_DOMAIN
    rep = json.loads((out / "report.json").read_text())
    assert rep["domain_exit"]["t"] == 0.0
    assert not (out / "trace.csv").exists()


def test_tiny_gain2_is_recorded(tmp_path):
    doc = short_doc(horizon=5.0)
    doc["controller"]["gain2"] = 0.001
    out = tmp_path / "k2"
    code = main(["run", "--config", dump(tmp_path, doc), "--out", str(out)])
    assert code in (EXIT_OK, EXIT_CHECK, EXIT_DOMAIN)
    assert json.loads((out / "manifest.json").read_text())["exit_status"] == code


def test_report_subcommand(tmp_path, capsys):
    path = dump(tmp_path, short_doc())
    out = tmp_path / "r"
    assert main(["run", "--config", path, "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert main(["report", "--config", path, "--trace", str(out / "trace.csv"), "--json"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["theorem"]["funnel_ok"] is True


def test_sweep_parallel(tmp_path):
    path = dump(tmp_path, short_doc(horizon=0.5, n=2))
    out = tmp_path / "sw"
    code = main(["sweep", "--config", path, "--param", "controller.gain2=1800,3600", "--jobs", "2", "--out", str(out)])
    assert code == EXIT_OK
    results = json.loads((out / "sweep.json").read_text())
    assert [r["config"] for r in results] == ["controller.gain2=1800", "controller.gain2=3600"]
    assert (out / "run_000" / "trace.csv").exists() and (out / "run_001" / "trace.csv").exists()


def test_brake_start_flag_and_env_out(tmp_path, monkeypatch):
    monkeypatch.setenv("FUNNELPLATOON_OUT", str(tmp_path / "env"))
    assert main(["run", "--preset", "scenario1", "--brake-start", "0.5", "--horizon", "0.2"]) == EXIT_OK
    cfg = json.loads((tmp_path / "env" / "scenario1" / "config.json").read_text())
    assert cfg["leader"]["brake_start"] == 0.5
    assert main(["validate", "--preset", "scenario2", "--brake-start", "3"]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "funnelplatoon", "validate", "--preset", "scenario1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "delta" in res.stdout
