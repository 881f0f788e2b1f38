import json

import pytest

from qbattery.cli import main


def write_json(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_print_config(capsys):
    assert main(["print-config", "--command", "fig3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["xi"] == 99.0
    assert out["gamma0_fractions"] == [1e-3, 1e-2, 1e-1, 1.0]


def test_run_command(tmp_path, capsys):
    cfg = write_json(tmp_path, "run.json", {"kind": "classical", "temperature": 0.0, "xi": 99.0})
    out_csv = tmp_path / "row.csv"
    assert main(["run", "--config", cfg, "--out", str(out_csv)]) == 0
    printed = capsys.readouterr().out
    assert "protocol: classical" in printed
    lines = out_csv.read_text().splitlines()
    assert lines[0].startswith("kind,engine,tau_used")
    assert lines[1].startswith("classical,analytic")


def test_run_missing_config_file(capsys):
    assert main(["run", "--config", "/does/not/exist.json"]) == 1


def test_run_invalid_config_exit_code(tmp_path, capsys):
    cfg = write_json(tmp_path, "bad.json", {"omega_l_hz": -1.0})
    assert main(["run", "--config", cfg]) == 1
    assert "omega_l_hz" in capsys.readouterr().err


def test_run_numerical_failure_exit_code(tmp_path, capsys):
    cfg = write_json(
        tmp_path, "fail.json",
        {"kind": "open_system", "engine": "lindblad", "xi": 99.0, "n_max": 80, "eps_trunc": 0.5},
    )
    assert main(["run", "--config", cfg]) == 2


def test_sweep_requires_config(capsys):
    assert main(["sweep"]) == 1


def test_sweep_writes_csv(tmp_path):
    cfg = write_json(
        tmp_path, "sweep.json",
        {"axis": "tbar", "values": [0.1, 0.2], "base": {"kind": "quantum_single_shot"}},
    )
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--jobs", "1"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("tbar,kind,engine")
    assert len(lines) == 3


def test_fig2_stdout(tmp_path, capsys):
    cfg = write_json(
        tmp_path, "fig2.json",
        {"points": 100, "tbars": [0.1], "xi_start": 1.0, "xi_stop": 20.0, "grid": 200},
    )
    assert main(["fig2", "--config", cfg, "--jobs", "2"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "xi,tbar,k_q,eta,tau_star,s_star,status"
    assert len(out.splitlines()) == 101


def test_seed_flag_accepted(tmp_path):
    cfg = write_json(tmp_path, "run.json", {"kind": "classical", "xi": 99.0})
    assert main(["run", "--config", cfg, "--seed", "7"]) == 0
