import json

import pytest

from zenohl import cli
from zenohl.errors import NumericError


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_plan_n6(capsys):
    code, out, _ = _run(capsys, "plan", "--n", "6")
    assert code == 0
    lines = out.splitlines()
    assert "offset 0: frozen {2, 5}  patches (0,1) (3,4)" in lines
    assert "offset 1: frozen {0, 3}  patches (1,2) (4,5)" in lines
    assert "offset 2: frozen {1, 4}  patches (0) (2,3) (5)" in lines


def test_bounds_prints_qpt_constant(capsys):
    code, out, _ = _run(capsys, "bounds", "--n-patch", "2", "--eps", "0.1", "--delta", "0.01")
    assert code == 0
    assert "C_QPT                        55296.0" in out
    assert "N_copies_required            224509450" in out
    code, out, _ = _run(capsys, "bounds", "--n-patch", "2", "--eps", "0.1", "--delta", "0.01", "--json")
    d = json.loads(out)
    assert d["C_QPT"] == 55296 and d["n_c"] == 3 and d["h_norm"] == 63.0


def test_bounds_invalid_is_exit_1(capsys):
    code, _, err = _run(capsys, "bounds", "--eps", "0", "--delta", "0.01")
    assert code == 1
    assert json.loads(err)["error"] == "InputError"


def test_run_twice_identical_payload(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_qubits: 4\nshots: 100\nseed: 7\nhamiltonian: {kind: random, seed: 3}\n")
    assert _run(capsys, "run", str(cfg), "--out", str(tmp_path / "a"))[0] == 0
    assert _run(capsys, "run", str(cfg), "--out", str(tmp_path / "b"))[0] == 0
    a = json.loads((tmp_path / "a" / "run.json").read_text())
    b = json.loads((tmp_path / "b" / "run.json").read_text())
    assert json.dumps(a["payload"], sort_keys=True) == json.dumps(b["payload"], sort_keys=True)
    assert (tmp_path / "a" / "per_term.v1.csv").read_text() == (tmp_path / "b" / "per_term.v1.csv").read_text()


def test_run_uses_env_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("ZENOHL_OUTPUT_DIR", str(tmp_path / "env"))
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_qubits: 3\nmode: exact-zeno-oracle\n")
    code, out, _ = _run(capsys, "run", str(cfg))
    assert code == 0
    assert (tmp_path / "env" / "run.json").exists()
    assert "||c_hat - c||_2" in out


def test_invalid_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_qubits: 4\nunknown_key: 1\n")
    code, _, err = _run(capsys, "run", str(cfg))
    assert code == 1
    obj = json.loads(err)
    assert obj["error"] == "InputError" and "unknown_key" in obj["message"]


def test_numeric_failure_exit_2(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericError("Krylov norm drift", step=3)

    monkeypatch.setattr(cli, "run_protocol", boom)
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_qubits: 3\n")
    code, _, err = _run(capsys, "run", str(cfg), "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err) == {"error": "NumericError", "message": "Krylov norm drift", "context": {"step": 3}}


def test_sweep_and_report(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("n_qubits: 3\nsweep: {axis: kicks, grid: [2, 8], repeats: 1}\n")
    code, _, _ = _run(capsys, "sweep", str(cfg), "--out", str(tmp_path))
    assert code == 0
    csv = (tmp_path / "sweep_kicks.v1.csv").read_text().splitlines()
    assert csv[0].startswith("axis,value,shots")
    assert len(csv) == 3
    code, out, _ = _run(capsys, "report", str(tmp_path / "sweep_kicks.json"), "--csv-dir", str(tmp_path / "re"))
    assert code == 0
    assert (tmp_path / "re" / "sweep_kicks.v1.csv").read_text().splitlines() == csv


def test_sweep_without_section_is_exit_1(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("n_qubits: 3\n")
    assert _run(capsys, "sweep", str(cfg))[0] == 1


def test_ising_small(tmp_path, capsys):
    code, out, _ = _run(capsys, "ising", "--n", "4", "--shots", "0", "--lam", "0.1", "--out", str(tmp_path))
    assert code == 0
    assert "median lambda (debiased)" in out
    report = json.loads((tmp_path / "ising.json").read_text())
    assert report["kind"] == "ising"
    assert report["payload"]["ising"]["lambda_median"] == pytest.approx(0.1, abs=0.02)


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        cli.main(["fly"])
