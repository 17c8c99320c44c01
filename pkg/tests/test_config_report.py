import json
import typing
from pathlib import Path

import pytest

from zenohl import report as rep
from zenohl.config import RunConfig, SweepConfig, load_config
from zenohl.errors import InputError
from zenohl.pauli import PauliString
from zenohl.pipeline import MODES, SWEEP_AXES, run_protocol

GOLDEN = Path(__file__).parent / "golden"


def _write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_literals_match_pipeline_constants():
    assert set(typing.get_args(RunConfig.model_fields["mode"].annotation)) == set(MODES)
    assert set(typing.get_args(SweepConfig.model_fields["axis"].annotation)) == set(SWEEP_AXES)


def test_load_yaml_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, "n_qubits: 5\n"))
    spec = cfg.protocol_spec()
    assert spec.n_qubits == 5 and spec.T == 0.01 and spec.r == 10 and spec.shots is None
    h = cfg.build_hamiltonian()
    assert len(h) == 3 * 5 + 9 * 4


def test_load_json_inline(tmp_path):
    text = json.dumps({"n_qubits": 2, "hamiltonian": {"kind": "inline", "terms": [{"pauli": "XZ", "coeff": 0.3}]}})
    cfg = load_config(_write(tmp_path, text, "cfg.json"))
    assert cfg.build_hamiltonian().terms == {PauliString("XZ"): 0.3}


def test_ising_source(tmp_path):
    cfg = load_config(_write(tmp_path, "n_qubits: 4\nhamiltonian: {kind: ising, h: 0.2, J: 0.1}\n"))
    h = cfg.build_hamiltonian()
    assert h.coefficient(PauliString("IZII")) == 0.2
    assert len(cfg.build_hamiltonian(6)) == 11


@pytest.mark.parametrize(
    "text",
    [
        "n_qubits: 4\nbogus: 1\n",
        "n_qubits: 1\n",
        "n_qubits: 4\nmode: mps\n",
        "n_qubits: 4\nr: 3\nelide_backkick: true\n",
        "n_qubits: 3\nhamiltonian: {kind: inline, terms: [{pauli: XX, coeff: 1}]}\n",
        "n_qubits: 4\nsweep: {axis: time, grid: [1]}\n",
        "- 1\n- 2\n",
        "n_qubits: [\n",
    ],
)
def test_invalid_configs(tmp_path, text):
    with pytest.raises(InputError):
        load_config(_write(tmp_path, text))


def test_missing_config_file(tmp_path):
    with pytest.raises(InputError):
        load_config(tmp_path / "absent.yaml")


@pytest.mark.parametrize("name", ["per_term", "patches"])
def test_run_csv_golden(name):
    report = json.loads((GOLDEN / "run_payload.json").read_text())
    text = {"per_term": rep.per_term_csv, "patches": rep.patch_csv}[name](report["payload"])
    assert text == (GOLDEN / f"{name}.v1.csv").read_text()


def test_sweep_csv_golden():
    report = json.loads((GOLDEN / "sweep_payload.json").read_text())
    assert rep.sweep_csv(report["payload"]) == (GOLDEN / "sweep_copies.v1.csv").read_text()


def test_csv_headers_are_versioned(tmp_path):
    report = json.loads((GOLDEN / "run_payload.json").read_text())
    paths = rep.emit_csv(report, tmp_path)
    assert sorted(p.name for p in paths) == ["patches.v1.csv", "per_term.v1.csv"]
    assert rep.PER_TERM_COLUMNS == ["index", "pauli", "label", "true", "estimate", "abs_error", "rel_error"]


def test_report_roundtrip_lossless(tmp_path):
    cfg = load_config(_write(tmp_path, "n_qubits: 4\nshots: 300\nseed: 5\nhamiltonian: {kind: random, seed: 2}\n"))
    result = run_protocol(cfg.build_hamiltonian(), cfg.protocol_spec())
    report = rep.make_report("run", result.to_dict(), result.timestamps)
    path = rep.write_report(report, tmp_path / "out" / "run.json")
    again = rep.read_report(path)
    assert again["payload"]["c_hat"] == result.c_hat.tolist()
    assert again["payload"]["c_true"] == result.c_true.tolist()
    assert again["payload"]["metrics"]["l2"] == result.metrics["l2"]
    assert again["payload"]["spec"] == cfg.protocol_spec().to_dict()
    assert rep.render_summary(again) == rep.render_summary(report)
    rep.emit_csv(again, tmp_path / "csv")
    rows = (tmp_path / "csv" / "per_term.v1.csv").read_text().splitlines()[1:]
    assert [float(r.split(",")[4]) for r in rows] == result.c_hat.tolist()


def test_report_rejects_other_versions(tmp_path):
    path = tmp_path / "r.json"
    path.write_text(json.dumps({"kind": "run", "format_version": 99, "payload": {}}))
    with pytest.raises(ValueError):
        rep.read_report(path)


def test_clean_nonfinite():
    assert rep.payload_json({"a": float("nan"), "b": [float("inf"), 1.5]}) == (
        '{\n "a": null,\n "b": [\n  null,\n  1.5\n ]\n}'
    )


def test_default_output_dir(monkeypatch):
    monkeypatch.setenv(rep.OUTPUT_DIR_ENV, "/tmp/somewhere")
    assert rep.default_output_dir() == Path("/tmp/somewhere")
    monkeypatch.delenv(rep.OUTPUT_DIR_ENV)
    assert rep.default_output_dir() == Path("zenohl-out")
