"""JSON run reports and the CSV series derived from them.

A report is one JSON document ``{"kind", "format_version", "payload", "timestamps"}``.
Everything deterministic lives in ``payload``; wall-clock times are kept apart
so identical runs produce byte-identical payloads. Floats are written with
``repr`` precision, and non-finite values become ``null``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import Any

from .pauli import PauliString

FORMAT_VERSION = 1
CSV_VERSION = 1
OUTPUT_DIR_ENV = "ZENOHL_OUTPUT_DIR"

PER_TERM_COLUMNS = ["index", "pauli", "label", "true", "estimate", "abs_error", "rel_error"]
PATCH_COLUMNS = [
    "config_offset", "patch", "error_l2", "lambda_hat", "lambda_debiased",
    "gap_lower", "gap_upper", "precondition", "corollary_bound",
]
SWEEP_COLUMNS = [
    "axis", "value", "shots", "total_copies", "n_ok", "n_failed",
    "mean_l2", "std_l2", "mean_abs", "std_abs",
]


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "zenohl-out"))


def _clean(obj: Any) -> Any:
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _clean(obj.item())
    return obj


def payload_json(payload: dict) -> str:
    return json.dumps(_clean(payload), sort_keys=True, indent=1, allow_nan=False)


def make_report(kind: str, payload: dict, timestamps: dict | None = None) -> dict:
    return {
        "kind": kind,
        "format_version": FORMAT_VERSION,
        "csv_version": CSV_VERSION,
        "payload": _clean(payload),
        "timestamps": timestamps or {},
    }


def write_report(report: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, sort_keys=True, indent=1, allow_nan=False))
    return path


def read_report(path: str | Path) -> dict:
    report = json.loads(Path(path).read_text())
    if report.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported report format {report.get('format_version')!r}")
    return report


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(columns: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def per_term_csv(payload: dict) -> str:
    """Per-coefficient truth, estimate and errors of a run payload."""
    m = payload["metrics"]
    rows = []
    for k, pauli in enumerate(payload["basis"]):
        rows.append([
            k, pauli, PauliString(pauli).label(), payload["c_true"][k], payload["c_hat"][k],
            m["abs_errors"][k], m["rel_errors"][k],
        ])
    return _csv(PER_TERM_COLUMNS, rows)


def patch_csv(payload: dict) -> str:
    rows = []
    for p in payload["patches"]:
        rows.append([
            p["config_offset"], "-".join(str(q) for q in p["patch"]), p["error_l2"],
            p["lambda_hat"], p["lambda_debiased"], p["diamond_gap"][0], p["diamond_gap"][1],
            int(p["precondition"]), p["corollary_bound"],
        ])
    return _csv(PATCH_COLUMNS, rows)


def sweep_csv(payload: dict) -> str:
    axis = payload["axis"]
    rows = [[axis] + [pt[c] for c in SWEEP_COLUMNS[1:]] for pt in payload["points"]]
    return _csv(SWEEP_COLUMNS, rows)


def emit_csv(report: dict, out_dir: str | Path) -> list[Path]:
    """Write the CSV series behind a report; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = report["payload"]
    written = []
    if report["kind"] in ("run", "ising"):
        for name, text in (("per_term", per_term_csv(payload)), ("patches", patch_csv(payload))):
            path = out_dir / f"{name}.v{CSV_VERSION}.csv"
            path.write_text(text)
            written.append(path)
    elif report["kind"] == "sweep":
        path = out_dir / f"sweep_{payload['axis']}.v{CSV_VERSION}.csv"
        path.write_text(sweep_csv(payload))
        written.append(path)
    else:
        raise ValueError(f"unknown report kind {report['kind']!r}")
    return written


def render_summary(report: dict) -> str:
    """Human-readable digest of a report."""
    payload = report["payload"]
    lines = [f"{report['kind']} report (format v{report['format_version']})"]
    if report["kind"] in ("run", "ising"):
        spec = payload["spec"]
        m = payload["metrics"]
        lines.append(
            f"N={spec['n_qubits']} T={spec['T']!r} r={spec['r']} shots={spec['shots']} "
            f"mode={spec['mode']} noise={spec['noise']!r}"
        )
        lines.append(f"total copies: {payload['total_copies']}")
        lines.append(f"||c_hat - c||_2 = {m['l2']!r}")
        lines.append(f"mean |c_hat - c| = {m['mean_abs']!r}   max = {m['max_abs']!r}")
        if m.get("median_rel") is not None:
            lines.append(f"median relative error = {m['median_rel']!r}")
        if "ising" in payload:
            i = payload["ising"]
            lines.append(
                f"median h = {i['h_median']!r}  median J = {i['J_median']!r}  "
                f"median lambda (debiased) = {i['lambda_median']!r}  raw = {i['lambda_raw_median']!r}  "
                f"median model rel. error = {i['median_rel_error']!r}"
            )
        b = payload["bound_report"]
        lines.append(
            f"bounds: C_Z={b['C_Z']!r} C_QPT={b['C_QPT']!r} r>={b['r_required']} "
            f"N_copies>={b['N_copies_required']} (aggregate r>={b['aggregate_r_required']}, "
            f"N_copies>={b['aggregate_N_copies_required']})"
        )
    elif report["kind"] == "sweep":
        lines.append(f"axis: {payload['axis']}  repeats: {payload['repeats']}")
        for pt in payload["points"]:
            lines.append(
                f"  {pt['value']!r:>14}  mean_l2={pt['mean_l2']!r}  std_l2={pt['std_l2']!r}  "
                f"mean_abs={pt['mean_abs']!r}  failed={pt['n_failed']}"
            )
    return "\n".join(lines)
