"""Command-line driver: ``zenohl {plan,bounds,run,sweep,ising,report}``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
Errors are also printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import report as rep
from .bounds import bound_report
from .config import load_config
from .errors import InputError, InternalError, NumericError
from .pauli import chain_basis
from .pipeline import ising_experiment, run_protocol, sweep
from .zeno import plan_configurations


def _out_dir(arg: str | None, cfg_dir: str | None = None) -> Path:
    if arg:
        return Path(arg)
    if cfg_dir:
        return Path(cfg_dir)
    return rep.default_output_dir()


def cmd_plan(args) -> int:
    configs = plan_configurations(args.n)
    for cfg in configs:
        frozen = ", ".join(str(q) for q in sorted(cfg.frozen))
        patches = " ".join("(" + ",".join(str(q) for q in p) + ")" for p in cfg.patches)
        print(f"offset {cfg.offset}: frozen {{{frozen}}}  patches {patches}")
        print(f"    {cfg.layout()}")
    return 0


def cmd_bounds(args) -> int:
    n_terms = len(chain_basis(args.n))
    h_norm = args.h_norm if args.h_norm is not None else float(n_terms)
    configs = plan_configurations(args.n)
    n_p = sum(len(c.patches) for c in configs)
    report = bound_report(
        h_norm, args.T, args.eps, args.delta, n_patch=args.n_patch,
        n_c=len(configs), n_p=n_p, zeno_fraction=args.zeno_fraction, xi=args.xi,
    )
    if args.json:
        print(rep.payload_json(report.to_dict()))
        return 0
    d = report.to_dict()
    width = max(len(k) for k in d)
    for k, v in d.items():
        print(f"{k:<{width}}  {v!r}")
    return 0


def _finish(kind: str, payload: dict, timestamps: dict, out_dir: Path, stem: str) -> int:
    report = rep.make_report(kind, payload, timestamps)
    path = rep.write_report(report, out_dir / f"{stem}.json")
    rep.emit_csv(report, out_dir)
    print(rep.render_summary(report))
    print(f"report written to {path}")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.protocol_spec()
    h = cfg.build_hamiltonian()
    result = run_protocol(h, spec)
    payload = result.to_dict()
    payload["hamiltonian"] = h.to_records()
    return _finish("run", payload, result.timestamps, _out_dir(args.out, cfg.output_dir), "run")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if cfg.sweep is None:
        raise InputError("config has no 'sweep' section")
    spec = cfg.protocol_spec()
    started = time.time()
    points = sweep(
        cfg.sweep.axis, cfg.sweep.grid, spec, repeats=cfg.sweep.repeats,
        hamiltonian=lambda n, s: _sweep_hamiltonian(cfg, n, s),
    )
    payload = {
        "axis": cfg.sweep.axis,
        "repeats": cfg.sweep.repeats,
        "base_spec": spec.to_dict(),
        "points": [p.summary for p in points],
        "raw": [{"l2": p.l2, "mean_abs": p.mean_abs, "failures": p.failures} for p in points],
    }
    stamps = {"started": started, "finished": time.time()}
    return _finish("sweep", payload, stamps, _out_dir(args.out, cfg.output_dir), f"sweep_{cfg.sweep.axis}")


def _sweep_hamiltonian(cfg, n, seed):
    from .config import RandomSource
    from .pauli import random_2local_chain

    if isinstance(cfg.hamiltonian, RandomSource):
        return random_2local_chain(n, seed)
    return cfg.build_hamiltonian(n)


def cmd_ising(args) -> int:
    shots = None if args.shots == 0 else args.shots
    started = time.time()
    res = ising_experiment(
        args.n, args.h, args.J, args.T, args.r, shots, args.lam, args.seed, model_basis=args.model_basis
    )
    payload = res.to_dict()
    stamps = {"started": started, "finished": time.time()}
    return _finish("ising", payload, stamps, _out_dir(args.out), "ising")


def cmd_report(args) -> int:
    report = rep.read_report(args.report)
    print(rep.render_summary(report))
    out = Path(args.csv_dir) if args.csv_dir else Path(args.report).parent
    for path in rep.emit_csv(report, out):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zenohl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="print the reshaping configurations of a chain")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bounds", help="resource budgets for a target accuracy")
    p.add_argument("--n", type=int, default=6, help="chain length (sets n_c, n_p and the default norm)")
    p.add_argument("--n-patch", type=int, default=2)
    p.add_argument("--T", type=float, default=0.01)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--h-norm", type=float, default=None,
                   help="operator-norm bound of H (default: number of chain terms)")
    p.add_argument("--zeno-fraction", type=float, default=0.5)
    p.add_argument("--xi", type=float, default=0.5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    for name, func in (("run", cmd_run), ("sweep", cmd_sweep)):
        p = sub.add_parser(name, help=f"{name} the protocol from a config file")
        p.add_argument("config")
        p.add_argument("--out", default=None, help=f"output directory (default ${rep.OUTPUT_DIR_ENV})")
        p.set_defaults(func=func)

    p = sub.add_parser("ising", help="simulated noisy Ising-chain experiment")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--h", type=float, default=1 / 8)
    p.add_argument("--J", type=float, default=1 / 16)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--r", type=int, default=10)
    p.add_argument("--shots", type=int, default=900, help="shots per setting; 0 for exact probabilities")
    p.add_argument("--lam", type=float, default=0.48)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-basis", action="store_true", help="fit only the Z and XX coefficients")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ising)

    p = sub.add_parser("report", help="re-render a report and emit CSV series")
    p.add_argument("report")
    p.add_argument("--csv-dir", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "message": str(exc)}
    context = getattr(exc, "context", None)
    if context:
        err["context"] = {k: v for k, v in context.items() if isinstance(v, (int, float, str, tuple, list))}
    print(json.dumps(err, default=str), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InputError, ValueError, FileNotFoundError) as exc:
        return _fail(1, exc)
    except (NumericError, InternalError, ArithmeticError, RuntimeError) as exc:
        return _fail(2, exc)


if __name__ == "__main__":
    sys.exit(main())
