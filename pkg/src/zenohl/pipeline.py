"""End-to-end learning protocol: simulate, tomograph every patch, combine.

Seeds: every random draw comes from ``SeedSequence(seed, spawn_key=...)``.
Tomography of patch ``p`` in configuration ``c`` uses ``spawn_key=(c, p)``;
sweeps derive per-point seeds with ``spawn_key=(axis_index, repeat)``.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bounds, qpt
from .dynamics import PauliOperator, evolve, kicked_evolve, product_state, reduced_density, trotter_kicked_evolve
from .errors import InputError, NumericError
from .pauli import PauliHamiltonian, PauliString, chain_basis, ising_hamiltonian, op_norm_upper, random_2local_chain, to_dense
from .zeno import (
    ContaminationModel,
    ReshapingConfig,
    build_contamination_model,
    plan_configurations,
    zeno_project,
)

log = logging.getLogger(__name__)

MODES = ("exact-kicked", "trotter-kicked", "exact-zeno-oracle")


@dataclass
class ProtocolSpec:
    """Inputs of one protocol run.

    ``shots`` counts repetitions of every global (fiducial, basis) setting in
    every configuration; ``None`` means exact probabilities.
    """

    n_qubits: int
    T: float = 0.01
    r: int = 10
    shots: int | None = None
    mode: str = "exact-kicked"
    noise: float = 0.0
    seed: int = 0
    elide_backkick: bool = False
    projection: str = "iterative"
    epsilon: float = 0.1
    delta: float = 0.01
    xi: float = 0.5
    tol: float = 1e-12

    def __post_init__(self):
        if self.n_qubits < 2:
            raise InputError("n_qubits must be >= 2")
        if self.T <= 0:
            raise InputError("T must be positive")
        if self.r < 1:
            raise InputError("r must be >= 1")
        if self.elide_backkick and self.r % 2:
            raise InputError("back-kick elision requires even r")
        if self.shots is not None and self.shots < 1:
            raise InputError("shots must be >= 1 or None")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}")
        if not 0 <= self.noise < 1:
            raise InputError("noise must lie in [0, 1)")
        if self.projection not in ("iterative", "rank1"):
            raise InputError("projection must be 'iterative' or 'rank1'")

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "ProtocolSpec":
        return ProtocolSpec(**{**self.to_dict(), **changes})


def settings_per_config(cfg: ReshapingConfig) -> int:
    n = cfg.max_patch_size
    return 6**n * 3**n


def total_copies(spec: ProtocolSpec, configs: Sequence[ReshapingConfig] | None = None) -> int | None:
    """Copies consumed by tomography: shots x settings x configurations."""
    if spec.shots is None:
        return None
    configs = plan_configurations(spec.n_qubits, spec.xi) if configs is None else configs
    return spec.shots * sum(settings_per_config(c) for c in configs)


def shots_for_copies(copies: float, n_qubits: int) -> int:
    configs = plan_configurations(n_qubits)
    return max(1, round(copies / sum(settings_per_config(c) for c in configs)))


def inject_depolarizing(probs: np.ndarray, lam: float, n: int) -> np.ndarray:
    """Mix outcome probabilities with the uniform distribution on ``2**n`` outcomes."""
    if not 0 <= lam < 1:
        raise InputError("depolarizing strength must lie in [0, 1)")
    if lam == 0:
        return probs
    return (1 - lam) * probs + lam / 2**n


def _evolve_state(h: PauliHamiltonian, op: PauliOperator, cfg: ReshapingConfig, spec: ProtocolSpec, psi):
    kick = cfg.kick
    if spec.mode == "exact-kicked":
        return kicked_evolve(op, kick, spec.T, spec.r, psi, spec.elide_backkick, spec.tol)
    if spec.mode == "trotter-kicked":
        return trotter_kicked_evolve(h, kick, spec.T, spec.r, psi, spec.elide_backkick)
    return evolve(op, spec.T, psi, tol=spec.tol)


def initial_state(cfg: ReshapingConfig, fiducials: dict[tuple[int, ...], int]) -> np.ndarray:
    """Fiducial product states on the patches, |0> on frozen qubits."""
    factors: list[np.ndarray] = []
    q = 0
    zero = np.array([1, 0], dtype=complex)
    by_start = {p[0]: p for p in cfg.patches}
    while q < cfg.n_qubits:
        if q in cfg.frozen:
            factors.append(zero)
            q += 1
        else:
            patch = by_start[q]
            factors.append(qpt.fiducial_state(len(patch), fiducials[patch]))
            q += len(patch)
    return product_state(factors)


def _local_index(global_index: int, base: int, n_global: int, n_local: int) -> int:
    return global_index // base ** (n_global - n_local)


def patch_probabilities(
    h: PauliHamiltonian,
    spec: ProtocolSpec,
    cfg: ReshapingConfig,
    fiducials: dict[tuple[int, ...], int],
    op: PauliOperator | None = None,
) -> dict[tuple[int, ...], np.ndarray]:
    """Exact outcome probabilities ``(3**n, 2**n)`` of every patch for one preparation."""
    evolving = zeno_project(h, cfg.kick) if spec.mode == "exact-zeno-oracle" else h
    op = PauliOperator(evolving) if op is None else op
    psi = _evolve_state(evolving, op, cfg, spec, initial_state(cfg, fiducials))
    out = {}
    for patch in cfg.patches:
        rho = reduced_density(psi, patch)
        out[patch] = qpt.probabilities(rho, len(patch))
    return out


@dataclass
class SimulatedData:
    """Exact per-patch probabilities indexed by global setting ``[fiducial, basis, outcome]``."""

    configs: list[ReshapingConfig]
    probs: dict[tuple[int, tuple[int, ...]], np.ndarray]


def simulate(h: PauliHamiltonian, spec: ProtocolSpec, configs: Sequence[ReshapingConfig] | None = None) -> SimulatedData:
    """Run every (configuration, fiducial) evolution and keep each patch's marginals."""
    if h.n_qubits != spec.n_qubits:
        raise InputError("Hamiltonian and spec disagree on the number of qubits")
    configs = plan_configurations(spec.n_qubits, spec.xi) if configs is None else list(configs)
    probs: dict[tuple[int, tuple[int, ...]], np.ndarray] = {}
    for ci, cfg in enumerate(configs):
        evolving = zeno_project(h, cfg.kick) if spec.mode == "exact-zeno-oracle" else h
        op = PauliOperator(evolving)
        n_max = cfg.max_patch_size
        for patch in cfg.patches:
            probs[(ci, patch)] = np.zeros((6**n_max, 3**n_max, 2 ** len(patch)))
        for g in range(6**n_max):
            fids = {p: _local_index(g, 6, n_max, len(p)) for p in cfg.patches}
            try:
                local = patch_probabilities(h, spec, cfg, fids, op)
            except NumericError as exc:
                exc.context.update(config=cfg.offset, fiducial=g)
                raise
            for patch, pl in local.items():
                b_idx = [_local_index(b, 3, n_max, len(patch)) for b in range(3**n_max)]
                probs[(ci, patch)][g] = pl[b_idx]
    return SimulatedData(configs, probs)


def tomography_records(
    data: SimulatedData, spec: ProtocolSpec
) -> dict[tuple[int, tuple[int, ...]], qpt.TomographyRecord]:
    """Apply patch-level noise, sample every global setting, fold into local settings."""
    records = {}
    for (ci, patch), gp in data.probs.items():
        cfg = data.configs[ci]
        n, n_max = len(patch), cfg.max_patch_size
        pi = cfg.patches.index(patch)
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(ci, pi)))
        noisy = inject_depolarizing(gp, spec.noise, n)
        draws = qpt.sample_counts(noisy, spec.shots, rng)
        fold_f, fold_b = 6 ** (n_max - n), 3 ** (n_max - n)
        local = draws.reshape(6**n, fold_f, 3**n, fold_b, 2**n).sum(axis=(1, 3))
        if spec.shots is None:
            local = local / (fold_f * fold_b)
            shots = None
        else:
            shots = spec.shots * fold_f * fold_b
        meta = {"config_offset": cfg.offset, "seed": spec.seed, "T": spec.T, "r": spec.r}
        records[(ci, patch)] = qpt.TomographyRecord(patch, n, local, shots, meta)
    return records


@dataclass
class PatchResult:
    config_offset: int
    patch: tuple[int, ...]
    learned: dict[str, float]
    ideal: dict[str, float]
    error_l2: float
    lambda_hat: float
    lambda_debiased: float
    diamond_gap: tuple[float, float]
    ideal_norm: float
    estimate_norm: float
    precondition: bool
    corollary_bound: float | None


@dataclass
class RunResult:
    spec: ProtocolSpec
    basis: list[str]
    c_true: np.ndarray
    c_hat: np.ndarray
    patches: list[PatchResult]
    bound_report: bounds.BoundReport
    total_copies: int | None
    provenance: dict = field(default_factory=dict)
    timestamps: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict, repr=False)

    @property
    def metrics(self) -> dict:
        return error_metrics(self.c_true, self.c_hat)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "basis": self.basis,
            "c_true": self.c_true.tolist(),
            "c_hat": self.c_hat.tolist(),
            "metrics": self.metrics,
            "patches": [asdict(p) for p in self.patches],
            "bound_report": self.bound_report.to_dict(),
            "total_copies": self.total_copies,
            "provenance": self.provenance,
        }


def error_metrics(c_true: np.ndarray, c_hat: np.ndarray) -> dict:
    """L2 error, absolute errors, and relative errors over nonzero true coefficients."""
    diff = np.asarray(c_hat) - np.asarray(c_true)
    abs_err = np.abs(diff)
    nz = np.asarray(c_true) != 0
    rel = np.full(diff.shape, np.nan)
    rel[nz] = abs_err[nz] / np.abs(np.asarray(c_true)[nz])
    return {
        "l2": float(np.linalg.norm(diff)),
        "mean_abs": float(abs_err.mean()),
        "max_abs": float(abs_err.max()),
        "abs_errors": abs_err.tolist(),
        "rel_errors": [None if math.isnan(v) else float(v) for v in rel],
        "median_rel": float(np.median(rel[nz])) if nz.any() else None,
    }


def spec_hash(h: PauliHamiltonian, spec: ProtocolSpec) -> str:
    payload = json.dumps({"spec": spec.to_dict(), "h": h.to_records()}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def reconstruct(
    h: PauliHamiltonian,
    spec: ProtocolSpec,
    data: SimulatedData,
    basis: Sequence[PauliString] | None = None,
    model: ContaminationModel | None = None,
) -> RunResult:
    """Tomography, per-patch channel estimation and global least-squares combination."""
    basis = chain_basis(spec.n_qubits) if basis is None else list(basis)
    model = build_contamination_model(spec.n_qubits, data.configs, basis) if model is None else model
    records = tomography_records(data, spec)
    c_true = h.coefficient_vector(basis)
    full_basis = chain_basis(spec.n_qubits)
    ideal_full = build_contamination_model(spec.n_qubits, data.configs, full_basis).ideal(
        h.coefficient_vector(full_basis)
    )
    learned = np.zeros(len(model.rows))
    slices = model.row_slices()
    estimates = {}
    patch_results = []
    for key, sl in slices.items():
        ci, patch = key
        try:
            est = qpt.estimate_channel(records[key], spec.T, spec.projection)
        except NumericError as exc:
            exc.context.update(config=data.configs[ci].offset, patch=patch)
            raise
        estimates[key] = est
        local_labels = [lp for _, _, lp in model.rows[sl]]
        vec_hat = np.array([est.H_patch.terms[lp] for lp in local_labels])
        learned[sl] = vec_hat
        vec_ideal = ideal_full[sl]
        ideal_h = sum((c * to_dense(lp) for lp, c in zip(local_labels, vec_ideal)), np.zeros((2 ** len(patch),) * 2))
        hat_h = sum((c * to_dense(lp) for lp, c in zip(local_labels, vec_hat)), np.zeros((2 ** len(patch),) * 2))
        ideal_norm = float(np.linalg.norm(ideal_h, 2))
        est_norm = float(np.linalg.norm(hat_h, 2))
        ok = bounds.patch_precondition(ideal_norm, spec.T) and bounds.patch_precondition(est_norm, spec.T)
        patch_results.append(
            PatchResult(
                config_offset=data.configs[ci].offset,
                patch=patch,
                learned={lp.ops: float(v) for lp, v in zip(local_labels, vec_hat)},
                ideal={lp.ops: float(v) for lp, v in zip(local_labels, vec_ideal)},
                error_l2=float(np.linalg.norm(vec_hat - vec_ideal)),
                lambda_hat=float(est.lambda_hat),
                lambda_debiased=float(est.lambda_debiased),
                diamond_gap=(float(est.diamond_gap.lower), float(est.diamond_gap.upper)),
                ideal_norm=ideal_norm,
                estimate_norm=est_norm,
                precondition=ok,
                corollary_bound=bounds.corollary_bound(spec.T, est.diamond_gap.upper, spec.epsilon) if ok else None,
            )
        )
    c_hat = model.combine(learned)
    n_p = sum(len(c.patches) for c in data.configs)
    report = bounds.bound_report(
        op_norm_upper(h), spec.T, spec.epsilon, spec.delta, n_patch=2,
        n_c=len(data.configs), n_p=n_p, xi=spec.xi,
    )
    return RunResult(
        spec=spec,
        basis=[p.ops for p in basis],
        c_true=c_true,
        c_hat=c_hat,
        patches=patch_results,
        bound_report=report,
        total_copies=total_copies(spec, data.configs),
        provenance={"seed": spec.seed, "spec_hash": spec_hash(h, spec)},
        estimates=estimates,
    )


def run_protocol(
    h_true: PauliHamiltonian,
    spec: ProtocolSpec,
    basis: Sequence[PauliString] | None = None,
) -> RunResult:
    """Learn the chain coefficients of ``h_true`` with the configured protocol."""
    if not h_true.is_geometrically_2local():
        raise InputError("Hamiltonian must be geometrically 2-local on the chain")
    started = time.time()
    data = simulate(h_true, spec)
    result = reconstruct(h_true, spec, data, basis)
    result.timestamps.update(started=started, finished=time.time())
    return result


@dataclass
class IsingResult:
    run: RunResult
    h_median: float
    J_median: float
    lambda_median: float
    lambda_raw_median: float
    median_rel_error: float

    def to_dict(self) -> dict:
        out = self.run.to_dict()
        out["ising"] = {
            "h_median": self.h_median,
            "J_median": self.J_median,
            "lambda_median": self.lambda_median,
            "lambda_raw_median": self.lambda_raw_median,
            "median_rel_error": self.median_rel_error,
        }
        return out


def ising_experiment(
    n: int,
    h: float = 1 / 8,
    J: float = 1 / 16,
    T: float = 1.0,
    r: int = 10,
    shots: int | None = 900,
    lam: float = 0.0,
    seed: int = 0,
    model_basis: bool = False,
) -> IsingResult:
    """Trotterized Ising chain with one kick per step and patch-level depolarizing noise.

    ``model_basis=True`` fits only the Z and XX coefficients; otherwise the
    full 2-local chain basis is reconstructed.
    """
    ham = ising_hamiltonian(n, h, J)
    spec = ProtocolSpec(n_qubits=n, T=T, r=r, shots=shots, mode="trotter-kicked", noise=lam, seed=seed)
    basis = list(ham.terms) if model_basis else None
    run = run_protocol(ham, spec, basis)
    labels = [PauliString(b) for b in run.basis]
    z_idx = [k for k, p in enumerate(labels) if p.weight == 1 and "Z" in p.ops]
    xx_idx = [k for k, p in enumerate(labels) if p.weight == 2 and p.ops.count("X") == 2]
    model_idx = z_idx + xx_idx
    rel = np.abs(run.c_hat[model_idx] - run.c_true[model_idx]) / np.abs(run.c_true[model_idx])
    return IsingResult(
        run=run,
        h_median=float(np.median(run.c_hat[z_idx])),
        J_median=float(np.median(run.c_hat[xx_idx])) if xx_idx else float("nan"),
        lambda_median=float(np.median([p.lambda_debiased for p in run.patches])),
        lambda_raw_median=float(np.median([p.lambda_hat for p in run.patches])),
        median_rel_error=float(np.median(rel)),
    )


SWEEP_AXES = ("copies", "kicks", "N")


@dataclass
class SweepPoint:
    value: float
    shots: int | None
    total_copies: int | None
    l2: list[float]
    mean_abs: list[float]
    failures: list[str]

    @property
    def summary(self) -> dict:
        l2 = np.array(self.l2)
        ma = np.array(self.mean_abs)
        return {
            "value": self.value,
            "shots": self.shots,
            "total_copies": self.total_copies,
            "n_ok": len(self.l2),
            "n_failed": len(self.failures),
            "mean_l2": float(l2.mean()) if l2.size else None,
            "std_l2": float(l2.std()) if l2.size else None,
            "mean_abs": float(ma.mean()) if ma.size else None,
            "std_abs": float(ma.std()) if ma.size else None,
        }


def _derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def sweep(
    axis: str,
    grid: Sequence[float],
    base: ProtocolSpec,
    repeats: int = 10,
    hamiltonian: Callable[[int, int], PauliHamiltonian] | None = None,
) -> list[SweepPoint]:
    """Repeat the protocol over a grid of copies, kicks or chain lengths.

    ``hamiltonian(n, seed)`` builds each instance (default: random 2-local
    chain). Exact probabilities are reused across a copies sweep.
    """
    if axis not in SWEEP_AXES:
        raise InputError(f"axis must be one of {SWEEP_AXES}")
    if not grid:
        raise InputError("sweep grid is empty")
    make = hamiltonian or (lambda n, s: random_2local_chain(n, s))
    points = [SweepPoint(v, None, None, [], [], []) for v in grid]
    cache: dict[int, tuple[PauliHamiltonian, SimulatedData]] = {}
    for gi, value in enumerate(grid):
        for rep in range(repeats):
            if axis == "copies":
                spec = base.replace(shots=shots_for_copies(value, base.n_qubits))
            elif axis == "kicks":
                spec = base.replace(r=int(value))
            else:
                spec = base.replace(n_qubits=int(value))
            spec = spec.replace(seed=_derived_seed(base.seed, gi, rep))
            h_seed = _derived_seed(base.seed, 10**6, rep)
            try:
                if axis == "copies":
                    if rep not in cache:
                        ham = make(spec.n_qubits, h_seed)
                        cache[rep] = (ham, simulate(ham, spec))
                    ham, data = cache[rep]
                    res = reconstruct(ham, spec, data)
                else:
                    res = run_protocol(make(spec.n_qubits, h_seed), spec)
            except (NumericError, InputError) as exc:
                log.warning("sweep point %s=%s repeat %d failed: %s", axis, value, rep, exc)
                points[gi].failures.append(f"repeat {rep}: {exc}")
                continue
            m = res.metrics
            points[gi].l2.append(m["l2"])
            points[gi].mean_abs.append(m["mean_abs"])
            points[gi].shots = spec.shots
            points[gi].total_copies = res.total_copies
    return points
