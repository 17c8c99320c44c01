"""Reshaping configurations, Zeno projection and the boundary-contamination model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import KickSpec
from .errors import InputError, InternalError
from .pauli import PauliHamiltonian, PauliString, chain_basis, commutes_with_kick, local_basis


@dataclass(frozen=True)
class ReshapingConfig:
    """One kick pattern: frozen qubits every third site, target patches in between."""

    offset: int
    n_qubits: int
    patches: tuple[tuple[int, ...], ...]
    frozen: frozenset[int]
    xi: float = 0.5

    @property
    def kick(self) -> KickSpec:
        return KickSpec(self.n_qubits, self.frozen, self.xi)

    @property
    def max_patch_size(self) -> int:
        return max(len(p) for p in self.patches)

    def layout(self) -> str:
        """Text rendering of the chain: ``[..]`` patches, ``*`` frozen qubits."""
        cells = []
        q = 0
        while q < self.n_qubits:
            if q in self.frozen:
                cells.append(f"*{q}")
                q += 1
                continue
            patch = next(p for p in self.patches if p[0] == q)
            cells.append("[" + " ".join(str(i) for i in patch) + "]")
            q += len(patch)
        return " ".join(cells)


def _config_for_offset(n: int, offset: int, xi: float) -> ReshapingConfig:
    frozen_residue = (offset + 2) % 3
    frozen = frozenset(i for i in range(n) if i % 3 == frozen_residue)
    patches = []
    run: list[int] = []
    for q in range(n + 1):
        if q == n or q in frozen:
            if run:
                patches.append(tuple(run))
            run = []
        else:
            run.append(q)
    return ReshapingConfig(offset, n, tuple(patches), frozen, xi)


def plan_configurations(n: int, xi: float = 0.5) -> list[ReshapingConfig]:
    """Reshaping configurations covering every edge of an ``n``-qubit chain once.

    Offsets 0, 1, 2 freeze the qubits ``i = offset + 2 (mod 3)``. Configurations
    without any two-qubit patch add no new edge and are skipped, which only
    happens for ``n <= 3``.
    """
    if n < 2:
        raise InputError("a chain needs at least 2 qubits")
    configs = [_config_for_offset(n, o, xi) for o in range(3)]
    return [c for c in configs if c.max_patch_size == 2]


def zeno_project(h: PauliHamiltonian, kick: KickSpec) -> PauliHamiltonian:
    """Zeno Hamiltonian for a Z-type kick: drop every term that anticommutes with it."""
    return PauliHamiltonian(
        h.n_qubits, {p: c for p, c in h.terms.items() if commutes_with_kick(p, kick.frozen)}
    )


@dataclass
class PatchHamiltonian:
    """Traceless Hamiltonian on a patch, keyed by Pauli strings on the patch qubits."""

    patch: tuple[int, ...]
    terms: dict[PauliString, float] = field(default_factory=dict)

    def vector(self, basis: Sequence[PauliString] | None = None) -> np.ndarray:
        basis = local_basis(len(self.patch)) if basis is None else basis
        return np.array([self.terms.get(p, 0.0) for p in basis])


def _term_on_patch(p: PauliString, patch: Sequence[int], frozen: frozenset[int]):
    """Contribution of one Zeno-surviving term to a patch, as ``(sign, local string)``.

    Frozen qubits sit in |0>, so Z letters there evaluate to +1. Returns None
    when the term does not act on the patch.
    """
    support = p.support
    inside = support & set(patch)
    if not inside:
        return None
    outside = support - inside
    if not outside <= frozen:
        raise InputError(f"term {p} couples patch {tuple(patch)} to a non-frozen qubit")
    if any(p.ops[q] != "Z" for q in outside):
        raise InputError(f"term {p} acts with X/Y on a frozen qubit")
    return 1.0, p.restrict(patch)


def expected_patch_hamiltonian(
    h: PauliHamiltonian, cfg: ReshapingConfig, patch: Sequence[int]
) -> PatchHamiltonian:
    """Ideal Hamiltonian seen by ``patch`` under infinitely fast kicks."""
    patch = tuple(patch)
    if patch not in cfg.patches:
        raise InputError(f"patch {patch} is not part of configuration {cfg.offset}")
    terms: dict[PauliString, float] = {}
    for p, c in zeno_project(h, cfg.kick).terms.items():
        hit = _term_on_patch(p, patch, cfg.frozen)
        if hit is None:
            continue
        sign, local = hit
        terms[local] = terms.get(local, 0.0) + sign * c
    return PatchHamiltonian(patch, {p: c for p, c in terms.items() if c != 0.0})


@dataclass
class ContaminationModel:
    """Linear map from global coefficients to every patch-learned coefficient.

    ``rows[k] = (config index, patch, local Pauli)`` labels row ``k`` of
    ``matrix``; columns follow ``basis``.
    """

    basis: list[PauliString]
    rows: list[tuple[int, tuple[int, ...], PauliString]]
    matrix: np.ndarray

    def row_slices(self) -> dict[tuple[int, tuple[int, ...]], slice]:
        """Contiguous row range of each (config index, patch)."""
        out: dict[tuple[int, tuple[int, ...]], slice] = {}
        for k, (ci, patch, _) in enumerate(self.rows):
            prev = out.get((ci, patch))
            out[(ci, patch)] = slice(k if prev is None else prev.start, k + 1)
        return out

    def ideal(self, c: np.ndarray) -> np.ndarray:
        return self.matrix @ c

    def combine(self, learned: np.ndarray) -> np.ndarray:
        """Least-squares global coefficients from stacked patch estimates."""
        sol, *_ = np.linalg.lstsq(self.matrix, learned, rcond=None)
        return sol


def build_contamination_model(
    n: int,
    configs: Sequence[ReshapingConfig] | None = None,
    basis: Sequence[PauliString] | None = None,
) -> ContaminationModel:
    configs = plan_configurations(n) if configs is None else list(configs)
    basis = chain_basis(n) if basis is None else list(basis)
    rows = []
    blocks = []
    col_index = {p: j for j, p in enumerate(basis)}
    for ci, cfg in enumerate(configs):
        surviving = [p for p in basis if commutes_with_kick(p, cfg.frozen)]
        for patch in cfg.patches:
            locals_ = local_basis(len(patch))
            local_index = {p: k for k, p in enumerate(locals_)}
            block = np.zeros((len(locals_), len(basis)))
            for p in surviving:
                hit = _term_on_patch(p, patch, cfg.frozen)
                if hit is None:
                    continue
                sign, local = hit
                block[local_index[local], col_index[p]] += sign
            blocks.append(block)
            rows.extend((ci, patch, lp) for lp in locals_)
    matrix = np.vstack(blocks)
    rank = np.linalg.matrix_rank(matrix)
    if rank < len(basis):
        raise InternalError(f"contamination model has rank {rank} < {len(basis)} unknowns")
    return ContaminationModel(list(basis), rows, matrix)
