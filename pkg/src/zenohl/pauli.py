"""Pauli strings, Pauli-sum Hamiltonians and their matrix realizations.

Tensor-order convention: qubit 0 is the leftmost letter of a Pauli string and
the most significant factor of every Kronecker product (and the most
significant bit of a computational-basis index).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, NumericError

LETTERS = "IXYZ"

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-letter products: (a, b) -> (phase, a*b)
_LETTER_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, stored as a letter string like ``"IXZI"``."""

    ops: str

    def __post_init__(self):
        if not self.ops or any(ch not in LETTERS for ch in self.ops):
            raise InputError(f"invalid Pauli string {self.ops!r}")

    @classmethod
    def from_sparse(cls, n_qubits: int, letters: Mapping[int, str]) -> "PauliString":
        """Build from ``{qubit: letter}``, identity elsewhere."""
        ops = ["I"] * n_qubits
        for q, ch in letters.items():
            if not 0 <= q < n_qubits:
                raise InputError(f"qubit {q} out of range for {n_qubits} qubits")
            ops[q] = ch
        return cls("".join(ops))

    @property
    def n_qubits(self) -> int:
        return len(self.ops)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, ch in enumerate(self.ops) if ch != "I")

    @property
    def weight(self) -> int:
        return len(self.ops) - self.ops.count("I")

    def is_identity(self) -> bool:
        return self.weight == 0

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Letters on ``qubits`` (in that order) as a shorter string."""
        return PauliString("".join(self.ops[q] for q in qubits))

    def embed(self, qubits: Sequence[int], n_qubits: int) -> "PauliString":
        """Inverse of :meth:`restrict`: place this string's letters on ``qubits``."""
        if len(qubits) != self.n_qubits:
            raise InputError("embedding length mismatch")
        return PauliString.from_sparse(n_qubits, dict(zip(qubits, self.ops)))

    def label(self) -> str:
        """Compact label such as ``X0Z1``; ``I`` for the identity."""
        parts = [f"{ch}{i}" for i, ch in enumerate(self.ops) if ch != "I"]
        return "".join(parts) or "I"

    def __str__(self):
        return self.ops


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, p)`` with ``a @ b == phase * p`` and phase in {±1, ±i}."""
    if a.n_qubits != b.n_qubits:
        raise InputError(f"length mismatch: {a.n_qubits} vs {b.n_qubits}")
    phase = 1 + 0j
    letters = []
    for x, y in zip(a.ops, b.ops):
        ph, ch = _LETTER_PRODUCT[(x, y)]
        phase *= ph
        letters.append(ch)
    return phase, PauliString("".join(letters))


def commutes_with_kick(term: PauliString, frozen: Iterable[int]) -> bool:
    """True iff ``term`` commutes with the product of Z over ``frozen``.

    That is the case exactly when an even number of X/Y letters sit on frozen qubits.
    """
    flips = sum(1 for q in frozen if term.ops[q] in "XY")
    return flips % 2 == 0


@dataclass
class PauliHamiltonian:
    """Real linear combination of non-identity Pauli strings on ``n_qubits`` qubits."""

    n_qubits: int
    terms: dict[PauliString, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InputError("n_qubits must be positive")
        cleaned: dict[PauliString, float] = {}
        for p, c in self.terms.items():
            p = p if isinstance(p, PauliString) else PauliString(p)
            if p.n_qubits != self.n_qubits:
                raise InputError(f"term {p} does not act on {self.n_qubits} qubits")
            if p.is_identity():
                raise InputError("identity terms are not stored (traceless convention)")
            c = float(c)
            if c != 0.0:
                cleaned[p] = cleaned.get(p, 0.0) + c
        self.terms = {p: c for p, c in cleaned.items() if c != 0.0}

    @classmethod
    def from_labels(cls, n_qubits: int, terms: Mapping[str, float]) -> "PauliHamiltonian":
        return cls(n_qubits, {PauliString(k): v for k, v in terms.items()})

    def __len__(self):
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def coefficient(self, p: PauliString) -> float:
        return self.terms.get(p, 0.0)

    def coefficient_vector(self, basis: Sequence[PauliString]) -> np.ndarray:
        return np.array([self.terms.get(p, 0.0) for p in basis])

    def is_geometrically_2local(self) -> bool:
        for p in self.terms:
            s = sorted(p.support)
            if len(s) > 2 or (len(s) == 2 and s[1] - s[0] > 1):
                return False
        return True

    def __add__(self, other: "PauliHamiltonian") -> "PauliHamiltonian":
        if other.n_qubits != self.n_qubits:
            raise InputError("qubit count mismatch")
        terms = dict(self.terms)
        for p, c in other.terms.items():
            terms[p] = terms.get(p, 0.0) + c
        return PauliHamiltonian(self.n_qubits, terms)

    def scaled(self, factor: float) -> "PauliHamiltonian":
        return PauliHamiltonian(self.n_qubits, {p: factor * c for p, c in self.terms.items()})

    # -- serialization -------------------------------------------------------
    def to_records(self) -> list[dict]:
        return [{"pauli": p.ops, "coeff": c} for p, c in sorted(self.terms.items())]

    @classmethod
    def from_records(cls, records: Sequence[Mapping], n_qubits: int | None = None) -> "PauliHamiltonian":
        if n_qubits is None:
            if not records:
                raise InputError("cannot infer qubit count from an empty record list")
            n_qubits = len(records[0]["pauli"])
        terms: dict[PauliString, float] = {}
        for rec in records:
            p = PauliString(rec["pauli"])
            terms[p] = terms.get(p, 0.0) + float(rec["coeff"])
        return cls(n_qubits, terms)

    def dumps(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "terms": self.to_records()}, indent=1)

    @classmethod
    def loads(cls, text: str) -> "PauliHamiltonian":
        data = json.loads(text)
        return cls.from_records(data["terms"], data["n_qubits"])


def to_dense(obj: PauliHamiltonian | PauliString, qubits: Sequence[int] | None = None) -> np.ndarray:
    """Dense matrix of a Pauli string or Hamiltonian on the ordered ``qubits`` subset."""
    n = obj.n_qubits
    qubits = list(range(n)) if qubits is None else list(qubits)
    if len(qubits) > 14:
        raise InputError("dense realization capped at 14 qubits")
    if isinstance(obj, PauliString):
        items = [(obj, 1.0)]
    else:
        items = list(obj.terms.items())
    chosen = set(qubits)
    dim = 2 ** len(qubits)
    out = np.zeros((dim, dim), dtype=complex)
    for p, c in items:
        if not p.support <= chosen:
            raise InputError(f"term {p} has support outside qubits {qubits}")
        out += c * reduce(np.kron, (PAULI_MATRICES[p.ops[q]] for q in qubits))
    return out


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a letter string, e.g. ``pauli_matrix("XZ")``."""
    return reduce(np.kron, (PAULI_MATRICES[ch] for ch in label))


def op_norm_upper(h: PauliHamiltonian) -> float:
    """Triangle-inequality bound on the spectral norm: the sum of absolute coefficients."""
    return float(sum(abs(c) for c in h.terms.values()))


def op_norm_exact(h: PauliHamiltonian) -> float:
    """Spectral norm by dense eigensolve (n_qubits <= 14)."""
    if not h.terms:
        return 0.0
    evals = np.linalg.eigvalsh(to_dense(h))
    return float(max(abs(evals[0]), abs(evals[-1])))


def chain_basis(n: int) -> list[PauliString]:
    """Canonical ordering of all geometrically 2-local Paulis on an open chain.

    Single-qubit letters X, Y, Z on every site come first (site-major), then
    the nine two-qubit products on every edge (edge-major, then letter pairs
    in XX, XY, ..., ZZ order).
    """
    if n < 1:
        raise InputError("n must be positive")
    basis = [PauliString.from_sparse(n, {i: a}) for i in range(n) for a in "XYZ"]
    basis += [
        PauliString.from_sparse(n, {i: a, i + 1: b})
        for i in range(n - 1)
        for a in "XYZ"
        for b in "XYZ"
    ]
    return basis


def local_basis(n: int) -> list[PauliString]:
    """All 4**n - 1 non-identity Pauli strings on ``n`` qubits, lexicographic in IXYZ."""
    return [PauliString("".join(t)) for t in itertools.product(LETTERS, repeat=n) if set(t) != {"I"}]


def random_2local_chain(n: int, rng_seed=None) -> PauliHamiltonian:
    """All 3n + 9(n-1) chain terms with i.i.d. uniform coefficients in [-1, 1]."""
    if n < 2:
        raise InputError("random_2local_chain needs n >= 2")
    rng = np.random.default_rng(rng_seed)
    basis = chain_basis(n)
    coeffs = rng.uniform(-1.0, 1.0, size=len(basis))
    return PauliHamiltonian(n, dict(zip(basis, coeffs.tolist())))


def ising_hamiltonian(n: int, h: float, J: float) -> PauliHamiltonian:
    """``h * sum_j Z_j + J * sum_j X_j X_{j+1}`` on an open chain."""
    terms = {PauliString.from_sparse(n, {j: "Z"}): h for j in range(n)}
    terms.update({PauliString.from_sparse(n, {j: "X", j + 1: "X"}): J for j in range(n - 1)})
    return PauliHamiltonian(n, terms)


def coeff_inner(h: np.ndarray, p: PauliString | str, hermitian_tol: float = 1e-9) -> float:
    """Normalized Hilbert-Schmidt projection ``Re Tr(p h) / 2**n``."""
    h = np.asarray(h)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > hermitian_tol:
        raise NumericError("operator is not Hermitian within tolerance")
    label = p.ops if isinstance(p, PauliString) else p
    if h.shape != (2 ** len(label),) * 2:
        raise InputError("dimension mismatch between operator and Pauli string")
    return float(np.real(np.trace(pauli_matrix(label) @ h)) / h.shape[0])


def pauli_coefficients(h: np.ndarray, basis: Sequence[PauliString] | None = None) -> dict[PauliString, float]:
    """Project a Hermitian matrix onto ``basis`` (default: every non-identity string)."""
    n = int(round(np.log2(h.shape[0])))
    basis = local_basis(n) if basis is None else basis
    return {p: coeff_inner(h, p) for p in basis}
