"""Exact statevector dynamics for Pauli-sum Hamiltonians on up to ~14 qubits.

States are plain complex numpy vectors of length ``2**n`` in the package-wide
tensor order (qubit 0 = most significant bit). Hamiltonians are never
materialized as dense ``2**n x 2**n`` matrices here; a :class:`PauliOperator`
groups terms by their bit-flip pattern, so ``H @ psi`` is a handful of
permuted elementwise products.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal, expm

from .errors import InputError, NumericError
from .pauli import PauliHamiltonian, PauliString, to_dense

_DEFAULT_TOL = 1e-12


def _masks(p: PauliString) -> tuple[int, int, int]:
    n = p.n_qubits
    x = z = 0
    n_y = 0
    for q, ch in enumerate(p.ops):
        bit = 1 << (n - 1 - q)
        if ch in "XY":
            x |= bit
        if ch in "ZY":
            z |= bit
        n_y += ch == "Y"
    return x, z, n_y


def _parity(values: np.ndarray) -> np.ndarray:
    """(-1) ** popcount(values), elementwise."""
    return 1 - 2 * (np.bitwise_count(values) & 1).astype(np.int8)


class PauliOperator:
    """Matrix-free linear operator for a real Pauli sum.

    Terms sharing the same X/Y pattern act as one diagonal followed by the
    same basis permutation, so ``matvec`` costs one gather per distinct flip
    mask.
    """

    def __init__(self, h: PauliHamiltonian | Iterable[tuple[PauliString, complex]], n_qubits: int | None = None):
        if isinstance(h, PauliHamiltonian):
            n_qubits = h.n_qubits
            items = list(h.terms.items())
        else:
            items = list(h)
            if n_qubits is None:
                if not items:
                    raise InputError("n_qubits required for an empty operator")
                n_qubits = items[0][0].n_qubits
        self.n_qubits = n_qubits
        self.dim = 2**n_qubits
        self.norm_upper = float(sum(abs(c) for _, c in items))
        idx = np.arange(self.dim, dtype=np.int64)
        diagonals: dict[int, np.ndarray] = {}
        for p, c in items:
            if p.n_qubits != n_qubits:
                raise InputError(f"term {p} does not act on {n_qubits} qubits")
            x, z, n_y = _masks(p)
            # (P psi)[c] = i**nY * (-1)**popcount((c ^ x) & z) * psi[c ^ x]
            d = (c * 1j**n_y) * _parity((idx ^ x) & z)
            if x in diagonals:
                diagonals[x] = diagonals[x] + d
            else:
                diagonals[x] = d.astype(complex)
        self._blocks = [(x, d, idx ^ x) for x, d in sorted(diagonals.items())]

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        if psi.shape[0] != self.dim:
            raise InputError(f"state has dimension {psi.shape[0]}, operator expects {self.dim}")
        out = np.zeros(psi.shape, dtype=complex)
        for x, d, perm in self._blocks:
            if x == 0:
                out += d * psi
            else:
                out += d * psi[perm]
        return out

    __matmul__ = matvec


def apply_hamiltonian(h: PauliHamiltonian | PauliOperator, psi: np.ndarray) -> np.ndarray:
    """``H |psi>`` computed term-by-term."""
    op = h if isinstance(h, PauliOperator) else PauliOperator(h)
    return op.matvec(np.asarray(psi, dtype=complex))


def _lanczos_step(op: PauliOperator, psi: np.ndarray, dt: float, tol: float, max_dim: int):
    """One Krylov step of ``exp(-i H dt) psi``; returns (result, error estimate)."""
    beta = np.linalg.norm(psi)
    if beta == 0.0:
        return psi.copy(), 0.0
    basis = np.empty((max_dim + 1, psi.shape[0]), dtype=complex)
    alpha = np.zeros(max_dim)
    offdiag = np.zeros(max_dim)
    basis[0] = psi / beta
    err = np.inf
    for j in range(max_dim):
        w = op.matvec(basis[j])
        alpha[j] = np.vdot(basis[j], w).real
        # full reorthogonalization; Krylov dimension is small
        w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        offdiag[j] = np.linalg.norm(w)
        m = j + 1
        if m == 1:
            evals, evecs = np.array([alpha[0]]), np.ones((1, 1))
        else:
            evals, evecs = eigh_tridiagonal(alpha[:m], offdiag[: m - 1])
        coeffs = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        err = beta * offdiag[j] * abs(coeffs[-1]) * dt
        if offdiag[j] < 1e-14 or err <= tol:
            return beta * (coeffs @ basis[:m]), err
        basis[j + 1] = w / offdiag[j]
    return beta * (coeffs @ basis[:m]), err


def evolve(
    h: PauliHamiltonian | PauliOperator,
    t: float,
    psi: np.ndarray,
    tol: float = _DEFAULT_TOL,
    krylov_dim: int = 30,
    max_halvings: int = 30,
) -> np.ndarray:
    """``exp(-i H t) |psi>`` by adaptive Lanczos stepping.

    The time interval is split into sub-steps small enough that each Krylov
    projection meets its share of ``tol``.
    """
    if not 0 < tol <= 1e-6:
        raise InputError("tol must lie in (0, 1e-6]")
    op = h if isinstance(h, PauliOperator) else PauliOperator(h)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (op.dim,):
        raise InputError(f"state has shape {psi.shape}, expected ({op.dim},)")
    if t == 0 or op.norm_upper == 0:
        return psi.copy()
    if not np.isfinite(t * op.norm_upper):
        raise InputError("t * ||H|| must be finite")
    norm0 = np.linalg.norm(psi)
    sign = np.sign(t)
    remaining = abs(t)
    dt = min(remaining, 8.0 / op.norm_upper) if op.norm_upper * remaining > 8.0 else remaining
    halvings = 0
    out = psi
    while remaining > 0:
        dt = min(dt, remaining)
        share = tol * dt / abs(t)
        trial, err = _lanczos_step(op, out, sign * dt, share, krylov_dim)
        if err > share:
            halvings += 1
            if halvings > max_halvings:
                raise NumericError("Krylov propagator did not converge", residual=err, dt=dt)
            dt /= 2
            continue
        out = trial
        remaining -= dt
    drift = abs(np.linalg.norm(out) - norm0)
    if drift > 10 * tol + 1e-13 * np.sqrt(op.dim):
        raise NumericError("norm drift exceeds tolerance", drift=drift)
    return out


@dataclass(frozen=True)
class KickSpec:
    """Z-type kick on the ``frozen`` qubits: the product of Z over that set."""

    n_qubits: int
    frozen: frozenset[int] = field(default_factory=frozenset)
    xi: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "frozen", frozenset(self.frozen))
        if any(not 0 <= q < self.n_qubits for q in self.frozen):
            raise InputError("frozen qubit out of range")

    @property
    def m(self) -> int:
        """Number of Zeno subspaces (parity sectors of the kick)."""
        return 2 if self.frozen else 1

    @cached_property
    def diagonal(self) -> np.ndarray:
        mask = sum(1 << (self.n_qubits - 1 - q) for q in self.frozen)
        return _parity(np.arange(2**self.n_qubits, dtype=np.int64) & mask).astype(float)


def _back_kick(kick: KickSpec, r: int, psi: np.ndarray, elide_backkick: bool) -> np.ndarray:
    if elide_backkick:
        if r % 2:
            raise InputError("back-kick elision requires an even number of kicks")
        return psi
    # (Z^dagger)^r is the identity for even r and Z itself for odd r
    return kick.diagonal * psi if r % 2 else psi


def kicked_evolve(
    h: PauliHamiltonian | PauliOperator,
    kick: KickSpec,
    T: float,
    r: int,
    psi: np.ndarray,
    elide_backkick: bool = False,
    tol: float = _DEFAULT_TOL,
) -> np.ndarray:
    """Apply ``(U_kick^dag)^r (U_kick exp(-i H T/r))^r`` to ``psi``."""
    if r < 1:
        raise InputError("r must be >= 1")
    if elide_backkick and r % 2:
        raise InputError("back-kick elision requires an even number of kicks")
    op = h if isinstance(h, PauliOperator) else PauliOperator(h)
    if not kick.frozen:
        return evolve(op, T, psi, tol=tol)
    out = np.asarray(psi, dtype=complex)
    for _ in range(r):
        out = kick.diagonal * evolve(op, T / r, out, tol=tol / r)
    return _back_kick(kick, r, out, elide_backkick)


class _PauliRotation:
    """``exp(-i theta P)`` for a single Pauli string."""

    def __init__(self, p: PauliString, coeff: float):
        self.op = PauliOperator([(p, 1.0)], p.n_qubits)
        self.coeff = coeff

    def apply(self, psi: np.ndarray, dt: float) -> np.ndarray:
        theta = self.coeff * dt
        return np.cos(theta) * psi - 1j * np.sin(theta) * self.op.matvec(psi)


def trotter_layers(h: PauliHamiltonian) -> list[_PauliRotation]:
    """First-order product ordering: single-qubit rotations, then multi-qubit ones."""
    singles = [(p, c) for p, c in h.terms.items() if p.weight == 1]
    multis = [(p, c) for p, c in h.terms.items() if p.weight > 1]
    return [_PauliRotation(p, c) for p, c in singles + multis]


def trotter_kicked_evolve(
    h: PauliHamiltonian,
    kick: KickSpec,
    T: float,
    r: int,
    psi: np.ndarray,
    elide_backkick: bool = False,
) -> np.ndarray:
    """``r`` first-order Trotter steps of length ``T/r``, each followed by the kick."""
    if r < 1:
        raise InputError("r must be >= 1")
    if elide_backkick and r % 2:
        raise InputError("back-kick elision requires an even number of kicks")
    rotations = trotter_layers(h)
    dt = T / r
    out = np.asarray(psi, dtype=complex)
    for _ in range(r):
        for rot in rotations:
            out = rot.apply(out, dt)
        if kick.frozen:
            out = kick.diagonal * out
    if not kick.frozen:
        return out
    return _back_kick(kick, r, out, elide_backkick)


def reduced_density(psi: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Partial trace of ``|psi><psi|`` onto ``qubits`` (kept in the given order)."""
    psi = np.asarray(psi)
    n = int(round(np.log2(psi.shape[0])))
    qubits = list(qubits)
    if len(qubits) > 4 or len(set(qubits)) != len(qubits) or any(not 0 <= q < n for q in qubits):
        raise InputError(f"invalid subsystem {qubits} for {n} qubits")
    rest = [q for q in range(n) if q not in qubits]
    amp = np.transpose(psi.reshape((2,) * n), qubits + rest).reshape(2 ** len(qubits), -1)
    return amp @ amp.conj().T


def product_state(single_qubit_states: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, [np.asarray(s, dtype=complex) for s in single_qubit_states])


def basis_state(n_qubits: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def dense_sequence_unitary(
    h: PauliHamiltonian,
    kick: KickSpec,
    T: float,
    r: int,
    h_zeno: PauliHamiltonian | None = None,
):
    """Dense ``V_r(T)``; with ``h_zeno`` also returns ``exp(-i H_Z T)``.

    Validation-scale only (at most 10 qubits).
    """
    if h.n_qubits > 10:
        raise InputError("dense sequence unitaries are capped at 10 qubits")
    step = expm(-1j * to_dense(h) * T / r)
    kd = kick.diagonal
    one_round = kd[:, None] * step
    v = np.linalg.matrix_power(one_round, r)
    if r % 2:
        v = kd[:, None] * v
    if h_zeno is None:
        return v
    uz = expm(-1j * to_dense(h_zeno) * T) if h_zeno.terms else np.eye(2**h.n_qubits, dtype=complex)
    return v, uz
