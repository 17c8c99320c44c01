"""Patch-level process tomography and post-processing.

Conventions
-----------
* Vectorization is column stacking, ``<<A|B>> = Tr(A^dag B)``.
* The *transfer matrix* ``S`` satisfies ``vec(L(rho)) = S vec(rho)``; for a
  unitary channel it equals ``conj(U) kron U``. The outcome probabilities obey
  ``P = M S F`` with ``M`` stacking effect bras and ``F`` stacking fiducial kets.
* The *Choi matrix* is ``sum_ij |i><j| kron L(|i><j|)`` divided by ``d`` (unit
  trace); for a unitary channel it is ``|U>><<U| / d``.
* Fiducials per qubit, in order: Z+, Z-, X+, X-, Y+, Y-. Measurement bases per
  qubit, in order: X, Y, Z; outcome 0 is the +1 eigenvector. Multi-qubit
  indices are mixed-radix with qubit 0 most significant.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import NamedTuple

import numpy as np
from scipy.linalg import polar, schur

from .errors import InputError, InternalError, NumericError
from .pauli import coeff_inner, local_basis
from .zeno import PatchHamiltonian

_S2 = 1 / np.sqrt(2)
SINGLE_QUBIT_FIDUCIALS = np.array(
    [
        [1, 0],
        [0, 1],
        [_S2, _S2],
        [_S2, -_S2],
        [_S2, 1j * _S2],
        [_S2, -1j * _S2],
    ],
    dtype=complex,
)
FIDUCIAL_LABELS = ("Z+", "Z-", "X+", "X-", "Y+", "Y-")
BASIS_LABELS = "XYZ"
# rows are the eigenvectors of X, Y, Z (outcome 0 first)
_BASIS_VECTORS = {
    "X": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "Y": np.array([[_S2, 1j * _S2], [_S2, -1j * _S2]], dtype=complex),
    "Z": np.eye(2, dtype=complex),
}


def _check_n(n: int) -> None:
    if n not in (1, 2):
        raise InputError("patch tomography supports n = 1 or 2 qubits")


def _digits(index: int, base: int, n: int) -> list[int]:
    return [(index // base ** (n - 1 - k)) % base for k in range(n)]


def fiducial_state(n: int, index: int) -> np.ndarray:
    _check_n(n)
    if not 0 <= index < 6**n:
        raise InputError(f"fiducial index {index} out of range for n={n}")
    return reduce(np.kron, (SINGLE_QUBIT_FIDUCIALS[k] for k in _digits(index, 6, n)))


def basis_change(n: int, basis_index: int) -> np.ndarray:
    """Unitary whose rows are the measurement eigenvectors (as bras are conjugated)."""
    _check_n(n)
    if not 0 <= basis_index < 3**n:
        raise InputError(f"basis index {basis_index} out of range for n={n}")
    return reduce(np.kron, (_BASIS_VECTORS[BASIS_LABELS[k]] for k in _digits(basis_index, 3, n)))


def povm_effects(n: int, basis_index: int) -> list[np.ndarray]:
    """Rank-one projectors onto the product eigenbasis, indexed by outcome."""
    rows = basis_change(n, basis_index)
    return [np.outer(v, v.conj()) for v in rows]


@lru_cache(maxsize=None)
def _rotations(n: int) -> np.ndarray:
    # conj so that rot @ rho @ rot^dag has <v|rho|v> on the diagonal
    return np.stack([basis_change(n, b).conj() for b in range(3**n)])


def probabilities(rho: np.ndarray, n: int, trace_tol: float = 1e-9) -> np.ndarray:
    """Outcome probabilities ``Tr(E rho)`` for every basis; shape ``(3**n, 2**n)``."""
    _check_n(n)
    rho = np.asarray(rho)
    if abs(np.trace(rho) - 1) > trace_tol:
        raise InputError("density matrix trace differs from 1")
    rot = _rotations(n)
    p = np.einsum("bij,jk,bik->bi", rot, rho, rot.conj()).real
    return np.clip(p, 0.0, 1.0)


@lru_cache(maxsize=None)
def design_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(M, F)``: effect bras stacked by row, fiducial kets stacked by column."""
    _check_n(n)
    d = 2**n
    effects = [e for b in range(3**n) for e in povm_effects(n, b)]
    m = np.array([e.T.reshape(-1).conj() for e in effects])
    fids = []
    for j in range(6**n):
        psi = fiducial_state(n, j)
        fids.append(np.outer(psi, psi.conj()).T.reshape(-1))
    f = np.array(fids).T
    if np.linalg.matrix_rank(m) < d * d or np.linalg.matrix_rank(f) < d * d:
        raise InternalError("tomography design is not informationally complete")
    return m, f


def sample_counts(probs: np.ndarray, shots: int | None, rng) -> np.ndarray:
    """Multinomial draw per setting over the last axis.

    ``shots=None`` is the infinite-shot limit and returns the probabilities.
    """
    probs = np.asarray(probs, dtype=float)
    if shots is None:
        return probs.copy()
    if shots < 1:
        raise InputError("shots must be >= 1")
    rng = np.random.default_rng(rng)
    p = np.clip(probs, 0.0, None)
    p = p / p.sum(axis=-1, keepdims=True)
    return rng.multinomial(shots, p)


@dataclass
class TomographyRecord:
    """Per-patch tomography data indexed ``[fiducial, basis, outcome]``.

    ``data`` holds integer counts, or exact probabilities when ``shots`` is None.
    """

    patch: tuple[int, ...]
    n: int
    data: np.ndarray
    shots: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_n(self.n)
        self.patch = tuple(self.patch)
        expected = (6**self.n, 3**self.n, 2**self.n)
        if self.data.shape != expected:
            raise InputError(f"data shape {self.data.shape} != {expected}")
        if self.shots is not None and np.any(self.data.sum(axis=-1) != self.shots):
            raise InputError("counts per setting must sum to shots")

    @property
    def frequencies(self) -> np.ndarray:
        if self.shots is None:
            return self.data.astype(float)
        return self.data / self.shots

    @property
    def probability_matrix(self) -> np.ndarray:
        """``P_hat`` with rows ``(basis, outcome)`` and one column per fiducial."""
        f = self.frequencies
        return f.reshape(f.shape[0], -1).T

    def dumps(self) -> str:
        header = {"patch": list(self.patch), "n": self.n, "shots": self.shots, **self.meta}
        rows = []
        for (j, b, k), v in np.ndenumerate(self.data):
            rows.append([j, b, k, int(v) if self.shots is not None else float(v)])
        return json.dumps({"header": header, "rows": rows})

    @classmethod
    def loads(cls, text: str) -> "TomographyRecord":
        obj = json.loads(text)
        header = dict(obj["header"])
        patch = tuple(header.pop("patch"))
        n = header.pop("n")
        shots = header.pop("shots")
        dtype = float if shots is None else np.int64
        data = np.zeros((6**n, 3**n, 2**n), dtype=dtype)
        for j, b, k, v in obj["rows"]:
            data[j, b, k] = v
        return cls(patch, n, data, shots, header)


def linear_inversion(record: TomographyRecord) -> np.ndarray:
    """Least-squares transfer matrix from ``P_hat = M S F`` (Moore-Penrose inverses)."""
    m, f = design_matrices(record.n)
    return np.linalg.pinv(m) @ record.probability_matrix @ np.linalg.pinv(f)


def reshuffle(matrix: np.ndarray) -> np.ndarray:
    """Transfer matrix <-> unnormalized Choi matrix (an involution)."""
    d = int(round(np.sqrt(matrix.shape[0])))
    return matrix.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)


def transfer_to_choi(transfer: np.ndarray) -> np.ndarray:
    """Hermitized, unit-trace Choi matrix of a transfer matrix."""
    j = reshuffle(transfer)
    j = (j + j.conj().T) / 2
    tr = np.trace(j).real
    if tr <= 0:
        raise NumericError("Choi matrix has non-positive trace")
    return j / tr


def unitary_transfer(u: np.ndarray) -> np.ndarray:
    return np.kron(u.conj(), u)


def unitary_choi(u: np.ndarray) -> np.ndarray:
    v = vec(u)
    return np.outer(v, v.conj()) / u.shape[0]


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).T.reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.shape[0])))
    return np.asarray(v).reshape(d, d).T


def polar_unitary(a: np.ndarray) -> np.ndarray:
    u, _ = polar(a)
    return u


class UnitaryFit(NamedTuple):
    U: np.ndarray
    lambda_hat: float
    lambda_debiased: float
    iterations: int


def closest_unitary(
    choi: np.ndarray,
    init: np.ndarray | None = None,
    method: str = "iterative",
    tol: float = 1e-10,
    max_iter: int = 200,
) -> UnitaryFit:
    """Unitary maximizing ``<<U|choi|U>>`` and the implied depolarizing strength.

    ``method="rank1"`` stops at the polar factor of the leading eigenvector;
    ``"iterative"`` refines it with ``U <- polar(unvec(choi vec(U)))``.
    """
    choi = (choi + choi.conj().T) / 2
    choi = choi / np.trace(choi).real
    d = int(round(np.sqrt(choi.shape[0])))
    if init is None:
        _, evecs = np.linalg.eigh(choi)
        u = polar_unitary(unvec(evecs[:, -1]))
    else:
        u = polar_unitary(np.asarray(init, dtype=complex))
    it = 0
    if method == "iterative":
        for it in range(1, max_iter + 1):
            new = polar_unitary(unvec(choi @ vec(u)))
            step = np.linalg.norm(new - u)
            u = new
            if step <= tol:
                break
        else:
            raise NumericError("closest-unitary iteration did not converge", last=u, step=step)
    elif method != "rank1":
        raise InputError(f"unknown projection method {method!r}")
    v = vec(u)
    overlap = np.vdot(v, choi @ v).real
    lam = 1.0 - overlap / d
    return UnitaryFit(u, lam, lam / (1.0 - 1.0 / d**2), it)


def _centered_phases(u: np.ndarray):
    t, z = schur(u, output="complex")
    phases = np.angle(np.diag(t))
    s = np.sort(phases)
    gaps = np.diff(np.concatenate([s, [s[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    # the eigenvalues occupy the arc complementary to the largest gap
    start = s[(k + 1) % len(s)]
    center = start + (2 * np.pi - gaps[k]) / 2
    centered = np.angle(np.exp(1j * (phases - center)))
    return centered, z


def hamiltonian_from_unitary(
    u: np.ndarray,
    T: float,
    patch: tuple[int, ...] | None = None,
    branch_margin: float = 0.1,
) -> PatchHamiltonian:
    """Traceless ``H`` with ``u = exp(-i H T)`` up to a global phase.

    The unobservable global phase is chosen to center the eigenphases, then the
    principal logarithm is taken.
    """
    if T <= 0:
        raise InputError("T must be positive")
    phases, z = _centered_phases(np.asarray(u, dtype=complex))
    bad = np.abs(phases) >= np.pi - branch_margin
    if np.any(bad):
        raise NumericError(
            "eigenphase too close to the logarithm branch cut", phase=float(phases[bad][0])
        )
    h = (z * (-phases / T)) @ z.conj().T
    h = (h + h.conj().T) / 2
    d = h.shape[0]
    h -= np.trace(h).real / d * np.eye(d)
    n = int(round(np.log2(d)))
    patch = tuple(range(n)) if patch is None else tuple(patch)
    terms = {p: coeff_inner(h, p) for p in local_basis(n)}
    return PatchHamiltonian(patch, terms)


class DiamondBracket(NamedTuple):
    lower: float
    upper: float


def trace_norm(a: np.ndarray) -> float:
    a = (a + a.conj().T) / 2
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


def choi_bracket(choi_a: np.ndarray, choi_b: np.ndarray) -> DiamondBracket:
    """Generic bounds ``||J_A - J_B||_1 <= diamond <= d ||J_A - J_B||_1``."""
    if choi_a.shape != choi_b.shape:
        raise InputError("Choi matrices differ in dimension")
    d = int(round(np.sqrt(choi_a.shape[0])))
    lo = trace_norm(choi_a - choi_b)
    return DiamondBracket(lo, d * lo)


def unitary_diamond_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Exact diamond distance ``2 sqrt(1 - nu^2)`` between two unitary channels.

    ``nu`` is the distance from the origin to the convex hull of the
    eigenvalues of ``u^dag v``.
    """
    evals = np.linalg.eigvals(u.conj().T @ v)
    s = np.sort(np.angle(evals))
    gaps = np.diff(np.concatenate([s, [s[0] + 2 * np.pi]]))
    arc = 2 * np.pi - gaps.max()
    nu = 0.0 if arc >= np.pi else np.cos(arc / 2)
    return float(2 * np.sqrt(max(0.0, 1 - nu**2)))


def diamond_bracket(choi_a: np.ndarray, choi_b: np.ndarray, rank_tol: float = 1e-9) -> DiamondBracket:
    """Interval containing the diamond distance between two channels.

    Degenerates to the exact value when both Choi matrices are rank one
    (unitary channels).
    """
    bracket = choi_bracket(choi_a, choi_b)
    ea, va = np.linalg.eigh((choi_a + choi_a.conj().T) / 2)
    eb, vb = np.linalg.eigh((choi_b + choi_b.conj().T) / 2)
    if ea[-1] >= 1 - rank_tol and eb[-1] >= 1 - rank_tol:
        exact = unitary_diamond_distance(unvec(va[:, -1]), unvec(vb[:, -1]))
        return DiamondBracket(exact, exact)
    return bracket


@dataclass
class ChannelEstimate:
    """Everything reconstructed for one patch in one configuration."""

    patch: tuple[int, ...]
    transfer: np.ndarray
    choi: np.ndarray
    U_hat: np.ndarray
    H_patch: PatchHamiltonian
    lambda_hat: float
    lambda_debiased: float
    diamond_gap: DiamondBracket


def estimate_channel(record: TomographyRecord, T: float, method: str = "iterative") -> ChannelEstimate:
    """Linear inversion, unitary projection and matrix logarithm for one record."""
    transfer = linear_inversion(record)
    choi = transfer_to_choi(transfer)
    fit = closest_unitary(choi, method=method)
    h = hamiltonian_from_unitary(fit.U, T, record.patch)
    gap = choi_bracket(unitary_choi(fit.U), choi)
    return ChannelEstimate(
        record.patch, transfer, choi, fit.U, h, fit.lambda_hat, fit.lambda_debiased, gap
    )
