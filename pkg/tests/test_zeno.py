import itertools

import numpy as np
import pytest
from scipy.linalg import qr

from oracles import dense_h, projectors
from zenohl.dynamics import KickSpec
from zenohl.errors import InputError
from zenohl.pauli import PauliHamiltonian, PauliString, chain_basis, local_basis, pauli_coefficients, random_2local_chain
from zenohl.zeno import (
    build_contamination_model,
    expected_patch_hamiltonian,
    plan_configurations,
    zeno_project,
)


def _terms(h):
    return {p.ops: c for p, c in h.terms.items()}


def _sector_block(mat, n, frozen, keep):
    """Block of ``mat`` with every frozen qubit in |0>, as an operator on ``keep``.

    Qubits outside ``keep`` and ``frozen`` must be absent from the relevant
    support; they are fixed to |0> here and ignored.
    """
    idx = [i for i in range(2**n) if all(not (i >> (n - 1 - q)) & 1 for q in range(n) if q not in keep)]
    sub = mat[np.ix_(idx, idx)]
    return sub


def test_plan_n6_matches_worked_example():
    cfgs = plan_configurations(6)
    assert [c.offset for c in cfgs] == [0, 1, 2]
    assert cfgs[0].patches == ((0, 1), (3, 4)) and cfgs[0].frozen == {2, 5}
    assert cfgs[1].patches == ((1, 2), (4, 5)) and cfgs[1].frozen == {0, 3}
    assert cfgs[2].patches == ((0,), (2, 3), (5,)) and cfgs[2].frozen == {1, 4}
    assert cfgs[0].layout() == "[0 1] *2 [3 4] *5"


def test_plan_n8_offset2():
    cfg = plan_configurations(8)[2]
    assert cfg.frozen == {1, 4, 7}
    assert cfg.patches == ((0,), (2, 3), (5, 6))


@pytest.mark.parametrize("n", range(2, 16))
def test_plan_partitions_and_covers_every_edge(n):
    cfgs = plan_configurations(n)
    assert len(cfgs) == {2: 1, 3: 2}.get(n, 3)
    edges = set()
    for cfg in cfgs:
        covered = sorted(q for p in cfg.patches for q in p) + sorted(cfg.frozen)
        assert sorted(covered) == list(range(n))
        assert all(len(p) <= 2 for p in cfg.patches)
        for p in cfg.patches:
            assert list(p) == list(range(p[0], p[0] + len(p)))
            if len(p) == 2:
                assert p not in edges
                edges.add(p)
    assert edges == {(i, i + 1) for i in range(n - 1)}


def test_zeno_project_worked_example():
    h = PauliHamiltonian.from_labels(2, {"XX": 1.0, "ZZ": 0.5, "IY": 0.3})
    hz = zeno_project(h, KickSpec(2, {1}))
    assert _terms(hz) == {"ZZ": 0.5}
    dense = sum(p @ dense_h(_terms(h)) @ p for p in projectors(2, {1}))
    np.testing.assert_allclose(dense, dense_h({"ZZ": 0.5}), atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_zeno_project_exhaustive_against_dense(n):
    basis = chain_basis(n)
    for k in range(1, n + 1):
        for frozen in itertools.combinations(range(n), k):
            kick = KickSpec(n, set(frozen))
            projs = projectors(n, frozen)
            for p in basis:
                h = PauliHamiltonian(n, {p: 1.0})
                got = zeno_project(h, kick)
                dense = sum(q @ dense_h({p.ops: 1.0}) @ q for q in projs)
                ref = dense_h(_terms(got)) if got.terms else np.zeros_like(dense)
                np.testing.assert_allclose(ref, dense, atol=1e-14)


def test_expected_patch_contamination_example():
    h = PauliHamiltonian.from_labels(3, {"IXI": 0.3, "IXZ": 0.2})
    cfg = plan_configurations(3)[0]
    assert cfg.patches == ((0, 1),) and cfg.frozen == {2}
    got = expected_patch_hamiltonian(h, cfg, (0, 1))
    assert got.terms == {PauliString("IX"): pytest.approx(0.5)}
    # oracle: exact Zeno generator restricted to the frozen |0> sector
    hz = sum(p @ dense_h(_terms(h)) @ p for p in projectors(3, {2}))
    block = _sector_block(hz, 3, {2}, keep=(0, 1))
    coeffs = pauli_coefficients(block)
    assert coeffs[PauliString("IX")] == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_expected_patch_matches_sector_oracle(n, rng):
    h = random_2local_chain(n, rng)
    dense = dense_h(_terms(h))
    for cfg in plan_configurations(n):
        hz = sum(p @ dense @ p for p in projectors(n, cfg.frozen))
        idx = [i for i in range(2**n) if all(not (i >> (n - 1 - q)) & 1 for q in cfg.frozen)]
        block = hz[np.ix_(idx, idx)]
        # the sector block acts on all non-frozen qubits; patches are decoupled
        targets = [q for q in range(n) if q not in cfg.frozen]
        m = len(targets)
        for patch in cfg.patches:
            got = expected_patch_hamiltonian(h, cfg, patch).vector()
            pos = [targets.index(q) for q in patch]
            ref = []
            for lp in local_basis(len(patch)):
                ops = ["I"] * m
                for k, ch in zip(pos, lp.ops):
                    ops[k] = ch
                ref.append(np.real(np.trace(dense_h({"".join(ops): 1.0}) @ block)) / 2**m)
            np.testing.assert_allclose(got, ref, atol=1e-12)


def test_expected_patch_rejects_foreign_patch():
    h = random_2local_chain(6, 0)
    with pytest.raises(InputError):
        expected_patch_hamiltonian(h, plan_configurations(6)[0], (1, 2))


def test_contamination_row_example():
    model = build_contamination_model(3)
    k = model.rows.index((0, (0, 1), PauliString("IX")))
    row = model.matrix[k]
    nz = {model.basis[j].ops: v for j, v in enumerate(row) if v}
    assert nz == {"IXI": 1.0, "IXZ": 1.0}


def test_contamination_rank_n9():
    model = build_contamination_model(9)
    assert model.matrix.shape[1] == 99
    _, r, _ = qr(model.matrix, pivoting=True)
    diag = np.abs(np.diag(r))
    assert np.sum(diag > 1e-10 * diag[0]) == 99


@pytest.mark.parametrize("n", [2, 3, 4, 7, 12])
def test_contamination_ideal_and_combine(n, rng):
    h = random_2local_chain(n, rng)
    model = build_contamination_model(n)
    c = h.coefficient_vector(model.basis)
    learned = model.ideal(c)
    configs = plan_configurations(n)
    for (ci, patch), sl in model.row_slices().items():
        ref = expected_patch_hamiltonian(h, configs[ci], patch).vector()
        np.testing.assert_allclose(learned[sl], ref, atol=1e-12)
    np.testing.assert_allclose(model.combine(learned), c, atol=1e-12)
