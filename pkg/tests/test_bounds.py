import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import lambertw

from zenohl.bounds import (
    ErrorBudget,
    bound_report,
    corollary_bound,
    lambert_w_minus1,
    patch_precondition,
    qpt_constant,
    required_copies,
    required_kicks,
    zeno_constant,
    zeno_constant_for,
)
from zenohl.dynamics import KickSpec
from zenohl.errors import InputError
from zenohl.pauli import PauliHamiltonian


def _bisect_w(x):
    lo, hi = -50.0, -1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (mid * math.exp(mid) - x) * (lo * math.exp(lo) - x) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_w_at_minus_point_one():
    assert lambert_w_minus1(-0.1) == pytest.approx(-3.577152063957297, abs=1e-14)
    assert lambert_w_minus1(-0.1) == pytest.approx(_bisect_w(-0.1), abs=1e-13)


def test_w_branch_point():
    assert lambert_w_minus1(-1 / math.e) == pytest.approx(-1.0, abs=1e-10)
    assert lambert_w_minus1(-1 / math.e + 1e-12) < -1.0


def test_w_matches_scipy_and_residual():
    rng = np.random.default_rng(0)
    xs = np.concatenate([-rng.uniform(0, 1 / math.e, 1000), -np.logspace(-300, -0.44, 50)])
    for x in xs:
        w = lambert_w_minus1(float(x))
        assert abs(w * math.exp(w) - x) <= 1e-14
        assert w <= -1.0
        assert w == pytest.approx(lambertw(x, -1).real, rel=1e-12)


@given(st.floats(-1 / math.e, -1e-300, exclude_max=False))
def test_w_residual_property(x):
    w = lambert_w_minus1(x)
    assert abs(w * math.exp(w) - x) <= 1e-14 * max(1.0, abs(w))


def test_w_domain():
    for x in (0.0, 0.1, -0.5):
        with pytest.raises(InputError):
            lambert_w_minus1(x)


def test_zeno_constant_example():
    assert zeno_constant(2.0, 0.01, 2, 0.5) == pytest.approx(3 * 0.5 * math.sqrt(2) * 4 * 1e-4)
    assert zeno_constant(2.0, 0.01) == pytest.approx(8.485281374238572e-4, rel=1e-12)


def test_zeno_constant_for_hamiltonian():
    h = PauliHamiltonian.from_labels(2, {"XX": 1.0, "ZI": 1.0})
    kick = KickSpec(2, {1})
    assert zeno_constant_for(h, kick, 0.1) == pytest.approx(zeno_constant(2.0, 0.1))
    assert zeno_constant_for(h, kick, 0.1, exact_norm=True) == pytest.approx(zeno_constant(math.sqrt(2), 0.1))


def test_required_kicks_example():
    req = required_kicks(1.0, 0.1)
    assert req.r == 36
    assert req.r_exact == pytest.approx(35.77152063957297, abs=1e-12)
    assert req.r_approx == pytest.approx(10 * (math.log(10) + math.log(math.log(10))))
    assert req.r >= req.r_approx
    assert not req.vacuous


def test_required_kicks_is_minimal():
    for c_z, eps in [(1.0, 0.1), (0.2, 0.01), (5.0, 0.3), (1.0, 1e-4)]:
        r = required_kicks(c_z, eps).r
        assert c_z * math.log(r) / r <= eps
        assert c_z * math.log(r - 1) / (r - 1) > eps


def test_required_kicks_multiplier_and_vacuous():
    assert required_kicks(1.0, 0.1, multiplier=2).r > required_kicks(1.0, 0.1).r
    vac = required_kicks(0.1, 0.1)
    assert vac.vacuous and vac.r == 1
    with pytest.raises(InputError):
        required_kicks(1.0, 0.0)


def test_qpt_constant():
    assert qpt_constant(1) == 384
    assert qpt_constant(2) == 55296


def test_required_copies_example():
    assert required_copies(2, 0.1, 0.01) == 56127363
    assert required_copies(2, 0.1, 0.01) == math.ceil(5529600 * math.log(25600))
    with pytest.raises(InputError):
        required_copies(2, 0.0, 0.01)


def test_corollary_bound():
    assert corollary_bound(1.0, 0.02, 0.01) == pytest.approx(0.09425, abs=1e-5)
    with pytest.raises(InputError):
        corollary_bound(1.0, 0.02, 0.01, precondition=False)
    assert patch_precondition(0.3, 1.0) and not patch_precondition(0.4, 1.0)


def test_error_budget():
    b = ErrorBudget.split(0.1, 0.01)
    assert b.epsilon_z == b.epsilon_qpt == pytest.approx(0.05)
    assert b.epsilon == pytest.approx(0.1)
    with pytest.raises(InputError):
        ErrorBudget(0.0, 0.1, 0.1)


@pytest.mark.parametrize("n_p", [2, 5, 9])
def test_aggregate_budget_exceeds_per_patch(n_p):
    rep = bound_report(63.0, 0.01, 0.1, 0.01, n_c=3, n_p=n_p)
    assert not rep.r_vacuous
    assert rep.C_QPT == 55296
    assert rep.aggregate_N_copies_required > rep.N_copies_required
    assert rep.aggregate_r_required > rep.r_required
    d = rep.to_dict()
    assert d["C_Z"] == pytest.approx(zeno_constant(63.0, 0.01))
