"""Resource calculators: Zeno constant, kick counts, QPT copy counts, coefficient bounds."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

from .dynamics import KickSpec
from .errors import InputError
from .pauli import PauliHamiltonian, op_norm_exact, op_norm_upper

_INV_E = math.exp(-1.0)


def lambert_w_minus1(x: float, rtol: float = 1e-15, max_iter: int = 100) -> float:
    """Lower real branch ``W_{-1}(x)`` for ``x`` in ``[-1/e, 0)`` by Halley iteration."""
    if not -_INV_E - 1e-16 <= x < 0:
        raise InputError(f"W_-1 is real only on [-1/e, 0); got {x}")
    if x < -0.25:
        # branch-point series in p = -sqrt(2 (e x + 1))
        p = -math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
        if abs(p) < 1e-4:
            # series truncation error O(p^4) is below double precision here
            return w
    else:
        # log-log asymptotic
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= rtol * abs(w):
            break
    return min(w, -1.0)


def zeno_constant(norm: float, T: float, m: int = 2, xi: float = 0.5) -> float:
    """``3 xi sqrt(m) ||H||^2 T^2``."""
    if T < 0:
        raise InputError("T must be non-negative")
    return 3.0 * xi * math.sqrt(m) * norm**2 * T**2


def zeno_constant_for(h: PauliHamiltonian, kick: KickSpec, T: float, exact_norm: bool = False) -> float:
    """Zeno constant of ``h`` under ``kick``; certified norm bound unless ``exact_norm``."""
    norm = op_norm_exact(h) if exact_norm else op_norm_upper(h)
    return zeno_constant(norm, T, kick.m, kick.xi)


class KickRequirement(NamedTuple):
    r: int
    r_exact: float
    r_approx: float
    vacuous: bool


def required_kicks(c_z: float, eps_z: float, multiplier: float = 1.0) -> KickRequirement:
    """Smallest ``r`` with ``K ln r / r <= eps_z``, ``K = multiplier * c_z``.

    ``multiplier`` is 1 for the bare Zeno bound, 2 for the per-patch channel
    budget and ``2 * n_c`` for the all-configurations budget. When
    ``eps_z / K >= 1/e`` the bound holds for every ``r`` and the result is
    flagged vacuous with ``r = 1``.
    """
    if eps_z <= 0:
        raise InputError("eps_z must be positive")
    k = multiplier * c_z
    if k <= 0 or eps_z / k >= _INV_E:
        return KickRequirement(1, 1.0, float("nan"), True)
    ratio = k / eps_z
    r_exact = -ratio * lambert_w_minus1(-1.0 / ratio)
    r_approx = ratio * (math.log(ratio) + math.log(math.log(ratio))) if ratio > math.e else float("nan")
    return KickRequirement(max(1, math.ceil(r_exact)), r_exact, r_approx, False)


def qpt_constant(n: int) -> float:
    """``(8/3) 3^(2n) 2^(4n)``."""
    if n < 1:
        raise InputError("n must be >= 1")
    return 8 * 9**n * 16**n / 3


def required_copies(n: int, eps_qpt: float, delta: float, n_c: int = 1, n_p: int = 1) -> int:
    """Copies for diamond error ``eps_qpt`` w.p. ``1 - delta``.

    With ``n_c``/``n_p`` set this is the union-bound budget over all patches.
    """
    if not (0 < eps_qpt < 1 and 0 < delta < 1):
        raise InputError("eps_qpt and delta must lie in (0, 1)")
    return math.ceil(n_c**2 * qpt_constant(n) / eps_qpt**2 * math.log(n_p * 2 ** (4 * n) / delta))


def corollary_bound(T: float, diamond_gap_upper: float, eps: float, precondition: bool = True) -> float:
    """Coefficient-error bound ``(pi / T) (gap + eps)``.

    Only meaningful when both patch Hamiltonians satisfy ``||H|| T <= 1/pi``;
    pass ``precondition=False`` to signal that they do not.
    """
    if T <= 0:
        raise InputError("T must be positive")
    if not precondition:
        raise InputError("coefficient bound requires ||H_patch|| T <= 1/pi")
    return math.pi / T * (diamond_gap_upper + eps)


def patch_precondition(h_norm: float, T: float) -> bool:
    return h_norm * T <= 1.0 / math.pi


@dataclass
class ErrorBudget:
    epsilon_z: float
    epsilon_qpt: float
    delta: float

    def __post_init__(self):
        for name in ("epsilon_z", "epsilon_qpt", "delta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise InputError(f"{name} must lie in (0, 1)")

    @property
    def epsilon(self) -> float:
        return self.epsilon_z + self.epsilon_qpt

    @classmethod
    def split(cls, epsilon: float, delta: float, zeno_fraction: float = 0.5) -> "ErrorBudget":
        return cls(epsilon * zeno_fraction, epsilon * (1 - zeno_fraction), delta)


@dataclass
class BoundReport:
    h_norm: float
    T: float
    n_patch: int
    epsilon: float
    epsilon_z: float
    epsilon_qpt: float
    delta: float
    C_Z: float
    C_QPT: float
    r_required: int
    r_approx: float
    r_vacuous: bool
    N_copies_required: int
    coeff_bound: float
    n_c: int
    n_p: int
    aggregate_r_required: int
    aggregate_N_copies_required: int

    def to_dict(self) -> dict:
        return asdict(self)


def bound_report(
    h_norm: float,
    T: float,
    epsilon: float,
    delta: float,
    n_patch: int = 2,
    n_c: int = 3,
    n_p: int = 1,
    zeno_fraction: float = 0.5,
    m: int = 2,
    xi: float = 0.5,
) -> BoundReport:
    """Per-patch and all-patch resource budgets for one ``(epsilon, delta)`` target."""
    budget = ErrorBudget.split(epsilon, delta, zeno_fraction)
    c_z = zeno_constant(h_norm, T, m, xi)
    kicks = required_kicks(c_z, budget.epsilon_z, multiplier=2)
    agg_kicks = required_kicks(c_z, budget.epsilon_z, multiplier=2 * n_c)
    return BoundReport(
        h_norm=h_norm,
        T=T,
        n_patch=n_patch,
        epsilon=budget.epsilon,
        epsilon_z=budget.epsilon_z,
        epsilon_qpt=budget.epsilon_qpt,
        delta=delta,
        C_Z=c_z,
        C_QPT=qpt_constant(n_patch),
        r_required=kicks.r,
        r_approx=kicks.r_approx,
        r_vacuous=kicks.vacuous,
        N_copies_required=required_copies(n_patch, budget.epsilon_qpt, delta),
        coeff_bound=corollary_bound(T, 0.0, budget.epsilon),
        n_c=n_c,
        n_p=n_p,
        aggregate_r_required=agg_kicks.r,
        aggregate_N_copies_required=required_copies(n_patch, budget.epsilon_qpt, delta, n_c, n_p),
    )
