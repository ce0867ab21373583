"""Closed-form allocation, shortfall recourse and Myerson payments.

All arrays are in sorted-penalty order (LSE 1 has the smallest penalty).
Quantities are kW per period, prices $/kWh and money $.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bids import BidProfile
from .dist import GenerationDistribution

__all__ = [
    "Allocation",
    "Shortfall",
    "PaymentSchedule",
    "SettlementOutcome",
    "optimal_allocation",
    "allocation_for_bids",
    "shortfall_index",
    "optimal_shortfall",
    "shortfall_matrix",
    "stage2_cost",
    "expected_value_v",
    "objective",
    "stage1_gradient",
    "expected_shortfall",
    "myerson_payments",
    "welfare",
    "settle",
]


@dataclass(frozen=True, eq=False)
class Allocation:
    """Day-ahead contracted quantities with cached suffix sums.

    ``phi[j] = x[j] + ... + x[N-1]`` (0-based) and ``phi[N] = 0``.
    """

    x: np.ndarray
    phi: np.ndarray

    @classmethod
    def from_quantities(cls, x) -> "Allocation":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("allocation must be a 1-D array")
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValueError("allocation must be finite and nonnegative")
        phi = np.concatenate((np.cumsum(x[::-1])[::-1], [0.0]))
        return cls(x, phi)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def total(self) -> float:
        return float(self.phi[0])


def _as_allocation(x) -> Allocation:
    return x if isinstance(x, Allocation) else Allocation.from_quantities(x)


@dataclass(frozen=True)
class Shortfall:
    y: np.ndarray
    w: float
    k: int | None  # 1-based pivot LSE, None when generation covers the contracts


@dataclass(frozen=True)
class PaymentSchedule:
    p: np.ndarray
    per_unit: np.ndarray  # $/kWh, NaN where nothing is allocated
    discount: np.ndarray  # percent


@dataclass(frozen=True)
class SettlementOutcome:
    w: float
    shortfall: np.ndarray
    delivered: np.ndarray
    compensation: np.ndarray
    payments: np.ndarray
    lse_net_cash: np.ndarray  # compensation received minus payment made
    generator_payoff: float


def allocation_for_bids(c, pi, dist: GenerationDistribution) -> Allocation:
    """Closed-form allocation from raw sorted arrays, without validation."""
    c_ext = np.concatenate(([0.0], np.asarray(c, dtype=float)))
    p_ext = np.concatenate(([0.0], np.asarray(pi, dtype=float)))
    rho2 = np.diff(c_ext) / np.diff(p_ext)
    # suffix sums solve the first-order system phi_i = F^{-1}(rho2_i)
    phi = np.concatenate((np.asarray(dist.inv_cdf(rho2), dtype=float), [0.0]))
    return Allocation(phi[:-1] - phi[1:], phi)


def optimal_allocation(profile: BidProfile, dist: GenerationDistribution) -> Allocation:
    """Welfare-maximising day-ahead allocation ``x*`` for a validated profile."""
    return allocation_for_bids(profile.c, profile.pi, dist)


def shortfall_index(x, w: float) -> int | None:
    """Pivot LSE ``k`` (1-based) with ``phi_{k+1} <= w < phi_k``.

    Returns ``None`` when ``w >= sum(x)`` (no shortfall). The boundary
    ``w == x_N`` resolves to ``N``.
    """
    alloc = _as_allocation(x)
    if w < 0:
        raise ValueError("generation must be nonnegative")
    phi = alloc.phi
    n = alloc.n
    if w >= phi[0]:
        return None
    if w <= phi[n - 1]:
        return n
    # phi is nonincreasing; the first k with phi[k] <= w sits just past the pivot
    k = int(np.searchsorted(-phi, -w, side="left"))
    return k


def optimal_shortfall(x, w: float) -> Shortfall:
    """Minimum-penalty recourse: shortfall falls on the cheapest-penalty LSEs first."""
    alloc = _as_allocation(x)
    k = shortfall_index(alloc, w)
    y = np.zeros(alloc.n)
    if k is not None:
        y[: k - 1] = alloc.x[: k - 1]
        y[k - 1] = alloc.phi[k - 1] - w
    return Shortfall(y, float(w), k)


def shortfall_matrix(x, w) -> np.ndarray:
    """Vectorised ``y*`` for an array of generation draws, shape ``(len(w), N)``.

    Uses ``y_i = min(x_i, max(phi_i - w, 0))``, which coincides with the
    pivot construction of :func:`optimal_shortfall`.
    """
    alloc = _as_allocation(x)
    w = np.asarray(w, dtype=float)[:, None]
    return np.minimum(alloc.x, np.maximum(alloc.phi[:-1] - w, 0.0))


def stage2_cost(profile: BidProfile, x, w):
    """Real-time compensation ``Q(x; w) = sum_i pi_i y*_i``; vectorised over ``w``."""
    if np.ndim(w) == 0:
        return float(profile.pi @ optimal_shortfall(x, float(w)).y)
    return shortfall_matrix(x, w) @ profile.pi


def _F_G(alloc: Allocation, dist: GenerationDistribution):
    F = np.asarray(dist.cdf(alloc.phi), dtype=float)
    G = np.asarray(dist.partial_mean(alloc.phi), dtype=float)
    return F, G


def expected_shortfall(x, dist: GenerationDistribution) -> np.ndarray:
    """``E[y*_i]`` for every LSE."""
    alloc = _as_allocation(x)
    F, G = _F_G(alloc, dist)
    phi = alloc.phi
    return (
        alloc.x * F[1:]
        + phi[:-1] * F[:-1]
        - phi[:-1] * F[1:]
        - G[:-1]
        + G[1:]
    )


def expected_value_v(profile: BidProfile, x, dist: GenerationDistribution) -> float:
    """Expected real-time compensation ``V(x) = E[Q(x; w)]``."""
    pi = profile.pi
    alloc = _as_allocation(x)
    F, G = _F_G(alloc, dist)
    phi = alloc.phi
    v = (
        np.sum(pi * alloc.x * F[1:])
        + np.sum(pi * phi[:-1] * F[:-1])
        - np.sum(pi * phi[:-1] * F[1:])
        - np.sum(pi * G[:-1])
        + np.sum(pi * G[1:])
    )
    return float(v)


def objective(profile: BidProfile, x, dist: GenerationDistribution) -> float:
    """Stage-one cost ``h(x) = -c.x + V(x)`` (negated welfare)."""
    alloc = _as_allocation(x)
    return float(-profile.c @ alloc.x) + expected_value_v(profile, alloc, dist)


def stage1_gradient(profile: BidProfile, x, dist: GenerationDistribution) -> np.ndarray:
    """Exact gradient of ``h``: ``-c_i + sum_{j<=i} (pi_j - pi_{j-1}) F(phi_j)``."""
    alloc = _as_allocation(x)
    F = np.asarray(dist.cdf(alloc.phi[:-1]), dtype=float)
    return -profile.c + np.cumsum(np.diff(profile.pi_ext) * F)


def welfare(profile: BidProfile, x, dist: GenerationDistribution) -> float:
    return -objective(profile, x, dist)


def myerson_payments(profile: BidProfile, dist: GenerationDistribution) -> PaymentSchedule:
    """Truthful payments for the closed-form allocation.

    Each LSE pays its bid value ``c_i x*_i`` less a rebate built from
    ``G(F^{-1}(.))`` at its own ratio and its neighbours'.
    """
    r = profile.ratios
    x = optimal_allocation(profile, dist).x
    p_ext = profile.pi_ext
    n = profile.n
    dpi = np.diff(p_ext)  # pi_i - pi_{i-1}
    H2 = np.asarray(dist.g_of_inv_cdf(r.rho2), dtype=float)
    pay = profile.c * x - dpi * H2
    if n > 1:
        H1 = np.asarray(dist.g_of_inv_cdf(r.rho1[:-1]), dtype=float)
        Hc = np.asarray(dist.g_of_inv_cdf(r.rho_cvx[:-1]), dtype=float)
        span = p_ext[2:] - p_ext[:-2]  # pi_{i+1} - pi_{i-1}
        pay[:-1] += span * Hc - dpi[1:] * H1
    value = profile.c * x
    with np.errstate(invalid="ignore", divide="ignore"):
        per_unit = np.where(x > 0, pay / x, np.nan)
        discount = np.where(value > 0, 100.0 * (value - pay) / value, 0.0)
    return PaymentSchedule(pay, per_unit, discount)


def settle(profile: BidProfile, x, payments, w: float) -> SettlementOutcome:
    """Realised cash flows for one generation outcome ``w``."""
    alloc = _as_allocation(x)
    p = np.asarray(payments.p if isinstance(payments, PaymentSchedule) else payments, dtype=float)
    y = optimal_shortfall(alloc, w).y
    comp = profile.pi * y
    return SettlementOutcome(
        w=float(w),
        shortfall=y,
        delivered=alloc.x - y,
        compensation=comp,
        payments=p,
        lse_net_cash=comp - p,
        generator_payoff=float(p.sum() - comp.sum()),
    )
