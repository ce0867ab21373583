"""Generator-side economics and mechanism-property audits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bids import BidProfile, diagnose
from .dist import GenerationDistribution
from .mechanism import (
    allocation_for_bids,
    myerson_payments,
    optimal_allocation,
    shortfall_matrix,
)
from .oracle import mc_expectation

__all__ = [
    "ProfitEstimate",
    "BoundReport",
    "ConvexityCheck",
    "DsicReport",
    "expected_profit_mc",
    "profit_lower_bound",
    "check_cdf_convexity",
    "budget_balance_condition",
    "dsic_audit",
    "ir_audit",
]


@dataclass(frozen=True)
class ProfitEstimate:
    estimate: float
    stderr: float
    n: int
    seed: int
    shards: int
    payments_total: float
    compensation_mean: float


@dataclass(frozen=True)
class ConvexityCheck:
    ok: bool
    violation_point: float | None
    upper: float


@dataclass(frozen=True)
class BoundReport:
    terms: np.ndarray
    total: float
    hypothesis: ConvexityCheck

    @property
    def hypothesis_ok(self) -> bool:
        return self.hypothesis.ok

    @property
    def status(self) -> str:
        return "verified" if self.hypothesis.ok else "informational"


@dataclass
class DsicReport:
    """Utility sweep over deviating bids for one LSE (sorted index ``lse``)."""

    lse: int
    true_value: float
    grid: np.ndarray
    utility: np.ndarray  # NaN where the deviation invalidates the profile
    truthful_utility: float
    grid_step: float
    skipped: list = field(default_factory=list)

    @property
    def valid(self) -> np.ndarray:
        return ~np.isnan(self.utility)

    @property
    def argmax(self) -> float:
        u = np.where(self.valid, self.utility, -np.inf)
        return float(self.grid[int(np.argmax(u))])

    @property
    def min_regret(self) -> float:
        """``min_s U(c_i) - U(s)``; nonnegative under truthfulness."""
        return float(np.min(self.truthful_utility - self.utility[self.valid]))

    @property
    def argmax_within_step(self) -> bool:
        return abs(self.argmax - self.true_value) <= self.grid_step * (1 + 1e-9)


def expected_profit_mc(
    profile: BidProfile,
    dist: GenerationDistribution,
    n: int,
    seed: int,
    shards: int = 1,
    workers: int = 1,
) -> ProfitEstimate:
    """Generator profit: exact payments minus Monte-Carlo mean compensation."""
    x = optimal_allocation(profile, dist)
    pay = float(myerson_payments(profile, dist).p.sum())
    est = mc_expectation(
        lambda w: shortfall_matrix(x, w) @ profile.pi, dist, n, seed, shards, workers
    )
    return ProfitEstimate(
        estimate=pay - est.mean,
        stderr=est.stderr,
        n=n,
        seed=seed,
        shards=est.shards,
        payments_total=pay,
        compensation_mean=est.mean,
    )


def check_cdf_convexity(
    dist: GenerationDistribution, upper: float, n_grid: int = 1000
) -> ConvexityCheck:
    """Test that the density is nondecreasing on ``(0, upper)``.

    Returns the first grid point where the density drops, if any.
    """
    if not upper > 0:
        raise ValueError("upper end of the interval must be positive")
    z = upper * np.arange(1, n_grid + 1) / (n_grid + 1)
    f = np.asarray(dist.pdf(z), dtype=float)
    drops = np.nonzero(f[1:] < f[:-1] * (1 - 1e-12))[0]
    if drops.size:
        return ConvexityCheck(False, float(z[drops[0]]), float(upper))
    return ConvexityCheck(True, None, float(upper))


def profit_lower_bound(profile: BidProfile, dist: GenerationDistribution) -> BoundReport:
    """Per-LSE lower bounds on expected generator profit.

    The last LSE's term relies on ``F`` being convex on ``(0, x*_N)``; the
    returned report records whether that was confirmed numerically.
    """
    r = profile.ratios
    c = profile.c_ext
    p = profile.pi_ext
    n = profile.n
    x = optimal_allocation(profile, dist).x
    terms = np.empty(n)
    for i in range(1, n):
        j = i - 1
        spread = float(dist.inv_cdf(r.rho_cvx[j]) - dist.inv_cdf(r.rho1[j]))
        terms[j] = (c[i] - p[i] * r.rho2[j]) * x[j] + p[i - 1] * (c[i] - r.alpha[j]) / (
            p[i] - p[i - 1]
        ) * spread
    dN = p[n] - p[n - 1]
    terms[n - 1] = (c[n - 1] * p[n] / dN - 0.5 * (c[n] + c[n - 1]) * p[n - 1] / dN) * x[n - 1]
    return BoundReport(terms, float(terms.sum()), check_cdf_convexity(dist, x[n - 1]))


def budget_balance_condition(profile: BidProfile) -> bool:
    """True iff ``c_i / pi_i`` is strictly decreasing in ``i``."""
    ratio = profile.c / profile.pi
    return bool(np.all(np.diff(ratio) < 0))


def _utility_if_bidding(profile, dist, i, s, value):
    c = profile.c.copy()
    c[i] = s
    diags, prof = diagnose(list(zip(c, profile.pi)))
    if diags:
        return None, diags
    x = allocation_for_bids(prof.c, prof.pi, dist).x[i]
    pay = myerson_payments(prof, dist).p[i]
    return value * x - pay, None


def dsic_audit(
    profile: BidProfile, dist: GenerationDistribution, resolution: int = 201
) -> list[DsicReport]:
    """Sweep each LSE's bid over its admissible range and record its utility.

    The grid is ``resolution`` interior points of ``(alpha_i, c_{i+1})``
    (``(c_{N-1}, beta_N)`` for the last LSE). Deviations that make the
    profile invalid are skipped and recorded.
    """
    r = profile.ratios
    n = profile.n
    reports = []
    for i in range(n):
        lo = float(r.alpha[i])
        hi = float(profile.c[i + 1]) if i + 1 < n else float(r.beta[i])
        grid = lo + (hi - lo) * np.arange(1, resolution + 1) / (resolution + 1)
        value = float(profile.c[i])
        truthful, _ = _utility_if_bidding(profile, dist, i, value, value)
        util = np.full(resolution, np.nan)
        skipped = []
        for j, s in enumerate(grid):
            u, diags = _utility_if_bidding(profile, dist, i, float(s), value)
            if diags:
                skipped.append((float(s), [d.condition for d in diags]))
            else:
                util[j] = u
        reports.append(
            DsicReport(i, value, grid, util, float(truthful), (hi - lo) / (resolution + 1), skipped)
        )
    return reports


def ir_audit(profile: BidProfile, dist: GenerationDistribution) -> dict:
    """Utilities and discounts at truthful bids."""
    x = optimal_allocation(profile, dist).x
    sched = myerson_payments(profile, dist)
    utility = profile.c * x - sched.p
    return {
        "utility": utility,
        "discount": sched.discount,
        "ok": bool(np.all(utility >= 0) and np.all((sched.discount >= 0) & (sched.discount <= 100))),
    }
