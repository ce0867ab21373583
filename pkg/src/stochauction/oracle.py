"""Independent numerical checks of the closed forms.

Nothing here calls the closed-form routine it is meant to verify: the
stage-one solver descends the objective numerically, the stage-two oracle
enumerates greedy vertices over all index orders, payments come from
quadrature of the allocation rule, and expectations from Monte Carlo.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .bids import BidProfile, validate_profile
from .dist import GenerationDistribution
from .mechanism import (
    Allocation,
    Shortfall,
    allocation_for_bids,
    expected_shortfall,
    expected_value_v,
    myerson_payments,
    objective,
    optimal_allocation,
    optimal_shortfall,
    shortfall_matrix,
    stage1_gradient,
)

__all__ = [
    "SolverConfig",
    "SolverResult",
    "OracleReport",
    "MCEstimate",
    "QuadratureResult",
    "solve_stage1_numeric",
    "solve_stage2_exhaustive",
    "myerson_payment_quadrature",
    "mc_expectation",
    "finite_difference_gradient",
    "random_profile",
    "run_agreement_suite",
]

MAX_EXHAUSTIVE_N = 8
_CHUNK = 1 << 17


@dataclass(frozen=True)
class SolverConfig:
    """Projected-gradient settings.

    ``tol`` bounds the infinity norm of the projected gradient ($/kWh);
    ``fd_step`` is the finite-difference step in kW.
    """

    tol: float = 1e-10
    max_iter: int = 20_000
    armijo: float = 1e-4
    initial_step: float = 1.0
    fd_step: float = 1e-3
    sampled: bool = False
    n_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class SolverResult:
    allocation: Allocation
    converged: bool
    iterations: int
    grad_norm: float
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class OracleReport:
    name: str
    oracle_value: float
    closed_form_value: float
    abs_dev: float
    rel_dev: float
    tolerance: float
    kind: str = "rel"  # which deviation the tolerance applies to

    @property
    def passed(self) -> bool:
        dev = self.rel_dev if self.kind == "rel" else self.abs_dev
        return bool(dev <= self.tolerance)

    @classmethod
    def compare(cls, name, oracle_value, closed_form_value, tolerance, kind="rel"):
        a = float(oracle_value)
        b = float(closed_form_value)
        abs_dev = abs(a - b)
        rel_dev = abs_dev / abs(b) if b != 0 else (0.0 if a == 0 else math.inf)
        return cls(name, a, b, abs_dev, rel_dev, float(tolerance), kind)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "oracle_value": self.oracle_value,
            "closed_form_value": self.closed_form_value,
            "abs_dev": self.abs_dev,
            "rel_dev": self.rel_dev,
            "tolerance": self.tolerance,
            "kind": self.kind,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class MCEstimate:
    mean: np.ndarray | float
    stderr: np.ndarray | float
    n: int
    seed: int
    shards: int = 1


@dataclass(frozen=True)
class QuadratureResult:
    payment: float
    abserr: float
    lower: float
    upper: float


# -- stage one ---------------------------------------------------------------


def _projected_gradient(x, g):
    return np.where(x > 0, g, np.minimum(g, 0.0))


def solve_stage1_numeric(
    profile: BidProfile,
    dist: GenerationDistribution,
    config: SolverConfig = SolverConfig(),
    x0=None,
) -> SolverResult:
    """Projected-gradient descent on ``h(x) = -c.x + V(x)`` over ``x >= 0``.

    Trial steps start from the Barzilai-Borwein estimate (``initial_step`` on
    the first iteration) and are halved until the Armijo condition holds, so
    the objective never increases beyond floating-point noise.
    """
    if config.sampled:
        h, grad = _sampled_objective(profile, dist, config)
    else:
        h = lambda x: objective(profile, x, dist)  # noqa: E731
        grad = lambda x: stage1_gradient(profile, x, dist)  # noqa: E731

    n = profile.n
    x = np.full(n, dist.mean() / n) if x0 is None else np.maximum(np.asarray(x0, float), 0.0)
    fx = h(x)
    g = grad(x)
    history = [fx]
    step = config.initial_step
    x_prev = g_prev = None
    for it in range(config.max_iter + 1):
        pg = _projected_gradient(x, g)
        gnorm = float(np.max(np.abs(pg)))
        if gnorm <= config.tol:
            return SolverResult(Allocation.from_quantities(x), True, it, gnorm, history)
        if it == config.max_iter:
            break
        if x_prev is not None:
            s = x - x_prev
            d = g - g_prev
            sd = float(s @ d)
            if sd > 0:
                step = float(s @ s) / sd
        t = step
        slack = 8.0 * np.finfo(float).eps * (abs(fx) + 1.0)
        while True:
            x_new = np.maximum(x - t * g, 0.0)
            f_new = h(x_new)
            if f_new <= fx + config.armijo * float(g @ (x_new - x)) + slack:
                break
            t *= 0.5
            if t < 1e-300:
                x_new, f_new = x, fx
                break
        if np.array_equal(x_new, x):
            break
        x_prev, g_prev = x, g
        x, fx = x_new, f_new
        g = grad(x)
        history.append(fx)
    pg = _projected_gradient(x, g)
    gnorm = float(np.max(np.abs(pg)))
    return SolverResult(Allocation.from_quantities(x), gnorm <= config.tol, it, gnorm, history)


def _sampled_objective(profile, dist, config):
    rng = np.random.default_rng(config.seed)
    w = np.sort(dist.sample(rng, config.n_samples))
    dpi = np.diff(profile.pi_ext)

    def h(x):
        return float(-profile.c @ x + np.mean(shortfall_matrix(x, w) @ profile.pi))

    def grad(x):
        phi = np.cumsum(np.asarray(x)[::-1])[::-1]
        F = np.searchsorted(w, phi, side="right") / w.size
        return -profile.c + np.cumsum(dpi * F)

    return h, grad


# -- stage two ---------------------------------------------------------------


def solve_stage2_exhaustive(x: Sequence, w, pi: Sequence) -> Shortfall:
    """Minimise ``pi . y`` over the recourse polytope by vertex enumeration.

    Each vertex fills the shortage greedily along one index permutation. Works
    in exact arithmetic for int or :class:`fractions.Fraction` inputs.
    """
    x = list(x)
    pi = list(pi)
    n = len(x)
    if n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"exhaustive stage-two oracle limited to N <= {MAX_EXHAUSTIVE_N}")
    if len(pi) != n:
        raise ValueError("x and pi must have equal length")
    if w < 0:
        raise ValueError("generation must be nonnegative")
    shortage = max(sum(x) - w, 0)
    best_cost = None
    best_y = None
    for perm in itertools.permutations(range(n)):
        y = [0] * n
        left = shortage
        for j in perm:
            take = min(x[j], left)
            y[j] = take
            left -= take
        cost = sum(p * v for p, v in zip(pi, y))
        if best_cost is None or cost < best_cost:
            best_cost, best_y = cost, y
    exact = any(isinstance(v, Fraction) for v in best_y)
    return Shortfall(np.array(best_y, dtype=object if exact else float), w, None)


# -- payments ----------------------------------------------------------------


def _allocation_of(profile: BidProfile, i: int, s: float, dist) -> float:
    c = profile.c.copy()
    c[i] = s
    return float(allocation_for_bids(c, profile.pi, dist).x[i])


def myerson_payment_quadrature(
    profile: BidProfile, dist: GenerationDistribution, i: int, tolerance: float = 1e-11
) -> QuadratureResult:
    """``c_i x_i(c_i) - int_{alpha_i}^{c_i} x_i(s) ds`` by adaptive quadrature.

    ``i`` is the 0-based sorted index; ``x_i(s)`` is the allocation LSE ``i``
    receives when it alone changes its bid to ``s``.
    """
    alpha = float(profile.ratios.alpha[i])
    ci = float(profile.c[i])
    val, err, info = integrate.quad(
        lambda s: _allocation_of(profile, i, s, dist),
        alpha,
        ci,
        epsabs=0.0,
        epsrel=tolerance,
        limit=500,
        full_output=True,
    )[:3]
    if err > max(1e3 * tolerance * abs(val), 1e-12):
        raise RuntimeError(
            f"payment quadrature for LSE {i + 1} did not converge: "
            f"estimate {val!r}, error {err!r}, {info.get('neval')} evaluations"
        )
    x_true = _allocation_of(profile, i, ci, dist)
    return QuadratureResult(ci * x_true - val, err, alpha, ci)


# -- Monte Carlo -------------------------------------------------------------


def _shard_moments(fn, dist, n, seq):
    rng = np.random.default_rng(seq)
    total = None
    m2 = None
    mean = None
    count = 0
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        vals = np.asarray(fn(dist.sample(rng, m)), dtype=float)
        c_mean = vals.mean(axis=0)
        c_m2 = ((vals - c_mean) ** 2).sum(axis=0)
        if mean is None:
            mean, m2, count = c_mean, c_m2, m
        else:
            mean, m2, count = _combine(mean, m2, count, c_mean, c_m2, m)
        done += m
    return mean, m2, count


def _combine(mean_a, m2_a, n_a, mean_b, m2_b, n_b):
    n = n_a + n_b
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    m2 = m2_a + m2_b + delta**2 * (n_a * n_b / n)
    return mean, m2, n


def mc_expectation(
    fn: Callable[[np.ndarray], np.ndarray],
    dist: GenerationDistribution,
    n: int,
    seed: int,
    shards: int = 1,
    workers: int = 1,
) -> MCEstimate:
    """Sample mean and standard error of ``fn(w)`` over ``n`` draws.

    ``fn`` maps a 1-D array of draws to values of shape ``(m,)`` or ``(m, d)``.
    Shard ``j`` draws from the ``j``-th child of ``SeedSequence(seed)``;
    shard results are reduced in index order, so the estimate is
    bit-reproducible for fixed ``(seed, shards)`` whatever ``workers`` is.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    shards = max(1, min(int(shards), n))
    seqs = np.random.SeedSequence(seed).spawn(shards)
    sizes = [n // shards + (1 if j < n % shards else 0) for j in range(shards)]
    if workers > 1 and shards > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _shard_moments(fn, dist, *a), zip(sizes, seqs)))
    else:
        parts = [_shard_moments(fn, dist, m, s) for m, s in zip(sizes, seqs)]
    mean, m2, count = parts[0]
    for part in parts[1:]:
        mean, m2, count = _combine(mean, m2, count, *part)
    var = m2 / (count - 1) if count > 1 else np.zeros_like(m2)
    stderr = np.sqrt(var / count)
    if np.ndim(mean) == 0:
        mean, stderr = float(mean), float(stderr)
    return MCEstimate(mean, stderr, n, seed, shards)


# -- finite differences ------------------------------------------------------


def finite_difference_gradient(field: Callable, x, step: float) -> np.ndarray:
    """Central differences, forward differences where ``x_i < step``."""
    if not step > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        if x[i] < step:
            out[i] = (field(x + e) - field(x)) / step
        else:
            out[i] = (field(x + e) - field(x - e)) / (2 * step)
    return out


# -- randomised instances ----------------------------------------------------


def random_profile(
    rng: np.random.Generator, n: int, ratio_range=(0.05, 0.95), min_gap: float = 0.03
) -> BidProfile:
    """Draw a valid profile by sampling decreasing ratios and penalty steps."""
    lo, hi = ratio_range
    while True:
        ratios = np.sort(rng.uniform(lo, hi, n))[::-1]
        if n == 1 or np.min(-np.diff(ratios)) >= min_gap:
            break
    dpi = rng.uniform(1.0, 10.0, n)
    pi = np.cumsum(dpi)
    c = np.cumsum(ratios * dpi)
    return validate_profile(list(zip(c, pi)))


# -- agreement suite ---------------------------------------------------------


def run_agreement_suite(
    dist: GenerationDistribution,
    quick: bool = False,
    seed: int = 0,
) -> list[OracleReport]:
    """Compare every closed form against its oracle on random instances."""
    rng = np.random.default_rng(seed)
    n_stage2, n_stage1, n_pay, n_mc = (50, 5, 5, 2) if quick else (1000, 100, 100, 20)
    mc_samples = 100_000 if quick else 1_000_000
    reports: list[OracleReport] = []

    for t in range(n_stage2):
        n = int(rng.integers(1, 7))
        x = rng.integers(0, 6, n).astype(float)
        pi = np.cumsum(rng.integers(1, 5, n)).astype(float)
        w = float(rng.integers(0, int(x.sum()) + 3))
        exact = solve_stage2_exhaustive(x.tolist(), w, pi.tolist())
        analytic = optimal_shortfall(x, w).y
        reports.append(
            OracleReport.compare(
                f"stage2[{t}]", float(pi @ np.asarray(exact.y, float)), float(pi @ analytic), 0.0, "abs"
            )
        )

    for t in range(n_stage1):
        prof = random_profile(rng, int(rng.integers(1, 6)))
        x_star = optimal_allocation(prof, dist).x
        res = solve_stage1_numeric(prof, dist)
        for i in range(prof.n):
            reports.append(
                OracleReport.compare(f"stage1[{t}].x{i + 1}", res.allocation.x[i], x_star[i], 1e-4)
            )

    for t in range(n_pay):
        prof = random_profile(rng, int(rng.integers(1, 6)))
        pay = myerson_payments(prof, dist).p
        for i in range(prof.n):
            q = myerson_payment_quadrature(prof, dist, i)
            reports.append(OracleReport.compare(f"payment[{t}].p{i + 1}", q.payment, pay[i], 1e-6))

    for t in range(n_mc):
        prof = random_profile(rng, int(rng.integers(1, 5)))
        x = rng.uniform(0.0, 1.5, prof.n) * dist.mean() / prof.n
        est = mc_expectation(
            lambda w: np.column_stack(
                (shortfall_matrix(x, w) @ prof.pi, shortfall_matrix(x, w))
            ),
            dist,
            mc_samples,
            seed=seed + 1000 + t,
        )
        closed = np.concatenate(([expected_value_v(prof, x, dist)], expected_shortfall(x, dist)))
        names = ["V"] + [f"Ey{i + 1}" for i in range(prof.n)]
        for name, m, s, cf in zip(names, est.mean, est.stderr, closed):
            reports.append(
                OracleReport(
                    f"mc[{t}].{name}",
                    float(m),
                    float(cf),
                    abs(float(m) - float(cf)),
                    abs(float(m) - float(cf)) / abs(float(cf)) if cf else 0.0,
                    float(3 * s),
                    "abs",
                )
            )
    return reports
