"""Parameter sweep over the geometric bid family and plot-ready CSV output."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import budget_balance_condition, expected_profit_mc, profit_lower_bound
from .bids import ProfileValidationError, geometric_bids
from .dist import parse_distribution
from .mechanism import myerson_payments, optimal_allocation, welfare

__all__ = ["SweepConfig", "SweepRow", "run_sweep", "write_sweep_csv", "emit_plot_data", "load_config"]

DEFAULT_ETA_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True)
class SweepConfig:
    """Geometric-bid sweep settings.

    ``c1 = c_hat * pi1``; only the ratio ``c_hat`` shapes the allocation, so
    ``pi1`` just fixes the price level.
    """

    n: int = 5
    c_hat: float = 10.0 / 12.0
    eta_grid: tuple = DEFAULT_ETA_GRID
    pi1: float = 12.0
    distribution: str = "weibull:k=2,lambda=1509"
    samples: int = 100_000
    seed: int = 0
    shards: int = 1

    def __post_init__(self):
        object.__setattr__(self, "eta_grid", tuple(float(e) for e in self.eta_grid))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.eta_grid:
            raise ValueError("eta grid must be nonempty")
        if any(not 0.0 < e < 1.0 for e in self.eta_grid):
            raise ValueError("every eta must lie in (0, 1)")
        if not 0.0 < self.c_hat < 1.0:
            raise ValueError("c_hat must lie in (0, 1)")
        if self.pi1 <= 0:
            raise ValueError("pi1 must be positive")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass
class SweepRow:
    eta: float
    valid: bool
    x: list = field(default_factory=list)
    p: list = field(default_factory=list)
    per_unit: list = field(default_factory=list)
    discount: list = field(default_factory=list)
    utility: list = field(default_factory=list)
    welfare: float = float("nan")
    profit: float = float("nan")
    stderr: float = float("nan")
    bound: float = float("nan")
    bound_hypothesis_ok: bool = False
    budget_balance_condition: bool = False
    ir_ok: bool = False
    diagnostic: str = ""


def load_config(path) -> SweepConfig:
    """Read a JSON file whose keys match :class:`SweepConfig` fields."""
    data = json.loads(Path(path).read_text())
    unknown = set(data) - set(SweepConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
    return SweepConfig(**data)


def _sweep_point(config: SweepConfig, dist, j: int, eta: float) -> SweepRow:
    try:
        prof = geometric_bids(config.n, eta, config.c_hat * config.pi1, config.pi1)
    except ProfileValidationError as exc:
        return SweepRow(eta, False, diagnostic=str(exc))
    x = optimal_allocation(prof, dist).x
    sched = myerson_payments(prof, dist)
    utility = prof.c * x - sched.p
    est = expected_profit_mc(prof, dist, config.samples, config.seed + j, config.shards)
    bound = profit_lower_bound(prof, dist)
    return SweepRow(
        eta=eta,
        valid=True,
        x=x.tolist(),
        p=sched.p.tolist(),
        per_unit=sched.per_unit.tolist(),
        discount=sched.discount.tolist(),
        utility=utility.tolist(),
        welfare=welfare(prof, x, dist),
        profit=est.estimate,
        stderr=est.stderr,
        bound=bound.total,
        bound_hypothesis_ok=bound.hypothesis_ok,
        budget_balance_condition=budget_balance_condition(prof),
        ir_ok=bool(np.all(utility >= 0) and np.all((sched.discount >= 0) & (sched.discount <= 100))),
    )


def run_sweep(config: SweepConfig, workers: int = 1) -> list[SweepRow]:
    """Evaluate the mechanism at each ``eta``; point ``j`` uses seed ``seed + j``."""
    dist = parse_distribution(config.distribution)
    jobs = list(enumerate(config.eta_grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda a: _sweep_point(config, dist, *a), jobs))
    return [_sweep_point(config, dist, j, eta) for j, eta in jobs]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    v = float(v)
    return "" if np.isnan(v) else repr(v)


def _lse_cols(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def write_sweep_csv(rows: list[SweepRow], path, n: int) -> Path:
    path = Path(path)
    header = (
        ["eta", "valid"]
        + _lse_cols("x_", n)
        + _lse_cols("p_", n)
        + _lse_cols("price_", n)
        + _lse_cols("discount_", n)
        + _lse_cols("utility_", n)
        + ["welfare", "profit", "stderr", "bound", "bound_hypothesis_ok",
           "budget_balance_condition", "ir_ok", "diagnostic"]
    )
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for r in rows:
            pad = lambda v: (list(v) + [None] * n)[:n]  # noqa: E731
            out.writerow(
                [_fmt(r.eta), _fmt(r.valid)]
                + [_fmt(v) for v in pad(r.x) + pad(r.p) + pad(r.per_unit) + pad(r.discount) + pad(r.utility)]
                + [_fmt(r.welfare), _fmt(r.profit), _fmt(r.stderr), _fmt(r.bound),
                   _fmt(r.bound_hypothesis_ok), _fmt(r.budget_balance_condition), _fmt(r.ir_ok),
                   r.diagnostic]
            )
    return path


PLOT_FILES = {
    "allocation.csv": "x",
    "payments.csv": "p",
    "per_unit_prices.csv": "per_unit",
    "discounts.csv": "discount",
    "utilities.csv": "utility",
}


def emit_plot_data(rows: list[SweepRow], outdir, n: int) -> list[Path]:
    """Write one CSV per plotted quantity: ``eta,lse_1..lse_N`` tables and ``profit_bound.csv``."""
    if not rows:
        raise ValueError("nothing to write: empty sweep table")
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {outdir}: {exc}") from exc
    written = []
    for name, attr in PLOT_FILES.items():
        path = outdir / name
        with path.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["eta"] + _lse_cols("lse_", n))
            for r in rows:
                vals = (list(getattr(r, attr)) + [None] * n)[:n]
                out.writerow([_fmt(r.eta)] + [_fmt(v) for v in vals])
        written.append(path)
    path = outdir / "profit_bound.csv"
    with path.open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["eta", "profit", "stderr", "bound"])
        for r in rows:
            out.writerow([_fmt(r.eta), _fmt(r.profit), _fmt(r.stderr), _fmt(r.bound)])
    written.append(path)
    return written
