"""Command-line interface.

Exit codes: 0 success, 1 bid validation failure, 2 oracle disagreement,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import budget_balance_condition, expected_profit_mc, profit_lower_bound
from .bids import ProfileValidationError, geometric_bids, read_bids_csv, validate_profile
from .dist import parse_distribution
from .experiment import SweepConfig, emit_plot_data, load_config, run_sweep, write_sweep_csv
from .mechanism import myerson_payments, optimal_allocation, settle, welfare
from .oracle import run_agreement_suite

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ORACLE = 2
EXIT_USAGE = 64

DEFAULT_DIST = "weibull:k=2,lambda=1509"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(a) for a in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(a) for a in v]
    if isinstance(v, dict):
        return {k: _jsonable(a) for k, a in v.items()}
    if isinstance(v, (np.floating, float)):
        return None if math.isnan(v) else float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _emit(obj, out=None) -> None:
    text = json.dumps(_jsonable(obj), indent=2, allow_nan=False)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _parse_geometric(text: str):
    params = {}
    for item in text.split(","):
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"malformed --geometric item {item!r}")
        params[key.strip().lower()] = val.strip()
    need = {"n", "eta", "c1", "pi1"}
    if set(params) != need:
        raise UsageError(f"--geometric needs N, eta, c1, pi1; got {sorted(params)}")
    try:
        return geometric_bids(int(params["n"]), float(params["eta"]), float(params["c1"]), float(params["pi1"]))
    except ValueError as exc:
        if isinstance(exc, ProfileValidationError):
            raise
        raise UsageError(str(exc)) from exc


def _load_profile(args):
    if bool(args.bids) == bool(args.geometric):
        raise UsageError("give exactly one of --bids or --geometric")
    if args.geometric:
        return _parse_geometric(args.geometric)
    try:
        raw = read_bids_csv(args.bids)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read bids: {exc}") from exc
    return validate_profile(raw)


def _load_dist(text):
    try:
        return parse_distribution(text)
    except (OSError, ValueError) as exc:
        raise UsageError(f"bad --dist {text!r}: {exc}") from exc


def _profile_json(profile):
    return {
        "lse_ids": [i if i is not None else str(int(k) + 1) for i, k in zip(profile.lse_ids, profile.order)],
        "submission_index": (profile.order + 1).tolist(),
        "c": profile.c,
        "pi": profile.pi,
        "ratios": profile.ratios.rho2,
    }


def cmd_validate(args) -> int:
    profile = _load_profile(args)
    _emit({"valid": True, **_profile_json(profile)}, args.out)
    return EXIT_OK


def _allocation_json(profile, dist):
    alloc = optimal_allocation(profile, dist)
    sched = myerson_payments(profile, dist)
    return alloc, sched, {
        **_profile_json(profile),
        "x_star": alloc.x,
        "phi": alloc.phi[:-1],
        "payments": sched.p,
        "per_unit_prices": sched.per_unit,
        "discounts": sched.discount,
        "utilities": profile.c * alloc.x - sched.p,
        "welfare": welfare(profile, alloc, dist),
    }


def cmd_allocate(args) -> int:
    profile = _load_profile(args)
    dist = _load_dist(args.dist)
    _, _, doc = _allocation_json(profile, dist)
    _emit(doc, args.out)
    return EXIT_OK


def cmd_settle(args) -> int:
    profile = _load_profile(args)
    dist = _load_dist(args.dist)
    if not (math.isfinite(args.w) and args.w >= 0):
        raise UsageError("--w must be a nonnegative number of kW")
    alloc, sched, doc = _allocation_json(profile, dist)
    out = settle(profile, alloc, sched, args.w)
    doc.update(
        {
            "w": out.w,
            "shortfall": out.shortfall,
            "delivered": out.delivered,
            "compensation": out.compensation,
            "lse_net_cash": out.lse_net_cash,
            "generator_payoff": out.generator_payoff,
        }
    )
    _emit(doc, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    profile = _load_profile(args)
    dist = _load_dist(args.dist)
    if args.samples < 1 or args.shards < 1:
        raise UsageError("--samples and --shards must be positive")
    est = expected_profit_mc(profile, dist, args.samples, args.seed, args.shards, args.workers)
    bound = profit_lower_bound(profile, dist)
    _emit(
        {
            "profit_estimate": est.estimate,
            "stderr": est.stderr,
            "samples": est.n,
            "seed": est.seed,
            "shards": est.shards,
            "bound": bound.total,
            "bound_terms": bound.terms,
            "bound_hypothesis_ok": bound.hypothesis_ok,
            "bound_status": bound.status,
            "budget_balance_condition": budget_balance_condition(profile),
        },
        args.out,
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        if args.config:
            config = load_config(args.config)
        else:
            config = SweepConfig(
                n=args.n,
                c_hat=args.c_hat,
                eta_grid=tuple(float(e) for e in args.eta.split(",")) if args.eta else SweepConfig.eta_grid,
                pi1=args.pi1,
                distribution=args.dist,
                samples=args.samples,
                seed=args.seed,
                shards=args.shards,
            )
        _load_dist(config.distribution)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad sweep configuration: {exc}") from exc
    rows = run_sweep(config, workers=args.workers)
    outdir = Path(args.out_dir)
    files = emit_plot_data(rows, outdir, config.n)
    files.append(write_sweep_csv(rows, outdir / "sweep.csv", config.n))
    for f in files:
        print(f)
    return EXIT_OK


def cmd_oracle(args) -> int:
    dist = _load_dist(args.dist)
    reports = run_agreement_suite(dist, quick=args.quick, seed=args.seed)
    _emit([r.to_dict() for r in reports], args.out)
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(reports)} agreements failed: {', '.join(failed[:10])}", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochauction", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def bid_args(p):
        p.add_argument("--bids", help="CSV with header lse_id,c_dollars_per_kwh,pi_dollars_per_kwh")
        p.add_argument("--geometric", help="N=<n>,eta=<f>,c1=<f>,pi1=<f>")
        p.add_argument("--out", help="write JSON here instead of stdout")

    def dist_arg(p):
        p.add_argument("--dist", default=DEFAULT_DIST, help="weibull:k=<f>,lambda=<f> or table:<csv>")

    p = sub.add_parser("validate", help="check a bid profile")
    bid_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("allocate", help="allocation, payments and welfare")
    bid_args(p)
    dist_arg(p)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("settle", help="settle one generation outcome")
    bid_args(p)
    dist_arg(p)
    p.add_argument("--w", type=float, required=True, help="realised generation in kW")
    p.set_defaults(func=cmd_settle)

    p = sub.add_parser("simulate", help="Monte-Carlo expected profit and its lower bound")
    bid_args(p)
    dist_arg(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="geometric-bid sweep over eta, writes plot CSVs")
    p.add_argument("--config", help="JSON file with SweepConfig keys (overrides flags)")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--c-hat", type=float, default=10.0 / 12.0)
    p.add_argument("--eta", help="comma-separated eta grid (default 0.1,...,0.9)")
    p.add_argument("--pi1", type=float, default=12.0)
    dist_arg(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", default="sweep_out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="run the closed-form vs. oracle agreement suite")
    dist_arg(p)
    p.add_argument("--quick", action="store_true", help="small randomized batches")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write JSON report here instead of stdout")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"stochauction: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ProfileValidationError as exc:
        for d in exc.diagnostics:
            print(f"invalid: {d}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
