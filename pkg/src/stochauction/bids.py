"""Bid data model, profile validation and derived ratios."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Bid",
    "BidProfile",
    "DerivedRatios",
    "Diagnostic",
    "ProfileValidationError",
    "validate_profile",
    "diagnose",
    "derived_ratios",
    "geometric_bids",
    "read_bids_csv",
]


@dataclass(frozen=True)
class Bid:
    """Willingness to pay ``c`` and shortfall penalty ``pi``, both in $/kWh."""

    c: float
    pi: float
    lse_id: str | None = None


@dataclass(frozen=True)
class Diagnostic:
    index: int  # 1-based position in the submitted sequence
    lse_id: str | None
    condition: str
    message: str

    def __str__(self) -> str:
        who = f"bid {self.index}" + (f" ({self.lse_id})" if self.lse_id is not None else "")
        return f"{who}: {self.condition}: {self.message}"


class ProfileValidationError(ValueError):
    """Raised when a bid profile cannot be cleared by the mechanism."""

    def __init__(self, diagnostics: Sequence[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True, eq=False)
class BidProfile:
    """Bids sorted by increasing penalty.

    ``order[j]`` is the submitted (0-based) position of the LSE ranked ``j``,
    so results computed in sorted order map back via ``out[order] = sorted``.
    """

    c: np.ndarray
    pi: np.ndarray
    order: np.ndarray
    lse_ids: tuple = ()
    _ratios: "DerivedRatios | None" = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return int(self.c.size)

    @property
    def c_ext(self) -> np.ndarray:
        """``c`` with the ``c_0 = 0`` sentinel prepended."""
        return np.concatenate(([0.0], self.c))

    @property
    def pi_ext(self) -> np.ndarray:
        return np.concatenate(([0.0], self.pi))

    @property
    def ratios(self) -> "DerivedRatios":
        if self._ratios is None:
            object.__setattr__(self, "_ratios", derived_ratios(self))
        return self._ratios

    def with_bid(self, i: int, s: float) -> "BidProfile":
        """Copy with the (sorted, 0-based) LSE ``i`` bidding ``c = s``; not validated."""
        c = self.c.copy()
        c[i] = s
        return BidProfile(c, self.pi, self.order, self.lse_ids)

    def to_submission_order(self, values) -> np.ndarray:
        values = np.asarray(values)
        out = np.empty_like(values)
        out[self.order] = values
        return out


@dataclass(frozen=True)
class DerivedRatios:
    """Per-LSE quantities used by allocation, payments and the profit bound.

    Arrays are indexed by sorted LSE position. For the last LSE ``rho1`` is 0
    (no successor), and ``rho_cvx`` and ``mu`` are NaN.
    """

    alpha: np.ndarray
    beta: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    rho_cvx: np.ndarray
    mu: np.ndarray


def derived_ratios(profile: BidProfile) -> DerivedRatios:
    c = profile.c_ext
    p = profile.pi_ext
    n = profile.n
    rho2 = (c[1:] - c[:-1]) / (p[1:] - p[:-1])
    rho1 = np.zeros(n)
    rho_cvx = np.full(n, np.nan)
    mu = np.full(n, np.nan)
    alpha = np.empty(n)
    beta = np.empty(n)
    for i in range(1, n):
        # sentinel-extended index i is LSE i (1-based); its successor is i + 1
        rho1[i - 1] = rho2[i]
        rho_cvx[i - 1] = (c[i + 1] - c[i - 1]) / (p[i + 1] - p[i - 1])
        mu[i - 1] = (p[i] - p[i - 1]) / (p[i + 1] - p[i - 1])
        alpha[i - 1] = (c[i + 1] * (p[i] - p[i - 1]) + c[i - 1] * (p[i + 1] - p[i])) / (
            p[i + 1] - p[i - 1]
        )
        beta[i - 1] = c[i + 1] - (p[i + 1] - p[i])
    alpha[n - 1] = c[n - 1]
    beta[n - 1] = c[n - 1] + (p[n] - p[n - 1])
    return DerivedRatios(alpha, beta, rho1, rho2, rho_cvx, mu)


def _coerce(raw) -> list[Bid]:
    bids = []
    for b in raw:
        if isinstance(b, Bid):
            bids.append(b)
        else:
            c, pi = b[0], b[1]
            bids.append(Bid(float(c), float(pi), b[2] if len(b) > 2 else None))
    return bids


def diagnose(raw: Sequence) -> tuple[list[Diagnostic], BidProfile | None]:
    """Check a submitted profile; return every violation and, if any, no profile."""
    bids = _coerce(raw)
    diags: list[Diagnostic] = []
    if not bids:
        return [Diagnostic(0, None, "empty profile", "at least one bid is required")], None

    for k, b in enumerate(bids, start=1):
        if not (math.isfinite(b.c) and math.isfinite(b.pi)):
            diags.append(Diagnostic(k, b.lse_id, "non-finite bid", f"c={b.c}, pi={b.pi}"))
        elif b.pi <= 0:
            diags.append(Diagnostic(k, b.lse_id, "non-positive penalty", f"pi={b.pi} must be > 0"))
        elif b.c < 0:
            diags.append(Diagnostic(k, b.lse_id, "negative value", f"c={b.c} must be >= 0"))
    if diags:
        return diags, None

    pis = np.array([b.pi for b in bids])
    order = np.argsort(pis, kind="stable")
    sorted_pi = pis[order]
    for j in range(1, len(bids)):
        if sorted_pi[j] == sorted_pi[j - 1]:
            a, b = int(order[j - 1]), int(order[j])
            diags.append(
                Diagnostic(
                    b + 1,
                    bids[b].lse_id,
                    "tie in penalties",
                    f"bids {a + 1} and {b + 1} share pi={sorted_pi[j]:g}",
                )
            )
    if diags:
        return diags, None

    profile = BidProfile(
        c=np.array([bids[j].c for j in order]),
        pi=sorted_pi,
        order=order,
        lse_ids=tuple(bids[j].lse_id for j in order),
    )
    rho2 = profile.ratios.rho2
    n = profile.n
    for j in range(n):
        k = int(order[j]) + 1
        lse = bids[order[j]].lse_id
        if rho2[j] >= 1.0:
            diags.append(
                Diagnostic(
                    k, lse, "allocation would be infinite",
                    f"(c_i - c_(i-1))/(pi_i - pi_(i-1)) = {rho2[j]:.6g} >= 1 at rank {j + 1}",
                )
            )
        successor = rho2[j + 1] if j + 1 < n else 0.0
        if rho2[j] <= successor:
            diags.append(
                Diagnostic(
                    k, lse, f"LSE {j + 1} would receive zero",
                    f"ratio {rho2[j]:.6g} at rank {j + 1} is not above the next ratio {successor:.6g}",
                )
            )
    if diags:
        return diags, None
    return [], profile


def validate_profile(raw: Sequence) -> BidProfile:
    """Sort bids by penalty and check they admit a finite, positive allocation.

    Accepts :class:`Bid` objects or ``(c, pi[, lse_id])`` tuples. Raises
    :class:`ProfileValidationError` carrying one :class:`Diagnostic` per violation.
    """
    diags, profile = diagnose(raw)
    if diags:
        raise ProfileValidationError(diags)
    return profile


def geometric_bids(n: int, eta: float, c1: float, pi1: float) -> BidProfile:
    """Profile with ``c_i = c1 (1 - eta^i)/(1 - eta)`` and ``pi_i = i * pi1``.

    Successive ratios are ``eta^(i-1) * c1/pi1``, so the profile is valid
    whenever ``0 < eta < 1`` and ``c1 < pi1``.
    """
    if n < 1:
        raise ValueError("need at least one LSE")
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if pi1 <= 0 or c1 <= 0:
        raise ValueError("c1 and pi1 must be positive")
    if c1 / pi1 >= 1.0:
        raise ProfileValidationError(
            [Diagnostic(1, None, "allocation would be infinite", f"c1/pi1 = {c1 / pi1:.6g} >= 1")]
        )
    i = np.arange(1, n + 1)
    c = (1.0 - eta**i) / (1.0 - eta) * c1
    pi = i * float(pi1)
    return validate_profile(list(zip(c, pi, (f"lse_{k}" for k in i))))


def read_bids_csv(path) -> list[Bid]:
    """Read ``lse_id,c_dollars_per_kwh,pi_dollars_per_kwh`` rows."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["lse_id", "c_dollars_per_kwh", "pi_dollars_per_kwh"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        return [
            Bid(float(r["c_dollars_per_kwh"]), float(r["pi_dollars_per_kwh"]), r["lse_id"].strip())
            for r in reader
        ]
