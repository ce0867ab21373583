"""Estimator-style front end for the auction."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .analysis import expected_profit_mc, profit_lower_bound
from .bids import validate_profile
from .mechanism import (
    myerson_payments,
    optimal_allocation,
    settle,
    shortfall_matrix,
    welfare,
)
from .validation import check_bids, check_distribution, check_generation

__all__ = ["StochasticAuction"]


class StochasticAuction(BaseEstimator):
    """Two-stage auction of random generation among flexible LSEs.

    ``fit`` takes one row per LSE, ``(c, pi)``, clears the day-ahead market and
    prices it; ``predict`` maps realised generation to each LSE's shortfall.
    Fitted arrays follow the row order passed to ``fit``.

    Parameters
    ----------
    distribution : str or GenerationDistribution
        Law of the generation, e.g. ``"weibull:k=2,lambda=1509"``.

    Attributes
    ----------
    profile_ : BidProfile
        Bids sorted by penalty.
    allocation_ : ndarray of shape (n_lse,)
        Contracted kW per LSE.
    payments_ : ndarray of shape (n_lse,)
    per_unit_price_ : ndarray of shape (n_lse,)
    discount_ : ndarray of shape (n_lse,)
        Percent below bid value.
    utility_ : ndarray of shape (n_lse,)
    welfare_ : float
    n_lse_ : int

    Examples
    --------
    >>> auction = StochasticAuction().fit([[10.0, 12.0], [15.0, 24.0]])
    >>> auction.allocation_.round(1)
    array([ 912. , 1107.9])
    """

    def __init__(self, distribution="weibull:k=2,lambda=1509"):
        self.distribution = distribution

    def fit(self, X, y=None):
        bids = check_bids(X)
        dist = check_distribution(self.distribution)
        profile = validate_profile([tuple(row) for row in bids])
        alloc = optimal_allocation(profile, dist)
        sched = myerson_payments(profile, dist)

        self.distribution_ = dist
        self.profile_ = profile
        self._alloc_sorted = alloc
        self._pay_sorted = sched.p
        self.n_lse_ = profile.n
        self.allocation_ = profile.to_submission_order(alloc.x)
        self.payments_ = profile.to_submission_order(sched.p)
        self.per_unit_price_ = profile.to_submission_order(sched.per_unit)
        self.discount_ = profile.to_submission_order(sched.discount)
        self.utility_ = bids[:, 0] * self.allocation_ - self.payments_
        self.welfare_ = welfare(profile, alloc, dist)
        return self

    def predict(self, W):
        """Shortfall per LSE for each generation value, shape ``(n_samples, n_lse)``."""
        check_is_fitted(self, "profile_")
        W = check_generation(W)
        y = shortfall_matrix(self._alloc_sorted, W)
        out = np.empty_like(y)
        out[:, self.profile_.order] = y
        return out

    def compensation(self, W):
        """Total real-time compensation paid by the generator for each draw."""
        check_is_fitted(self, "profile_")
        W = check_generation(W)
        return shortfall_matrix(self._alloc_sorted, W) @ self.profile_.pi

    def settle(self, w: float):
        check_is_fitted(self, "profile_")
        out = settle(self.profile_, self._alloc_sorted, self._pay_sorted, float(w))
        back = self.profile_.to_submission_order
        return replace(
            out,
            shortfall=back(out.shortfall),
            delivered=back(out.delivered),
            compensation=back(out.compensation),
            payments=back(out.payments),
            lse_net_cash=back(out.lse_net_cash),
        )

    def expected_profit(self, n_samples: int = 100_000, seed: int = 0, shards: int = 1):
        check_is_fitted(self, "profile_")
        return expected_profit_mc(self.profile_, self.distribution_, n_samples, seed, shards)

    def profit_bound(self):
        check_is_fitted(self, "profile_")
        return profit_lower_bound(self.profile_, self.distribution_)

    def score(self, X=None, y=None):
        """Expected social welfare of the fitted allocation."""
        check_is_fitted(self, "profile_")
        return self.welfare_
