"""Two-stage stochastic auction for random renewable generation."""

from .analysis import (
    budget_balance_condition,
    check_cdf_convexity,
    dsic_audit,
    expected_profit_mc,
    profit_lower_bound,
)
from .bids import Bid, BidProfile, ProfileValidationError, geometric_bids, validate_profile
from .dist import (
    DomainError,
    GenerationDistribution,
    TabulatedDistribution,
    WeibullDistribution,
    parse_distribution,
)
from .estimator import StochasticAuction
from .mechanism import (
    Allocation,
    expected_shortfall,
    expected_value_v,
    myerson_payments,
    optimal_allocation,
    optimal_shortfall,
    settle,
    stage2_cost,
    welfare,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Bid",
    "BidProfile",
    "DomainError",
    "GenerationDistribution",
    "ProfileValidationError",
    "StochasticAuction",
    "TabulatedDistribution",
    "WeibullDistribution",
    "budget_balance_condition",
    "check_cdf_convexity",
    "dsic_audit",
    "expected_profit_mc",
    "expected_shortfall",
    "expected_value_v",
    "geometric_bids",
    "myerson_payments",
    "optimal_allocation",
    "optimal_shortfall",
    "parse_distribution",
    "profit_lower_bound",
    "settle",
    "stage2_cost",
    "validate_profile",
    "welfare",
]
