import doctest

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import stochauction.estimator
from stochauction import StochasticAuction, WeibullDistribution
from stochauction.bids import ProfileValidationError
from stochauction.mechanism import myerson_payments, optimal_allocation
from stochauction.validation import check_bids, check_distribution, check_generation

BIDS = [[15.0, 24.0], [10.0, 12.0]]  # submitted out of penalty order


@pytest.fixture
def fitted():
    return StochasticAuction().fit(BIDS)


def test_docstring_example():
    res = doctest.testmod(stochauction.estimator)
    assert res.failed == 0 and res.attempted > 0


def test_params_roundtrip():
    est = StochasticAuction(distribution="weibull:k=1.5,lambda=900")
    assert est.get_params() == {"distribution": "weibull:k=1.5,lambda=900"}
    twin = clone(est)
    assert twin.distribution == est.distribution
    est.set_params(distribution=WeibullDistribution(2.0, 1509.0))
    assert isinstance(est.distribution, WeibullDistribution)


def test_fitted_arrays_follow_submission_order(fitted, two_lse, weibull):
    x = optimal_allocation(two_lse, weibull).x
    p = myerson_payments(two_lse, weibull).p
    np.testing.assert_allclose(fitted.allocation_, x[::-1])
    np.testing.assert_allclose(fitted.payments_, p[::-1])
    np.testing.assert_allclose(fitted.utility_, np.array([15.0, 10.0]) * x[::-1] - p[::-1])
    assert fitted.n_lse_ == 2
    assert np.all(fitted.discount_ >= 0)


def test_predict_shape_and_order(fitted):
    y = fitted.predict([0.0, 1e6])
    np.testing.assert_allclose(y[0], fitted.allocation_)
    np.testing.assert_array_equal(y[1], 0.0)
    assert y.shape == (2, 2)


def test_compensation_matches_predict(fitted):
    w = np.linspace(0, 3000, 31)
    comp = fitted.compensation(w)
    np.testing.assert_allclose(comp, fitted.predict(w) @ np.array([24.0, 12.0]))


def test_settle_in_submission_order(fitted):
    out = fitted.settle(500.0)
    np.testing.assert_allclose(out.delivered + out.shortfall, fitted.allocation_)
    np.testing.assert_allclose(out.payments, fitted.payments_)


def test_score_and_profit(fitted):
    assert fitted.score() == fitted.welfare_ > 0
    est = fitted.expected_profit(20_000, seed=1)
    assert est.n == 20_000
    assert fitted.profit_bound().total > 0


def test_not_fitted():
    with pytest.raises(NotFittedError):
        StochasticAuction().predict([1.0])


def test_invalid_bids_raise():
    with pytest.raises(ProfileValidationError):
        StochasticAuction().fit([[13.0, 12.0]])
    with pytest.raises(ValueError):
        StochasticAuction().fit([[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        StochasticAuction().fit([[np.nan, 2.0]])


class TestValidationHelpers:
    def test_check_bids(self):
        assert check_bids([[1, 2]]).dtype == np.float64

    def test_check_generation(self):
        assert check_generation(5.0).shape == (1,)
        assert check_generation([[1.0], [2.0]]).shape == (2,)
        for bad in ([-1.0], [np.inf], np.zeros((2, 2))):
            with pytest.raises(ValueError):
                check_generation(bad)

    def test_check_distribution(self):
        d = WeibullDistribution(2.0, 3.0)
        assert check_distribution(d) is d
        assert check_distribution("weibull:k=2,lambda=3") == d
        with pytest.raises(TypeError):
            check_distribution(3.0)
