import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from stochauction.bids import (
    Bid,
    ProfileValidationError,
    derived_ratios,
    diagnose,
    geometric_bids,
    read_bids_csv,
    validate_profile,
)
from stochauction.oracle import random_profile


def test_single_bidder():
    prof = validate_profile([Bid(10.0, 12.0)])
    assert prof.n == 1
    assert prof.ratios.rho2[0] == pytest.approx(5 / 6)
    assert prof.ratios.alpha[0] == 0.0  # c_0 sentinel


def test_two_bidders_ratios(two_lse):
    r = two_lse.ratios
    np.testing.assert_allclose(r.rho2, [5 / 6, 5 / 12])
    assert r.rho1[0] == pytest.approx(5 / 12)
    assert r.mu[0] == pytest.approx(0.5)
    assert r.rho_cvx[0] == pytest.approx(0.625)
    assert r.rho_cvx[0] == pytest.approx(0.5 * (5 / 12) + 0.5 * (5 / 6))
    assert r.alpha[1] == 10.0
    assert r.beta[1] == 22.0
    # alpha_1 = c_2 (pi_1 - pi_0)/(pi_2 - pi_0) = 15 * 12/24
    assert r.alpha[0] == pytest.approx(7.5)


def test_tie_in_penalties():
    with pytest.raises(ProfileValidationError) as info:
        validate_profile([(10.0, 12.0), (15.0, 12.0)])
    (d,) = info.value.diagnostics
    assert d.condition == "tie in penalties"
    assert "bids 1 and 2" in d.message


def test_infinite_allocation_reported():
    with pytest.raises(ProfileValidationError) as info:
        validate_profile([(13.0, 12.0)])
    assert info.value.diagnostics[0].condition == "allocation would be infinite"


def test_zero_allocation_reported_with_index():
    # ratios 0.5 then 0.75: the first LSE would be crowded out
    diags, prof = diagnose([(6.0, 12.0), (15.0, 24.0)])
    assert prof is None
    assert [d.condition for d in diags] == ["LSE 1 would receive zero"]
    assert diags[0].index == 1


def test_all_violations_listed():
    diags, _ = diagnose([(12.0, 10.0), (12.5, 20.0), (30.0, 30.0)])
    conds = [d.condition for d in diags]
    assert "allocation would be infinite" in conds
    assert "LSE 2 would receive zero" in conds


@pytest.mark.parametrize(
    "raw,cond",
    [
        ([], "empty profile"),
        ([(1.0, 0.0)], "non-positive penalty"),
        ([(-1.0, 2.0)], "negative value"),
        ([(float("nan"), 2.0)], "non-finite bid"),
    ],
)
def test_basic_bid_checks(raw, cond):
    diags, prof = diagnose(raw)
    assert prof is None and diags[0].condition == cond


def test_unsorted_input_keeps_permutation():
    prof = validate_profile([(15.0, 24.0, "b"), (10.0, 12.0, "a")])
    np.testing.assert_array_equal(prof.pi, [12.0, 24.0])
    np.testing.assert_array_equal(prof.order, [1, 0])
    assert prof.lse_ids == ("a", "b")
    np.testing.assert_array_equal(prof.to_submission_order(np.array([1.0, 2.0])), [2.0, 1.0])


class TestGeometric:
    def test_worked_case(self):
        prof = geometric_bids(2, 0.5, 10.0, 12.0)
        np.testing.assert_allclose(prof.c, [10.0, 15.0])
        np.testing.assert_allclose(prof.pi, [12.0, 24.0])

    def test_successive_ratios(self):
        prof = geometric_bids(3, 0.5, 10.0, 12.0)
        np.testing.assert_allclose(prof.ratios.rho2, [5 / 6, 5 / 12, 5 / 24])

    def test_small_eta_limit(self):
        gaps = []
        for eta in (1e-1, 1e-2, 1e-3):
            prof = geometric_bids(5, eta, 10.0, 12.0)
            gaps.append(np.max(np.abs(prof.c - 10.0)))
        assert gaps[0] > gaps[1] > gaps[2]
        np.testing.assert_allclose(prof.c, [10.0] * 5, rtol=2e-3)
        with pytest.raises(ValueError):
            geometric_bids(5, 0.0, 10.0, 12.0)

    def test_unrepresentable_increments_rejected(self):
        # c_3 - c_2 = 1e-17 is below one ulp of 10, so the doubles tie
        with pytest.raises(ProfileValidationError) as info:
            geometric_bids(3, 1e-9, 10.0, 12.0)
        assert "would receive zero" in info.value.diagnostics[0].condition

    def test_rejects_c_hat_at_least_one(self):
        with pytest.raises(ProfileValidationError):
            geometric_bids(3, 0.5, 12.0, 12.0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 12), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
    def test_valid_and_value_ratio_decreasing(self, n, eta, c_hat):
        # increments must stay well above one ulp of c_N for the ratios to resolve
        assume(eta ** (n - 1) * (1 - eta) >= 1e-6)
        prof = geometric_bids(n, eta, c_hat * 12.0, 12.0)
        assert np.all(np.diff(prof.c / prof.pi) < 0)
        np.testing.assert_allclose(prof.ratios.rho2, c_hat * eta ** np.arange(n), rtol=1e-8)


def test_ratio_identities_random_profiles():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        prof = random_profile(rng, int(rng.integers(2, 8)))
        r = derived_ratios(prof)
        p = prof.pi_ext
        k = slice(0, prof.n - 1)
        np.testing.assert_allclose(
            r.rho_cvx[k], (1 - r.mu[k]) * r.rho1[k] + r.mu[k] * r.rho2[k], rtol=1e-13, atol=1e-15
        )
        lhs = p[2:] * (r.rho_cvx[k] - r.rho1[k]) + p[:-2] * (r.rho2[k] - r.rho_cvx[k])
        np.testing.assert_allclose(lhs, p[1:-1] * (r.rho2[k] - r.rho1[k]), rtol=1e-10, atol=1e-12)
        # rho2 > rho1 exactly when c_i > alpha_i
        assert np.all(prof.c[k] > r.alpha[k])
        assert np.all(r.rho2[k] > r.rho1[k])


def test_read_bids_csv(tmp_path):
    path = tmp_path / "bids.csv"
    path.write_text("lse_id,c_dollars_per_kwh,pi_dollars_per_kwh\nb,15,24\na,10,12\n")
    prof = validate_profile(read_bids_csv(path))
    assert prof.lse_ids == ("a", "b")
    path.write_text("id,c,pi\na,1,2\n")
    with pytest.raises(ValueError):
        read_bids_csv(path)
