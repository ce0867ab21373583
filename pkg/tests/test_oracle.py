from fractions import Fraction

import numpy as np
import pytest

from stochauction.bids import geometric_bids
from stochauction.mechanism import (
    expected_value_v,
    myerson_payments,
    objective,
    optimal_allocation,
    optimal_shortfall,
)
from stochauction.oracle import (
    OracleReport,
    SolverConfig,
    finite_difference_gradient,
    mc_expectation,
    myerson_payment_quadrature,
    random_profile,
    run_agreement_suite,
    solve_stage1_numeric,
    solve_stage2_exhaustive,
)


class TestStage1Solver:
    def test_single_lse(self, one_lse, weibull):
        res = solve_stage1_numeric(one_lse, weibull)
        assert res.converged
        assert res.allocation.x[0] == pytest.approx(2019.9, rel=1e-3)
        assert res.allocation.x[0] == pytest.approx(optimal_allocation(one_lse, weibull).x[0], rel=1e-8)

    def test_geometric_five(self, weibull):
        prof = geometric_bids(5, 0.5, 10.0, 12.0)
        res = solve_stage1_numeric(prof, weibull)
        np.testing.assert_allclose(res.allocation.x, optimal_allocation(prof, weibull).x, rtol=1e-4)

    def test_start_at_optimum(self, two_lse, weibull):
        x_star = optimal_allocation(two_lse, weibull).x
        res = solve_stage1_numeric(two_lse, weibull, x0=x_star)
        assert res.converged and res.iterations <= 1

    def test_objective_monotone(self, weibull, tables, rng):
        for d in [weibull, *tables]:
            prof = random_profile(rng, 4)
            hist = np.array(solve_stage1_numeric(prof, d).history)
            slack = 1e-12 * np.maximum(np.abs(hist[:-1]), 1.0)
            assert np.all(np.diff(hist) <= slack)

    def test_iteration_cap_reports_nonconvergence(self, two_lse, weibull):
        res = solve_stage1_numeric(two_lse, weibull, SolverConfig(max_iter=1))
        assert not res.converged
        assert res.grad_norm > 0
        assert objective(two_lse, res.allocation, weibull) <= objective(
            two_lse, np.full(2, weibull.mean() / 2), weibull
        )

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(max_iter=0)


class TestStage2Exhaustive:
    def test_worked(self):
        s = solve_stage2_exhaustive([1, 2, 3], 4, [1, 2, 3])
        assert list(s.y) == [1, 1, 0]
        assert sum(p * y for p, y in zip([1, 2, 3], s.y)) == 3

    def test_reversed_penalties(self):
        # the cheapest penalty now sits at index 3, so the shortage lands there first
        s = solve_stage2_exhaustive([1, 2, 3], 4, [3, 2, 1])
        assert list(s.y) == [0, 0, 2]

    def test_surplus(self):
        s = solve_stage2_exhaustive([1, 2, 3], 7, [1, 2, 3])
        assert list(s.y) == [0, 0, 0]

    def test_exact_rationals(self):
        x = [Fraction(1, 3), Fraction(2, 7), Fraction(5, 11)]
        w = Fraction(1, 5)
        s = solve_stage2_exhaustive(x, w, [1, 2, 3])
        assert sum(s.y) == sum(x) - w
        assert all(isinstance(v, (Fraction, int)) for v in s.y)
        assert s.y[0] == x[0]

    def test_refuses_large(self):
        with pytest.raises(ValueError):
            solve_stage2_exhaustive([1] * 9, 0, list(range(1, 10)))

    def test_matches_analytic_on_floats(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 7))
            x = rng.uniform(0, 4, n)
            pi = np.cumsum(rng.uniform(0.1, 2.0, n))
            w = rng.uniform(0, x.sum() + 1)
            exact = solve_stage2_exhaustive(x.tolist(), w, pi.tolist())
            assert pi @ exact.y == pytest.approx(pi @ optimal_shortfall(x, w).y, rel=1e-12, abs=1e-12)


class TestPaymentQuadrature:
    def test_single(self, one_lse, weibull):
        q = myerson_payment_quadrature(one_lse, weibull, 0)
        assert q.payment == pytest.approx(myerson_payments(one_lse, weibull).p[0], rel=1e-6)
        assert q.lower == 0.0 and q.upper == 10.0

    def test_geometric_all(self, weibull):
        prof = geometric_bids(5, 0.5, 10.0, 12.0)
        pay = myerson_payments(prof, weibull).p
        for i in range(5):
            assert myerson_payment_quadrature(prof, weibull, i).payment == pytest.approx(pay[i], rel=1e-6)


class TestMonteCarlo:
    def test_constant(self, weibull):
        est = mc_expectation(lambda w: np.ones_like(w), weibull, 1000, seed=0)
        assert est.mean == 1.0 and est.stderr == 0.0

    def test_mean_generation(self, weibull):
        est = mc_expectation(lambda w: w, weibull, 1_000_000, seed=0)
        assert abs(est.mean - weibull.mean()) < 3 * est.stderr
        assert abs(est.mean - 1337.0) < 3 * est.stderr + 1.0

    def test_shards_reproducible(self, weibull):
        a = mc_expectation(lambda w: w, weibull, 300_001, seed=3, shards=5)
        b = mc_expectation(lambda w: w, weibull, 300_001, seed=3, shards=5, workers=3)
        assert a.mean == b.mean and a.stderr == b.stderr
        assert a.n == 300_001

    def test_vector_valued(self, weibull):
        est = mc_expectation(lambda w: np.column_stack((w, w**2)), weibull, 10_000, seed=0)
        assert est.mean.shape == (2,)

    def test_rejects_empty(self, weibull):
        with pytest.raises(ValueError):
            mc_expectation(lambda w: w, weibull, 0, seed=0)


class TestFiniteDifferences:
    def test_linear_exact(self):
        c = np.array([1.5, -2.0, 3.25])
        g = finite_difference_gradient(lambda x: float(c @ x), np.array([10.0, 20.0, 30.0]), 0.5)
        np.testing.assert_allclose(g, c, rtol=1e-12)

    def test_value_function_at_origin(self, two_lse, weibull):
        g = finite_difference_gradient(lambda x: expected_value_v(two_lse, x, weibull), np.zeros(2), 1.0)
        assert np.all(g >= 0)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            finite_difference_gradient(lambda x: 0.0, np.zeros(1), 0.0)


def test_report_compare():
    ok = OracleReport.compare("a", 1.0, 1.0 + 1e-9, 1e-6)
    bad = OracleReport.compare("b", 1.0, 1.1, 1e-6)
    assert ok.passed and not bad.passed
    assert set(ok.to_dict()) >= {"name", "oracle_value", "closed_form_value", "abs_dev", "rel_dev", "tolerance", "passed"}


def test_quick_suite_passes(weibull):
    reports = run_agreement_suite(weibull, quick=True, seed=0)
    assert reports
    assert [r.name for r in reports if not r.passed] == []
