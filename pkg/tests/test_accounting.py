"""Accounting: conversions, composition, splits, and the spend ledger."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privreg.accounting import (
    MU_BRACKET,
    BudgetSplit,
    PrivacyBudget,
    PrivacyLedger,
    compose,
    delta_for_mu,
    mu_for_epsilon_delta,
    per_round_budget,
    split_budget,
    standard_normal_cdf,
)

# Reference values computed independently with mpmath at 50 digits.
DELTA_MU1_EPS1 = 0.1269367375066439
DELTA_MU1_EPS0 = 0.3829249225480262
MU_EPS1_DELTA1E6 = 0.23670438066343571


class TestDeltaForMu:
    def test_spot_mu1_eps1(self):
        assert abs(delta_for_mu(1.0, 1.0) - DELTA_MU1_EPS1) <= 1e-12

    def test_spot_mu1_eps0(self):
        assert abs(delta_for_mu(1.0, 0.0) - DELTA_MU1_EPS0) <= 1e-12

    def test_eps0_closed_form(self):
        # At epsilon = 0 the expression reduces to Phi(mu/2) - Phi(-mu/2).
        for mu in (0.25, 1.0, 3.0):
            expected = standard_normal_cdf(mu / 2.0) - standard_normal_cdf(-mu / 2.0)
            assert abs(delta_for_mu(mu, 0.0) - expected) <= 1e-15

    def test_underflow_returns_exact_zero(self):
        # The true value near 2e-2175 is far below the double floor.
        assert delta_for_mu(0.1, 10.0) == 0.0

    def test_strictly_increasing_in_mu(self):
        eps = 1.0
        mus = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]
        deltas = [delta_for_mu(m, eps) for m in mus]
        for lo, hi in zip(deltas, deltas[1:]):
            assert hi - lo > 1e-12

    def test_nonincreasing_in_epsilon(self):
        mu = 1.0
        epss = [0.0, 0.5, 1.0, 2.0, 5.0]
        deltas = [delta_for_mu(mu, e) for e in epss]
        for lo, hi in zip(deltas, deltas[1:]):
            assert hi <= lo

    def test_range(self):
        assert 0.0 <= delta_for_mu(50.0, 0.0) < 1.0
        assert delta_for_mu(100.0, 0.0) == math.nextafter(1.0, 0.0)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            delta_for_mu(0.0, 1.0)
        with pytest.raises(ValueError):
            delta_for_mu(-1.0, 1.0)
        with pytest.raises(ValueError):
            delta_for_mu(1.0, -0.5)
        with pytest.raises(ValueError):
            delta_for_mu(math.inf, 1.0)
        with pytest.raises(ValueError):
            delta_for_mu(math.nan, 1.0)


class TestMuForEpsilonDelta:
    def test_spot(self):
        assert abs(mu_for_epsilon_delta(1.0, 1e-6) - MU_EPS1_DELTA1E6) <= 1e-9

    def test_round_trip_grid(self):
        for mu in (0.1, 0.5, 1.0, 2.0, 5.0):
            for eps in (0.1, 1.0, 10.0):
                delta = delta_for_mu(mu, eps)
                if delta == 0.0:
                    # Underflowed point; inversion has nothing to target.
                    assert (mu, eps) == (0.1, 10.0)
                    continue
                assert abs(mu_for_epsilon_delta(eps, delta) - mu) <= 1e-6

    def test_delta_gap_contract(self):
        mu = mu_for_epsilon_delta(2.0, 1e-5)
        assert abs(delta_for_mu(mu, 2.0) - 1e-5) <= 1e-9

    def test_rejects_boundary_delta(self):
        with pytest.raises(ValueError):
            mu_for_epsilon_delta(1.0, 0.0)
        with pytest.raises(ValueError):
            mu_for_epsilon_delta(1.0, 1.0)
        with pytest.raises(ValueError):
            mu_for_epsilon_delta(-1.0, 0.5)

    def test_rejects_delta_outside_bracket_range(self):
        # Brackets cap mu at 100, so delta ~ 1 - ulp is reachable but a delta
        # below the lower bracket's image is not once it stops underflowing.
        lo_image = delta_for_mu(MU_BRACKET[0], 0.0)
        assert lo_image > 0.0
        with pytest.raises(ValueError):
            mu_for_epsilon_delta(0.0, lo_image / 2.0)


class TestComposeAndSplit:
    def test_compose_pythagorean(self):
        assert compose([3.0, 4.0]) == 5.0
        assert compose([]) == 0.0
        assert compose([2.0]) == 2.0

    def test_compose_rejects(self):
        with pytest.raises(ValueError):
            compose([1.0, -1.0])
        with pytest.raises(ValueError):
            compose([math.inf])
        with pytest.raises(ValueError):
            compose([math.nan])

    def test_split_examples(self):
        assert split_budget(2.0, 1.0, 0.0, 0.0) == (2.0, 0.0, 0.0)
        parts = split_budget(math.sqrt(3.0), 1.0, 1.0, 1.0)
        for p in parts:
            assert abs(p - 1.0) <= 1e-12
        parts = split_budget(5.0, 3.0, 4.0, 0.0)
        assert abs(parts[0] - 3.0) <= 1e-12
        assert abs(parts[1] - 4.0) <= 1e-12
        assert parts[2] == 0.0

    def test_split_infinite_total(self):
        parts = split_budget(math.inf, 1.0, 2.0, 0.0)
        assert parts[0] == math.inf and parts[1] == math.inf
        assert parts[2] == 0.0  # not nan

    def test_split_rejects(self):
        with pytest.raises(ValueError):
            split_budget(0.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            split_budget(1.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            split_budget(1.0, -1.0, 1.0, 1.0)

    def test_per_round(self):
        assert per_round_budget(1.0, 4) == 0.5
        assert per_round_budget(0.0, 3) == 0.0
        with pytest.raises(ValueError):
            per_round_budget(1.0, 0)
        with pytest.raises(ValueError):
            per_round_budget(-1.0, 2)

    @given(
        mu_total=st.floats(min_value=1e-3, max_value=50.0),
        a=st.floats(min_value=0.0, max_value=10.0),
        b=st.floats(min_value=0.0, max_value=10.0),
        c=st.floats(min_value=0.0, max_value=10.0),
    )
    def test_split_recomposes(self, mu_total, a, b, c):
        if a == 0.0 and b == 0.0 and c == 0.0:
            return
        parts = split_budget(mu_total, a, b, c)
        assert abs(compose(parts) - mu_total) <= 1e-9 * mu_total


class TestPrivacyBudget:
    def test_from_epsilon_delta(self):
        b = PrivacyBudget.from_epsilon_delta(1.0, 1e-6)
        assert abs(b.mu_total - MU_EPS1_DELTA1E6) <= 1e-9
        assert b.epsilon == 1.0 and b.delta == 1e-6

    def test_from_mu(self):
        b = PrivacyBudget.from_mu(1.0, 1.0)
        assert b.delta == delta_for_mu(1.0, 1.0)

    def test_from_mu_infinite(self):
        b = PrivacyBudget.from_mu(math.inf, 1.0)
        assert b.mu_total == math.inf
        assert b.delta == math.nextafter(1.0, 0.0)

    def test_from_mu_underflow_saturates(self):
        b = PrivacyBudget.from_mu(0.1, 10.0)
        assert b.delta == math.nextafter(0.0, 1.0)

    def test_rejects_inconsistent_triple(self):
        with pytest.raises(ValueError):
            PrivacyBudget(epsilon=1.0, delta=0.5, mu_total=1.0)

    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            PrivacyBudget(epsilon=0.0, delta=1e-6, mu_total=1.0)
        with pytest.raises(ValueError):
            PrivacyBudget(epsilon=1.0, delta=0.0, mu_total=1.0)
        with pytest.raises(ValueError):
            PrivacyBudget(epsilon=1.0, delta=1e-6, mu_total=-1.0)


class TestBudgetSplitType:
    def test_from_ratio(self):
        s = BudgetSplit.from_ratio(2.0, 1.0, 0.0, 0.0)
        assert (s.mu1, s.mu2, s.mu3) == (2.0, 0.0, 0.0)
        assert s.mu_total == 2.0

    def test_mu_total_infinite(self):
        s = BudgetSplit.from_ratio(math.inf, 1.0, 1.0, 0.0)
        assert s.mu_total == math.inf
        assert s.mu3 == 0.0

    def test_rejects_all_zero(self):
        with pytest.raises(ValueError):
            BudgetSplit(mu1=0.0, mu2=0.0, mu3=0.0)


class TestPrivacyLedger:
    def test_charge_and_total(self):
        led = PrivacyLedger()
        led.charge("gram", 3.0, 1.0)
        led.charge("cross-1", 4.0, 1.0)
        assert led.total() == 5.0
        assert [e.label for e in led.entries] == ["gram", "cross-1"]

    def test_empty_total(self):
        assert PrivacyLedger().total() == 0.0

    def test_infinite_entries(self):
        led = PrivacyLedger()
        led.charge("gram", math.inf, 1.0)
        assert led.total() == math.inf
        led.assert_within(math.inf)
        with pytest.raises(ValueError):
            led.assert_within(1.0)

    def test_assert_within(self):
        led = PrivacyLedger()
        led.charge("a", 1.0, 1.0)
        led.assert_within(1.0)
        with pytest.raises(ValueError):
            led.assert_within(1.1)

    def test_charge_rejects(self):
        led = PrivacyLedger()
        with pytest.raises(ValueError):
            led.charge("a", 0.0, 1.0)
        with pytest.raises(ValueError):
            led.charge("a", 1.0, -1.0)
        with pytest.raises(ValueError):
            led.charge("a", 1.0, math.inf)

    @settings(max_examples=30)
    @given(
        mu_total=st.floats(min_value=0.01, max_value=20.0),
        weights=st.lists(st.floats(min_value=1e-3, max_value=1.0), min_size=1, max_size=100),
    )
    def test_arbitrary_split_recomposes_through_ledger(self, mu_total, weights):
        # Charging any per-release allocation whose squares sum to
        # mu_total^2 must reproduce mu_total exactly up to rounding.
        norm = math.sqrt(sum(w * w for w in weights))
        led = PrivacyLedger()
        for i, w in enumerate(weights):
            led.charge(f"r{i}", mu_total * (w / norm), 1.0)
        assert abs(led.total() - mu_total) <= 1e-12 * max(1.0, mu_total)
