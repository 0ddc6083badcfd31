"""Reward family tests: payoff values, reward branches, monotonicity checks."""

import numpy as np
import pytest

from entdist import (
    Absorbed,
    Action,
    Connected,
    GeometricPayoff,
    LinearTradeoffPayoff,
    ModelParams,
    RatioPayoff,
    TabularPayoff,
    check_property1,
    check_property2,
    cost_table,
    payoff,
    payoff_table,
    reward,
)

FAMILIES = [RatioPayoff(), GeometricPayoff(0.95), LinearTradeoffPayoff()]


class TestPayoff:
    def test_ratio_full(self):
        assert payoff(RatioPayoff(), 100, 100, ModelParams(100, 100, 0.5)) == 1.0

    def test_geometric_value(self):
        got = payoff(GeometricPayoff(0.95), 10, 2, ModelParams(10, 5, 0.5))
        assert got == pytest.approx(9.025, abs=1e-12)

    def test_linear_full_cluster_full_horizon(self):
        params = ModelParams(8, 12, 0.5)
        assert payoff(LinearTradeoffPayoff(), 8, 12, params) == 0.0

    def test_out_of_range_rejected(self):
        params = ModelParams(3, 4, 0.5)
        with pytest.raises(ValueError):
            payoff(RatioPayoff(), 4, 2, params)
        with pytest.raises(ValueError):
            payoff(RatioPayoff(), 2, 0, params)
        with pytest.raises(ValueError):
            payoff(RatioPayoff(), 2, 5, params)

    def test_lambda_range_enforced(self):
        with pytest.raises(ValueError):
            GeometricPayoff(0.0)
        with pytest.raises(ValueError):
            GeometricPayoff(1.5)
        GeometricPayoff(1.0)

    def test_tabular_lookup(self):
        params = ModelParams(1, 2, 0.5)
        spec = TabularPayoff(np.array([[0.0, 1.0], [2.0, 3.0]]))
        assert payoff(spec, 1, 2, params) == 3.0

    def test_tabular_shape_checked(self):
        params = ModelParams(2, 2, 0.5)
        with pytest.raises(ValueError):
            payoff(TabularPayoff(np.zeros((2, 2))), 1, 1, params)

    def test_tabular_negative_cost_rejected(self):
        params = ModelParams(1, 2, 0.5)
        spec = TabularPayoff(np.zeros((2, 2)), cost=np.array([[0.0, 0.0], [-1.0, 0.0]]))
        with pytest.raises(ValueError):
            cost_table(spec, params)


class TestPayoffTable:
    @pytest.mark.parametrize("spec", FAMILIES, ids=["ratio", "geometric", "linear"])
    def test_matches_scalar_exactly(self, spec):
        params = ModelParams(13, 9, 0.5)
        table = payoff_table(spec, params)
        for s in range(14):
            for n in range(1, 10):
                assert table[s, n - 1] == payoff(spec, s, n, params)

    def test_geometric_powers_stable_to_horizon_100(self):
        # lam**n against a running product: both ways must agree tightly.
        lam = 0.95
        direct = np.array([lam**n for n in range(1, 101)])
        running = np.cumprod(np.full(100, lam))
        assert np.max(np.abs(direct - running)) < 1e-12

    def test_base_families_have_zero_cost(self):
        params = ModelParams(4, 6, 0.3)
        for spec in FAMILIES:
            assert not cost_table(spec, params).any()


class TestReward:
    def test_stop_pays_payoff(self):
        params = ModelParams(5, 9, 0.4)
        spec = RatioPayoff()
        assert reward(spec, Connected(3, 4), Action.STOP, params) == payoff(spec, 3, 4, params)

    def test_continue_is_free_for_base_families(self):
        params = ModelParams(5, 9, 0.4)
        for spec in FAMILIES:
            assert reward(spec, Connected(3, 4), Action.CONTINUE, params) == 0.0

    def test_continue_charges_tabular_cost(self):
        params = ModelParams(1, 2, 0.5)
        spec = TabularPayoff(np.zeros((2, 2)), cost=np.array([[0.5, 0.0], [0.25, 0.0]]))
        assert reward(spec, Connected(0, 1), Action.CONTINUE, params) == -0.5

    def test_absorbed_earns_nothing(self):
        params = ModelParams(5, 9, 0.4)
        for spec in FAMILIES:
            assert reward(spec, Absorbed(4), Action.STOP, params) == 0.0

    def test_disallowed_action_rejected(self):
        params = ModelParams(5, 9, 0.4)
        with pytest.raises(ValueError):
            reward(RatioPayoff(), Connected(5, 4), Action.CONTINUE, params)


class TestMonotonicityChecks:
    @pytest.mark.parametrize("spec", FAMILIES + [GeometricPayoff(1.0)],
                             ids=["ratio", "geometric", "linear", "geometric-lam1"])
    @pytest.mark.parametrize("shape", [(1, 1), (3, 4), (12, 7), (25, 25)])
    def test_base_families_pass_both(self, spec, shape):
        params = ModelParams(shape[0], shape[1], 0.5)
        assert check_property1(spec, params) == (True, None)
        assert check_property2(spec, params) == (True, None)

    def test_size_violation_located(self):
        params = ModelParams(2, 1, 0.5)
        spec = TabularPayoff(np.array([[0.0], [2.0], [1.0]]))
        assert check_property1(spec, params) == (False, (1, 2, 1))

    def test_slot_violation_located(self):
        params = ModelParams(1, 2, 0.5)
        spec = TabularPayoff(np.array([[0.0, 0.0], [1.0, 2.0]]))
        assert check_property2(spec, params) == (False, (1, 1, 2))
