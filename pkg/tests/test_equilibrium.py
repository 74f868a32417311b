import math

import numpy as np
import pytest

from fairmarket.core import (
    BuyerPanel,
    CostStructure,
    GroupSet,
    LearningCurve,
    MarketConfig,
    TargetVector,
    curve_constant,
    learning_ante,
)
from fairmarket.equilibrium import (
    DemographicsUndefinedError,
    FormationViolationError,
    baseline_demographics,
    baseline_production,
    baseline_threshold,
    consistent_monetized_sets,
    general_best_response,
    intervention_threshold,
    market_potential,
    optimal_reserve,
    solve_baseline,
    solve_intervention,
)
from fairmarket.oracle import price_grid_search

UNIT = LearningCurve(1, 1, 1)


def two_group_market(rho1=9, rho2=4, kappa=(1.0, 1.0), sellers=2, curve=UNIT):
    rows = [[1.0, 0.0]] * rho1 + [[0.0, 1.0]] * rho2
    return MarketConfig(
        groups=GroupSet(("g1", "g2")),
        curve=curve,
        sellers=sellers,
        costs=CostStructure(np.array(kappa)),
        buyers=BuyerPanel(np.array(rows) if rows else np.zeros((0, 2))),
    )


class TestOptimalReserve:
    def test_spec_values(self):
        assert optimal_reserve(np.array([1.0, 2.0, 3.0])) == (2.0, 4.0)
        assert optimal_reserve(np.array([5.0, 5.0, 5.0])) == (5.0, 15.0)
        assert optimal_reserve(np.array([])) == (None, 0.0)
        assert optimal_reserve(np.array([0.0, 0.0])) == (None, 0.0)

    def test_tie_breaks_to_lowest_price(self):
        # 1 * 4 == 2 * 2 == 4: lowest maximizer wins
        price, rho = optimal_reserve(np.array([1.0, 1.0, 2.0, 2.0]))
        assert price == 1.0 and rho == 4.0

    def test_agrees_with_grid_search(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(0, 12))
            column = rng.uniform(0, 3, size=n)
            column[rng.random(n) < 0.3] = 0.0
            assert optimal_reserve(column) == price_grid_search(column)


class TestBaselineThreshold:
    def test_spec_values(self):
        assert baseline_threshold(8.0, UNIT) == pytest.approx(2.0)
        assert baseline_threshold(0.0, UNIT) == 0.0
        assert baseline_threshold(4.0, LearningCurve(2, 1, 1)) == pytest.approx(4.0)

    def test_sign_change_of_seller_payoff(self):
        # at kappa just below the threshold the entrant profits; just above, it loses
        rho, curve, m = 8.0, UNIT, 1
        tau = baseline_threshold(rho, curve)

        def best_payoff(kappa):
            x = (rho * curve.alpha * curve.beta / kappa) ** (1 / (curve.beta + 1))
            return rho * (1 - 1 / x) / m - kappa * x / m

        assert best_payoff(tau * 0.999) > 0
        assert best_payoff(tau * 1.001) < 0
        assert best_payoff(tau) == pytest.approx(0.0, abs=1e-12)


class TestBaselineProduction:
    def test_spec_values(self):
        per_seller, aggregate = baseline_production(8.0, 1.0, UNIT, 2)
        assert aggregate == pytest.approx(math.sqrt(8))
        assert per_seller == pytest.approx(math.sqrt(8) / 2)
        _, aggregate = baseline_production(9.0, 1.0, UNIT, 1)
        assert aggregate == pytest.approx(3.0)

    def test_formation_violation(self):
        with pytest.raises(FormationViolationError):
            baseline_production(1.0, 1.0, UNIT, 1)  # tau = 0.25 < kappa

    def test_monotonicity(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            curve = LearningCurve(rng.uniform(0.5, 3), rng.uniform(0.2, 2), rng.uniform(0.3, 3))
            kappa = float(rng.uniform(0.01, 0.2))
            rho1 = float(rng.uniform(5, 20))
            rho2 = rho1 * float(rng.uniform(1.01, 3))
            _, x1 = baseline_production(rho1, kappa, curve, 1)
            _, x2 = baseline_production(rho2, kappa, curve, 1)
            assert x2 >= x1
            _, x3 = baseline_production(rho1, kappa * 0.5, curve, 1)
            assert x3 >= x1

    def test_clears_the_ante_whenever_formed(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            curve = LearningCurve(rng.uniform(0.5, 3), rng.uniform(0.2, 2), rng.uniform(0.3, 3))
            rho = float(rng.uniform(0.5, 20))
            kappa = baseline_threshold(rho, curve) * float(rng.uniform(0.05, 1.0))
            _, aggregate = baseline_production(rho, kappa, curve, 1)
            assert aggregate > learning_ante(curve)


class TestSolveBaseline:
    def test_asymmetric_example(self):
        out = solve_baseline(two_group_market())
        assert out.potential.value == pytest.approx([9.0, 4.0])
        assert out.potential.price == (1.0, 1.0)
        assert out.thresholds == pytest.approx([2.25, 1.0])
        assert out.produced.samples == pytest.approx([3.0, 2.0])
        assert out.per_seller.samples == pytest.approx([1.5, 1.0])
        assert out.formed_groups == ("g1", "g2")
        assert baseline_demographics(out) == pytest.approx([0.6, 0.4])

    def test_no_buyers(self):
        cfg = two_group_market(rho1=0, rho2=0)
        out = solve_baseline(cfg)
        assert out.formed_groups == ()
        assert out.produced.total() == 0.0
        assert out.utilities.marketplace == 0.0
        assert np.all(out.utilities.sellers == 0.0)
        with pytest.raises(DemographicsUndefinedError):
            baseline_demographics(out)

    def test_symmetric_market_value(self):
        rows = np.tile([1.0, 1.0], (8, 1))
        cfg = MarketConfig(
            GroupSet(("a", "b")), UNIT, 2, CostStructure([1.0, 1.0]), BuyerPanel(rows)
        )
        out = solve_baseline(cfg)
        assert out.produced.samples == pytest.approx([math.sqrt(8)] * 2)
        assert out.utilities.marketplace == pytest.approx(2 * 8 * (1 - 8 ** -0.5), rel=1e-9)
        assert baseline_demographics(out) == pytest.approx([0.5, 0.5])

    def test_groups_decouple(self):
        base = solve_baseline(two_group_market())
        perturbed = solve_baseline(two_group_market(rho2=7))
        assert perturbed.produced.samples[0] == base.produced.samples[0]
        assert perturbed.potential.value[0] == base.potential.value[0]
        assert perturbed.produced.samples[1] != base.produced.samples[1]

    def test_potential_recomputable_from_panel(self):
        cfg = two_group_market()
        out = solve_baseline(cfg)
        for g in range(2):
            price = out.potential.price[g]
            clearing = int((cfg.buyers.values[:, g] >= price).sum())
            assert out.potential.value[g] == pytest.approx(price * clearing)


class TestInterventionProduction:
    def test_symmetric_example(self):
        cfg = two_group_market(rho1=8, rho2=8)
        # 8 one-sided buyers per group: rho = (8, 8)
        out = solve_intervention(cfg, TargetVector.uniform(2))
        assert out.total_samples == pytest.approx(math.sqrt(32))
        assert out.produced().samples == pytest.approx([math.sqrt(8)] * 2)
        assert out.formed and out.threshold == pytest.approx(2.0)

    def test_asymmetric_example(self):
        out = solve_intervention(two_group_market(), TargetVector.uniform(2))
        assert out.total_samples == pytest.approx(math.sqrt(26))
        assert out.threshold == pytest.approx(1.625)
        assert out.formed
        assert out.monetized == (0, 1)
        # group 2 gains data, group 1 loses, relative to the baseline (3, 2)
        allocated = out.produced().samples
        assert allocated[0] == pytest.approx(math.sqrt(26) / 2) and allocated[0] < 3
        assert allocated[1] == pytest.approx(math.sqrt(26) / 2) and allocated[1] > 2

    def test_costly_group_blocks_formation(self):
        out = solve_intervention(two_group_market(kappa=(1.0, 4.0)), TargetVector.uniform(2))
        assert not out.formed
        assert out.threshold == pytest.approx(1.625)
        assert out.total_samples == 0.0
        assert out.utilities.marketplace == 0.0
        assert np.all(out.utilities.buyers == 0.0)

    def test_no_demand_means_no_formation(self):
        out = solve_intervention(two_group_market(rho1=0, rho2=0), TargetVector.uniform(2))
        assert not out.formed and out.total_samples == 0.0 and out.monetized == ()
        assert out.threshold is None

    def test_zero_weight_group_never_monetized(self):
        out = solve_intervention(two_group_market(), TargetVector([1.0, 0.0]))
        assert out.monetized == (0,)
        assert out.produced().samples[1] == 0.0

    def test_uniform_threshold_is_mean_of_baseline_thresholds(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            k = int(rng.integers(1, 5))
            curve = LearningCurve(rng.uniform(0.5, 3), rng.uniform(0.2, 2), rng.uniform(0.3, 3))
            rho = rng.uniform(0.5, 10, size=k)
            members = np.arange(k)
            uniform = np.full(k, 1.0 / k)
            tau = intervention_threshold(rho, uniform, members, curve)
            assert tau == pytest.approx(
                np.mean(rho) * curve_constant(curve), rel=1e-9
            )

    def test_symmetric_collapse(self):
        rows = np.tile([1.0, 1.0], (8, 1))
        cfg = MarketConfig(
            GroupSet(("a", "b")), UNIT, 2, CostStructure([1.0, 1.0]), BuyerPanel(rows)
        )
        base = solve_baseline(cfg)
        inter = solve_intervention(cfg, TargetVector.uniform(2))
        assert inter.produced().samples == pytest.approx(base.produced.samples, rel=1e-9)
        assert inter.utilities.marketplace == pytest.approx(
            base.utilities.marketplace, rel=1e-9
        )
        assert inter.utilities.sellers == pytest.approx(base.utilities.sellers, rel=1e-9)
        assert inter.utilities.buyers == pytest.approx(base.utilities.buyers, rel=1e-9)

    def test_consistent_sets_are_nested_prefixes(self):
        cfg = two_group_market()
        candidates = consistent_monetized_sets(
            market_potential(cfg.buyers), TargetVector.uniform(2), cfg.costs, cfg.curve
        )
        assert candidates == [((0, 1), pytest.approx(math.sqrt(26)))]

    def test_monetized_clears_ante_when_formed(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            k = int(rng.integers(2, 4))
            curve = LearningCurve(rng.uniform(0.5, 3), rng.uniform(0.2, 2), rng.uniform(0.3, 3))
            rows = rng.uniform(0.2, 3, size=(int(rng.integers(1, 8)), k))
            cfg = MarketConfig(
                GroupSet(tuple(f"g{i}" for i in range(k))),
                curve,
                int(rng.integers(1, 4)),
                CostStructure(rng.uniform(0.02, 0.3, size=k)),
                BuyerPanel(rows),
            )
            draws = rng.uniform(0.1, 1, size=k)
            target = TargetVector(draws / draws.sum())
            out = solve_intervention(cfg, target)
            if out.formed:
                ante = learning_ante(curve)
                for g in out.monetized:
                    assert target.weights[g] * out.total_samples > ante


class TestGeneralBestResponse:
    def test_quintic_instance(self):
        curves = (LearningCurve(5, 1 / 3, 3), LearningCurve(5, 1 / 4, 4))
        x = general_best_response(np.array([]), 1.0, curves, 1.0)
        assert x == pytest.approx(1.1673, abs=1e-4)

    def test_prohibitive_cost(self):
        curves = (LearningCurve(5, 1 / 3, 3), LearningCurve(5, 1 / 4, 4))
        assert general_best_response(np.array([]), 1.0, curves, 1e6) == 0.0

    def test_reduces_to_closed_form(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            curve = LearningCurve(rng.uniform(0.5, 4), rng.uniform(0.2, 2), rng.uniform(0.4, 3))
            price = float(rng.uniform(0.3, 3))
            rho = price  # one cleared buyer
            kappa = baseline_threshold(rho, curve) * float(rng.uniform(0.05, 0.95))
            x = general_best_response(np.array([]), price, (curve,), kappa)
            _, expected = baseline_production(rho, kappa, curve, 1)
            assert x == pytest.approx(expected, rel=1e-8)

    def test_finite_marginal_below_cost(self):
        # a rival already holds data, so the marginal payoff at zero is finite
        curve = LearningCurve(1, 1, 1)
        x = general_best_response(np.array([5.0]), 1.0, (curve,), 10.0)
        assert x == 0.0
