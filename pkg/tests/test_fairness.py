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
)
from fairmarket.equilibrium import market_potential, solve_intervention
from fairmarket.fairness import (
    DegenerateTargetError,
    check_backfire,
    check_sufficient_condition,
    check_uniform_safety,
    construct_backfire_market,
    construct_verge_market,
    max_threshold,
    optimal_target,
    peak_threshold,
)

UNIT = LearningCurve(1, 1, 1)
GROUPS = GroupSet(("g1", "g2"))


def panel_9_4():
    rows = [[1.0, 0.0]] * 9 + [[0.0, 1.0]] * 4
    return BuyerPanel(np.array(rows))


def market(kappa, buyers=None, sellers=2, curve=UNIT, groups=GROUPS):
    return MarketConfig(
        groups=groups,
        curve=curve,
        sellers=sellers,
        costs=CostStructure(np.array(kappa, dtype=float)),
        buyers=buyers if buyers is not None else panel_9_4(),
    )


class TestCheckBackfire:
    def test_costly_group_backfires(self):
        report = check_backfire(market([1.0, 4.0]), TargetVector.uniform(2))
        assert report.backfired
        assert report.baseline_formed_groups == ("g1",)
        assert not report.baseline_fully_formed
        assert not report.intervention_formed

    def test_symmetric_market_is_safe(self):
        rows = np.tile([1.0, 1.0], (8, 1))
        report = check_backfire(market([1.0, 1.0], BuyerPanel(rows)), TargetVector.uniform(2))
        assert not report.backfired
        assert report.baseline_fully_formed and report.intervention_formed

    def test_empty_market_cannot_backfire(self):
        report = check_backfire(
            market([1.0, 1.0], BuyerPanel(np.zeros((0, 2)))), TargetVector.uniform(2)
        )
        assert not report.backfired
        assert report.baseline_formed_groups == ()


class TestPeakThreshold:
    def test_subset_maximization(self):
        potential = market_potential(panel_9_4())
        # thresholds over {g1}, {g2}, {g1,g2} are 1.125, 0.5, 1.625
        peak = peak_threshold(potential, TargetVector.uniform(2), UNIT)
        assert peak == pytest.approx(1.625)

    def test_group_cap(self):
        k = 13
        potential = market_potential(BuyerPanel(np.ones((1, k))))
        with pytest.raises(ValueError):
            peak_threshold(potential, TargetVector.uniform(k), UNIT)


class TestConstructBackfireMarket:
    def test_spec_construction(self):
        target = TargetVector.uniform(2)
        built = construct_backfire_market(target, panel_9_4(), UNIT, 2)
        assert built.costs.per_sample == pytest.approx([1.0, 1.01 * 1.625 / 0.5])
        assert check_backfire(built, target).backfired

    def test_three_symmetric_groups(self):
        target = TargetVector.uniform(3)
        rows = np.eye(3).repeat(3, axis=0)
        built = construct_backfire_market(
            target, BuyerPanel(rows), UNIT, 2, groups=GroupSet(("a", "b", "c"))
        )
        assert check_backfire(built, target).backfired

    def test_degenerate_target_rejected(self):
        with pytest.raises(DegenerateTargetError):
            construct_backfire_market(TargetVector([1.0, 0.0]), panel_9_4(), UNIT, 2)

    def test_margin_must_be_positive(self):
        with pytest.raises(ValueError):
            construct_backfire_market(
                TargetVector.uniform(2), panel_9_4(), UNIT, 2, margin=0.0
            )


class TestUniformSafety:
    def test_fully_forming_market(self):
        rows = np.tile([1.0, 1.0], (8, 1))
        assert check_uniform_safety(market([1.0, 1.0], BuyerPanel(rows)))

    def test_vacuous_when_not_fully_forming(self):
        assert check_uniform_safety(market([1.0, 4.0]))  # group 2 unformed at baseline


class TestVergeMarket:
    def test_boundary_formation(self):
        verge = construct_verge_market(UNIT, 2, GROUPS, 1.0)
        assert verge.costs.per_sample == pytest.approx([0.25, 0.25])
        assert solve_intervention(verge, TargetVector.uniform(2)).formed
        assert not solve_intervention(verge, TargetVector([0.6, 0.4])).formed

    def test_scaling_preserves_flags(self):
        for c_mu in (1.0, 2.0):
            verge = construct_verge_market(UNIT, 2, GROUPS, c_mu)
            assert verge.costs.per_sample == pytest.approx([0.25 * c_mu] * 2)
            assert solve_intervention(verge, TargetVector.uniform(2)).formed
            assert not solve_intervention(verge, TargetVector([0.6, 0.4])).formed

    def test_baseline_demographics_are_uniform(self):
        from fairmarket.equilibrium import baseline_demographics, solve_baseline

        verge = construct_verge_market(LearningCurve(2, 0.7, 1.4), 3, GROUPS, 1.3)
        out = solve_baseline(verge)
        assert len(out.formed_groups) == 2
        assert baseline_demographics(out) == pytest.approx([0.5, 0.5])


class TestOptimalTarget:
    def test_spec_values(self):
        potential = market_potential(panel_9_4())
        members = np.array([0, 1])
        target = optimal_target(potential, members, beta=1.0)
        assert target.weights == pytest.approx([0.6, 0.4])
        assert max_threshold(potential, members, UNIT) == pytest.approx(1.69)

    def test_symmetric_gives_uniform(self):
        potential = market_potential(BuyerPanel(np.tile([2.0, 2.0], (3, 1))))
        target = optimal_target(potential, np.array([0, 1]), beta=0.7)
        assert target.weights == pytest.approx([0.5, 0.5])

    def test_single_group(self):
        potential = market_potential(panel_9_4())
        target = optimal_target(potential, np.array([1]), beta=1.0)
        assert target.weights == pytest.approx([0.0, 1.0])

    def test_uniform_demand_threshold_is_mean(self):
        potential = market_potential(BuyerPanel(np.tile([2.0, 2.0], (3, 1))))
        assert max_threshold(potential, np.array([0, 1]), UNIT) == pytest.approx(
            6.0 * curve_constant(UNIT)
        )

    def test_rejects_empty_or_worthless_sets(self):
        potential = market_potential(panel_9_4())
        with pytest.raises(ValueError):
            optimal_target(potential, np.array([], dtype=int), beta=1.0)
        worthless = market_potential(BuyerPanel(np.zeros((1, 2))))
        with pytest.raises(ValueError):
            optimal_target(worthless, np.array([0]), beta=1.0)
        with pytest.raises(ValueError):
            max_threshold(worthless, np.array([0]), UNIT)


class TestSufficientCondition:
    def test_tiny_costs_satisfy_and_form(self):
        rows = np.tile([1.0, 1.0], (8, 1))
        cfg = market([1e-4, 1e-4], BuyerPanel(rows))
        report = check_sufficient_condition(cfg, TargetVector.uniform(2))
        assert report.applicable and report.satisfied
        assert report.eta == pytest.approx(1e-4 / 2.0)
        assert report.a == report.b == 2.0
        assert report.r == 1.0
        assert report.bound == pytest.approx(0.5)
        assert solve_intervention(cfg, TargetVector.uniform(2)).formed

    def test_at_threshold_not_satisfied(self):
        # eta = 1 with r|G| > 1 puts the bound below 1: no guarantee
        cfg = market([2.25, 1.0])
        report = check_sufficient_condition(cfg, TargetVector.uniform(2))
        assert report.applicable
        assert report.eta == pytest.approx(1.0)
        assert report.r == pytest.approx(9 / 4)
        assert report.bound < 1.0
        assert not report.satisfied

    def test_not_applicable_when_not_fully_forming(self):
        report = check_sufficient_condition(market([1.0, 4.0]), TargetVector.uniform(2))
        assert not report.applicable and not report.satisfied
        assert report.eta is None

    def test_invariant_a_ge_b_ge_one(self):
        rng = np.random.default_rng(6)
        rows = np.tile([1.0, 1.0, 1.0], (6, 1))
        cfg = market(
            [0.1, 0.1, 0.1],
            BuyerPanel(rows),
            groups=GroupSet(("a", "b", "c")),
        )
        for _ in range(20):
            draws = rng.uniform(0.05, 1, size=3)
            target = TargetVector(draws / draws.sum())
            report = check_sufficient_condition(cfg, target)
            assert report.a >= report.b >= 1.0
            assert report.eta == pytest.approx(
                max(cfg.costs.per_sample / (6.0 * curve_constant(UNIT)))
            )
