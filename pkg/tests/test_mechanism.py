import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmarket.core import (
    BuyerPanel,
    CostStructure,
    GroupSet,
    LearningCurve,
    MarketConfig,
    accuracy,
)
from fairmarket.mechanism import (
    CoalitionLimitError,
    Dataset,
    PriceVector,
    SellerProfile,
    allocate,
    buyer_utilities,
    buyer_utility,
    coalition_weight,
    marketplace_utility,
    revenue,
    seller_utility,
    shapley_division,
)

UNIT = LearningCurve(1, 1, 1)


def market(values, kappa, sellers=2, curve=UNIT, labels=None):
    values = np.asarray(values, dtype=float)
    k = values.shape[1] if values.ndim == 2 else len(kappa)
    labels = labels or tuple(f"g{i+1}" for i in range(k))
    return MarketConfig(
        groups=GroupSet(labels),
        curve=curve,
        sellers=sellers,
        costs=CostStructure(np.asarray(kappa, dtype=float)),
        buyers=BuyerPanel(values if values.ndim == 2 else values.reshape(0, k)),
    )


def ordering_shapley(holdings, reserve, curve):
    """Average marginal accuracy over all seller orderings (independent oracle)."""
    m = len(holdings)
    payments = np.zeros(m)
    for order in itertools.permutations(range(m)):
        running = 0.0
        for j in order:
            payments[j] += accuracy(curve, running + holdings[j]) - accuracy(curve, running)
            running += holdings[j]
    return reserve * payments / math.factorial(m)


class TestAllocate:
    def test_clears(self):
        assert allocate(2, 1, 7) == 7
        assert allocate(0.5, 1, 7) == 0
        assert allocate(1, 1, 0) == 0  # boundary bid clears an empty aggregate

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            allocate(1, 0, 1)
        with pytest.raises(ValueError):
            allocate(-1, 1, 1)


class TestRevenue:
    def test_values(self):
        assert revenue(2, UNIT, 2) == pytest.approx(1.0)
        assert revenue(2, UNIT, 0) == 0.0
        assert revenue(1, LearningCurve(5, 1 / 3, 3), 1) == pytest.approx(5 - 1 / 3)


class TestShapleyDivision:
    def test_equal_split_for_identical_sellers(self):
        profile = SellerProfile.symmetric(np.array([1.0]), 2)
        payments = shapley_division(profile, 0, 1.0, 1.0, UNIT)
        assert payments == pytest.approx([0.25, 0.25])

    def test_single_seller_takes_all(self):
        profile = SellerProfile((Dataset([2.0]),))
        assert shapley_division(profile, 0, 1.0, 1.0, UNIT) == pytest.approx([0.5])

    def test_asymmetric_matches_ordering_enumeration(self):
        # holdings (1, 3): marginals ((G(1)+G(4)-G(3))/2, (G(3)+G(4)-G(1))/2)
        profile = SellerProfile((Dataset([1.0]), Dataset([3.0])))
        payments = shapley_division(profile, 0, 1.0, 1.0, UNIT)
        expected = ordering_shapley([1.0, 3.0], 1.0, UNIT)
        assert payments == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx([1 / 24, 17 / 24])
        assert payments.sum() == pytest.approx(accuracy(UNIT, 4.0))

    def test_below_reserve_pays_nothing(self):
        profile = SellerProfile((Dataset([1.0]), Dataset([3.0])))
        assert shapley_division(profile, 0, 2.0, 1.0, UNIT) == pytest.approx([0.0, 0.0])

    def test_random_profiles_match_ordering_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            m = int(rng.integers(1, 5))
            holdings = rng.uniform(0, 4, size=m)
            profile = SellerProfile(tuple(Dataset([h]) for h in holdings))
            reserve = float(rng.uniform(0.2, 3))
            got = shapley_division(profile, 0, reserve, reserve, UNIT)
            want = ordering_shapley(list(holdings), reserve, UNIT)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_enumeration_cap(self):
        profile = SellerProfile.symmetric(np.array([1.0]), 21)
        with pytest.raises(CoalitionLimitError):
            shapley_division(profile, 0, 1.0, 1.0, UNIT)

    def test_weights_sum_to_one(self):
        for m in range(1, 8):
            total = sum(
                coalition_weight(size, m) * math.comb(m - 1, size) for size in range(m)
            )
            assert total == pytest.approx(1.0)


class TestMarketplaceUtility:
    def test_double_sum_oracle(self):
        cfg = market(np.tile([1.0, 1.0], (8, 1)), [1.0, 1.0])
        agg = np.array([math.sqrt(8), math.sqrt(8)])
        profile = SellerProfile.symmetric(agg / 2, 2)
        prices = PriceVector(np.array([1.0, 1.0]))
        w = marketplace_utility(cfg, prices, profile)
        # direct double sum over (buyer, group) pairs
        direct = 0.0
        for i in range(cfg.buyers.size):
            for g in range(2):
                if cfg.buyers.values[i, g] >= prices.prices[g]:
                    direct += prices.prices[g] * accuracy(UNIT, agg[g])
        assert w == pytest.approx(direct, rel=1e-12)
        assert w == pytest.approx(2 * 8 * (1 - 8 ** -0.5), rel=1e-9)

    def test_no_buyers(self):
        cfg = market(np.zeros((0, 1)), [1.0])
        profile = SellerProfile.symmetric(np.array([4.0]), 2)
        assert marketplace_utility(cfg, PriceVector(np.array([1.0])), profile) == 0.0

    def test_partial_clearing(self):
        cfg = market(np.array([[1.0], [2.0], [3.0]]), [1.0])
        profile = SellerProfile((Dataset([4.0]),))
        w = marketplace_utility(cfg, PriceVector(np.array([2.0])), profile)
        assert w == pytest.approx(4 * 0.75)


class TestSellerUtility:
    def test_symmetric_value(self):
        cfg = market(np.tile([1.0, 1.0], (8, 1)), [1.0, 1.0])
        half = math.sqrt(8) / 2
        profile = SellerProfile.symmetric(np.array([half, half]), 2)
        v = seller_utility(cfg, PriceVector(np.array([1.0, 1.0])), profile, 0)
        assert v == pytest.approx(0.5 * 2 * 8 * (1 - 8 ** -0.5) - 2 * half, rel=1e-9)
        assert v == pytest.approx(2.3431, abs=1e-4)

    def test_symmetric_path_equals_exact_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            m = int(rng.integers(1, 5))
            row = rng.uniform(0.1, 3, size=2)
            cfg = market(rng.uniform(0, 2, size=(4, 2)), [0.5, 0.7], sellers=m)
            symmetric = SellerProfile.symmetric(row, m)
            # force the exact path with a nudged twin profile
            nudged = SellerProfile(
                tuple(Dataset(row) for _ in range(m - 1)) + (Dataset(row + 0.0),)
            )
            prices = PriceVector(np.array([1.0, 1.5]))
            v_fast = seller_utility(cfg, prices, symmetric, 0)
            assert nudged.is_symmetric()  # same datasets, same path either way
            exact = 0.0
            counts = (cfg.buyers.values >= prices.prices).sum(axis=0)
            for g in range(2):
                if counts[g]:
                    division = shapley_division(symmetric, g, float(prices.prices[g]),
                                                float(prices.prices[g]), cfg.curve)
                    exact += counts[g] * division[0]
            exact -= float(cfg.costs.per_sample @ row)
            assert v_fast == pytest.approx(exact, rel=1e-9, abs=1e-12)

    def test_null_seller(self):
        cfg = market(np.array([[1.0]]), [1.0], sellers=2)
        profile = SellerProfile((Dataset([0.0]), Dataset([3.0])))
        assert seller_utility(cfg, PriceVector(np.array([1.0])), profile, 0) == pytest.approx(0.0)

    def test_solo_seller_loss(self):
        cfg = market(np.array([[1.0]]), [10.0], sellers=1)
        profile = SellerProfile((Dataset([1.0]),))
        v = seller_utility(cfg, PriceVector(np.array([1.0])), profile, 0)
        assert v == pytest.approx(-10.0)


class TestBuyerUtility:
    def test_values(self):
        curve = LearningCurve(1, 1, 2)
        cfg = market(np.array([[5.0]]), [1.0], sellers=1, curve=curve)
        agg = (1 / 0.5) ** 0.5  # accuracy 0.5
        profile = SellerProfile((Dataset([agg]),))
        u = buyer_utility(cfg, PriceVector(np.array([3.0])), profile, 0)
        assert u == pytest.approx((5 - 3) * 0.5, rel=1e-9)

    def test_below_reserve(self):
        cfg = market(np.array([[2.0]]), [1.0], sellers=1)
        profile = SellerProfile((Dataset([5.0]),))
        assert buyer_utility(cfg, PriceVector(np.array([3.0])), profile, 0) == 0.0

    def test_uncleared_group_contributes_nothing(self):
        cfg = market(np.array([[5.0, 2.0]]), [1.0, 1.0], sellers=1)
        curve = cfg.curve
        agg = np.array([2.0, 10.0])
        profile = SellerProfile((Dataset(agg),))
        u = buyer_utility(cfg, PriceVector(np.array([3.0, 3.0])), profile, 0)
        assert u == pytest.approx((5 - 3) * accuracy(curve, 2.0), rel=1e-12)


class TestJointScaling:
    @given(st.floats(0.1, 10.0))
    @settings(max_examples=40)
    def test_scale_invariance(self, lam):
        values = np.array([[1.0, 0.4], [2.0, 0.0], [0.7, 1.3]])
        kappa = [0.8, 1.1]
        cfg = market(values, kappa, sellers=2)
        scaled = market(values * lam, np.array(kappa) * lam, sellers=2)
        profile = SellerProfile.symmetric(np.array([1.5, 0.9]), 2)
        prices = PriceVector(np.array([0.9, 0.4]))
        scaled_prices = PriceVector(np.array([0.9, 0.4]) * lam)
        w = marketplace_utility(cfg, prices, profile)
        assert marketplace_utility(scaled, scaled_prices, profile) == pytest.approx(
            lam * w, rel=1e-9
        )
        v = seller_utility(cfg, prices, profile, 1)
        assert seller_utility(scaled, scaled_prices, profile, 1) == pytest.approx(
            lam * v, rel=1e-9, abs=1e-12
        )
        u = buyer_utilities(cfg, prices, profile)
        assert buyer_utilities(scaled, scaled_prices, profile) == pytest.approx(
            lam * u, rel=1e-9, abs=1e-12
        )
