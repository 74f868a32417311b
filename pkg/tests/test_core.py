import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairmarket.core import (
    BuyerPanel,
    CostStructure,
    Dataset,
    GroupSet,
    LearningCurve,
    MarketConfig,
    TargetVector,
    accuracy,
    accuracy_gradient,
    curve_constant,
    learning_ante,
)

UNIT = LearningCurve(1, 1, 1)

curves = st.builds(
    LearningCurve,
    ceiling=st.floats(0.1, 10.0),
    alpha=st.floats(0.05, 5.0),
    beta=st.floats(0.1, 5.0),
)


class TestAccuracy:
    def test_spec_values(self):
        assert accuracy(UNIT, 2) == pytest.approx(0.5)
        assert accuracy(UNIT, 0.5) == 0.0
        assert accuracy(LearningCurve(5, 1 / 3, 3), 1) == pytest.approx(5 - 1 / 3)

    def test_zero_samples_zero_accuracy(self):
        assert accuracy(UNIT, 0) == 0.0
        assert accuracy(LearningCurve(3, 0.1, 2), 0) == 0.0

    def test_negative_samples_rejected(self):
        with pytest.raises(ValueError):
            accuracy(UNIT, -1)

    @given(curves, st.floats(0, 1e6), st.floats(0, 1e6))
    @settings(max_examples=200)
    def test_monotone_and_bounded(self, curve, a, b):
        lo, hi = sorted((a, b))
        assert 0.0 <= accuracy(curve, lo) <= accuracy(curve, hi) <= curve.ceiling

    @given(curves, st.floats(1e-9, 1.0 - 1e-9))
    @settings(max_examples=200)
    def test_zero_below_the_ante(self, curve, fraction):
        n = learning_ante(curve) * fraction
        assert accuracy(curve, n) == 0.0

    @given(curves, st.floats(1.001, 1e6))
    @settings(max_examples=200)
    def test_positive_above_the_ante(self, curve, factor):
        assert accuracy(curve, learning_ante(curve) * factor) > 0.0


class TestLearningAnte:
    def test_spec_values(self):
        assert learning_ante(UNIT) == pytest.approx(1.0)
        assert learning_ante(LearningCurve(2, 1, 1)) == pytest.approx(0.5)
        # independent arithmetic: (0.05) ** 0.25
        expected = math.exp(math.log(1 / 4 / 5) / 4)
        assert learning_ante(LearningCurve(5, 0.25, 4)) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.4729, abs=5e-5)


class TestCurveConstant:
    def test_unit(self):
        assert curve_constant(UNIT) == pytest.approx(0.25)

    def test_doubled_ceiling(self):
        assert curve_constant(LearningCurve(2, 1, 1)) == pytest.approx(1.0)

    def test_hand_evaluated(self):
        # ceiling=1, alpha=2, beta=2: 1 / (sqrt(2) * (2**(-2/3) + 2**(1/3))**(3/2))
        d = 2 ** (-2 / 3) + 2 ** (1 / 3)
        expected = 1.0 / (math.sqrt(2) * d ** 1.5)
        assert curve_constant(LearningCurve(1, 2, 2)) == pytest.approx(expected, rel=1e-12)

    def test_decay_expression_exceeds_one(self):
        # beta * (beta**(-beta/(beta+1)) + beta**(1/(beta+1)))**((beta+1)/beta) > 1
        betas = np.geomspace(1e-3, 1e3, 50)
        expr = betas * (
            betas ** (-betas / (betas + 1)) + betas ** (1 / (betas + 1))
        ) ** ((betas + 1) / betas)
        assert np.all(expr > 1.0)


class TestGradient:
    def test_zero_below_ante(self):
        assert accuracy_gradient(UNIT, 0.5) == 0.0
        assert accuracy_gradient(UNIT, 0) == 0.0

    def test_matches_finite_differences(self):
        curve = LearningCurve(2, 0.5, 1.5)
        n = 3.0
        h = 1e-6
        numeric = (accuracy(curve, n + h) - accuracy(curve, n - h)) / (2 * h)
        assert accuracy_gradient(curve, n) == pytest.approx(numeric, rel=1e-6)


class TestValidation:
    @pytest.mark.parametrize("bad", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (-1, 1, 1), (1, 1, math.inf)])
    def test_curve_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            LearningCurve(*bad)

    def test_groups_distinct_nonempty(self):
        with pytest.raises(ValueError):
            GroupSet(())
        with pytest.raises(ValueError):
            GroupSet(("a", "a"))
        gs = GroupSet(("a", "b"))
        assert gs.count == 2 and gs.index("b") == 1
        with pytest.raises(KeyError):
            gs.index("missing")

    def test_dataset_nonnegative(self):
        with pytest.raises(ValueError):
            Dataset([-1.0, 2.0])
        d = Dataset([1.0, 2.5])
        assert d.total() == pytest.approx(3.5)
        with pytest.raises(ValueError):
            d.samples[0] = 9.0  # locked after construction

    def test_costs_strictly_positive(self):
        with pytest.raises(ValueError):
            CostStructure([1.0, 0.0])

    def test_buyer_panel_shape(self):
        with pytest.raises(ValueError):
            BuyerPanel([1.0, 2.0])
        with pytest.raises(ValueError):
            BuyerPanel([[-1.0]])
        assert BuyerPanel(np.zeros((0, 3))).size == 0

    def test_market_dimension_checks(self):
        gs = GroupSet(("a", "b"))
        with pytest.raises(ValueError):
            MarketConfig(gs, UNIT, 2, CostStructure([1.0]), BuyerPanel(np.zeros((0, 2))))
        with pytest.raises(ValueError):
            MarketConfig(gs, UNIT, 0, CostStructure([1.0, 1.0]), BuyerPanel(np.zeros((0, 2))))
        with pytest.raises(ValueError):
            MarketConfig(gs, UNIT, 2, CostStructure([1.0, 1.0]), BuyerPanel(np.zeros((0, 3))))

    def test_target_simplex(self):
        with pytest.raises(ValueError):
            TargetVector([0.6, 0.5])
        with pytest.raises(ValueError):
            TargetVector([1.2, -0.2])
        uniform = TargetVector.uniform(3)
        assert uniform.weights == pytest.approx(np.full(3, 1 / 3))
