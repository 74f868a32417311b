"""Equilibrium engine for fairness interventions in a stylized online data market.

The library computes closed-form Nash equilibria of a quasi-symmetric data
market in two scenarios (with and without a demographic-balance constraint on
data production), detects when the constraint prevents the market from forming
at all, and analyzes how buyer-population growth amortizes the cost of the
constraint. Every closed form is backed by an independent brute-force oracle.
"""

from .core import (
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
from .equilibrium import (
    BaselineOutcome,
    InterventionOutcome,
    PotentialValue,
    ScenarioUtilities,
    baseline_demographics,
    baseline_production,
    baseline_threshold,
    general_best_response,
    intervention_production,
    optimal_reserve,
    solve_baseline,
    solve_intervention,
)
from .fairness import (
    FormationReport,
    SufficientConditionReport,
    check_backfire,
    check_sufficient_condition,
    check_uniform_safety,
    construct_backfire_market,
    construct_verge_market,
    max_threshold,
    optimal_target,
)
from .growth import (
    AmortizationVerdict,
    BuyerSequence,
    CycleArrivals,
    MarketStub,
    RateArrivals,
    RatioTrace,
    amortization_report,
    check_mitigation,
    sweep,
    unbounded_production_check,
)
from .mechanism import (
    PriceVector,
    SellerProfile,
    allocate,
    buyer_utility,
    marketplace_utility,
    revenue,
    seller_utility,
    shapley_division,
)
from .oracle import (
    DeviationGrid,
    best_response_dynamics,
    find_root_bisect,
    price_grid_search,
    quintic_certificate,
    verify_equilibrium,
)
from .report import ComparisonReport, compare_scenarios

__version__ = "0.1.0"
