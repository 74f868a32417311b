"""Formation predicates, backfire detection and the adversarial market constructions.

Backfire means the market forms without the intervention but not with it; the
constructions here reproduce the regimes in which that is guaranteed to happen
(arbitrarily expensive group), guaranteed not to (uniform target in a
fully-forming market), and knife-edge (verge markets where only the uniform
target survives).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import (
    BuyerPanel,
    CostStructure,
    GroupSet,
    LearningCurve,
    MarketConfig,
    TargetVector,
    curve_constant,
)
from .equilibrium import (
    PotentialValue,
    intervention_threshold,
    market_potential,
    solve_baseline,
    solve_intervention,
)

__all__ = [
    "MAX_SUBSET_GROUPS",
    "DegenerateTargetError",
    "FormationReport",
    "SufficientConditionReport",
    "check_backfire",
    "construct_backfire_market",
    "check_uniform_safety",
    "construct_verge_market",
    "optimal_target",
    "max_threshold",
    "peak_threshold",
    "check_sufficient_condition",
]

#: Largest group count for which the exhaustive subset maximization is offered.
MAX_SUBSET_GROUPS = 12


class DegenerateTargetError(ValueError):
    """The backfire construction needs a second group with positive target weight."""


@dataclass(frozen=True, eq=False)
class FormationReport:
    """Formation flags of one market under one intervention."""

    baseline_formed_groups: tuple[str, ...]
    baseline_fully_formed: bool
    intervention_formed: bool
    backfired: bool


@dataclass(frozen=True, eq=False)
class SufficientConditionReport:
    """Ingredients of the cost-headroom condition guaranteeing intervention formation.

    ``eta`` is the smallest cost-to-threshold ratio bound holding for every
    group, ``a`` and ``b`` are the reciprocals of the smallest and largest
    target weights, and ``r`` is the largest ratio between two groups' potential
    economic values. The guarantee applies only to fully-forming markets; when
    ``applicable`` is false the remaining fields are ``None``.
    """

    applicable: bool
    eta: float | None
    a: float | None
    b: float | None
    r: float | None
    bound: float | None
    satisfied: bool


def check_backfire(config: MarketConfig, target: TargetVector) -> FormationReport:
    """Solve both scenarios and report whether the intervention kills formation."""
    base = solve_baseline(config)
    inter = solve_intervention(config, target)
    formed = tuple(base.formed_groups)
    return FormationReport(
        baseline_formed_groups=formed,
        baseline_fully_formed=len(formed) == config.groups.count,
        intervention_formed=inter.formed,
        backfired=bool(formed) and not inter.formed,
    )


def peak_threshold(potential: PotentialValue, target: TargetVector, curve: LearningCurve) -> float:
    """Largest intervention participation threshold over all monetized-set candidates.

    Enumerates every nonempty subset of the positive-weight groups exhaustively,
    which is exact but capped at :data:`MAX_SUBSET_GROUPS` groups.
    """
    weights = target.weights
    candidates = [g for g in range(weights.size) if weights[g] > 0]
    if len(candidates) > MAX_SUBSET_GROUPS:
        raise ValueError(
            f"subset maximization enumerates 2**|G| sets; |G|={len(candidates)} exceeds "
            f"{MAX_SUBSET_GROUPS}"
        )
    peak = 0.0
    for size in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            members = np.array(combo, dtype=int)
            peak = max(peak, intervention_threshold(potential.value, weights, members, curve))
    return peak


def construct_backfire_market(
    target: TargetVector,
    base_buyers: BuyerPanel,
    curve: LearningCurve,
    sellers: int,
    *,
    margin: float = 0.01,
    groups: GroupSet | None = None,
) -> MarketConfig:
    """Emit a market in which the given intervention is guaranteed to backfire.

    One group keeps an affordable cost so the unconstrained market forms there;
    a second group with positive target weight is priced just past the point
    where the blended cost exceeds the participation threshold of *every*
    possible monetized set, so no intervention equilibrium can produce. The
    ``margin`` keeps the defining inequality strict.
    """
    if margin <= 0:
        raise ValueError("margin must be positive (the construction needs strictness)")
    k = target.weights.size
    if k < 2:
        raise DegenerateTargetError("the construction needs at least two groups")
    if groups is None:
        groups = GroupSet(tuple(f"g{i + 1}" for i in range(k)))
    if base_buyers.values.shape[1] != k:
        raise ValueError("buyer panel width does not match the target vector")
    potential = market_potential(base_buyers)
    rho = potential.value
    if not np.any(rho > 0):
        raise ValueError("base buyers must give some group positive potential value")
    anchor = int(np.argmax(rho))
    masked = target.weights.copy()
    masked[anchor] = -1.0  # exclude the anchor from the expensive-group choice
    expensive = int(np.argmax(masked))
    if target.weights[expensive] <= 0:
        raise DegenerateTargetError(
            "need a second group with positive target weight to price out"
        )
    ceiling_tau = peak_threshold(potential, target, curve)
    c = curve_constant(curve)
    kappa = np.empty(k)
    for g in range(k):
        tau_g = rho[g] * c
        kappa[g] = min(1.0, tau_g) if tau_g > 0 else 1.0
    if ceiling_tau > 0:
        kappa[expensive] = (1.0 + margin) * ceiling_tau / target.weights[expensive]
    # else: no monetized set has a positive threshold, so any positive cost
    # already blocks the intervention and the affordable default stands.
    return MarketConfig(
        groups=groups,
        curve=curve,
        sellers=sellers,
        costs=CostStructure(kappa),
        buyers=base_buyers,
    )


def check_uniform_safety(config: MarketConfig) -> bool:
    """True iff full baseline formation implies formation under the uniform target."""
    base = solve_baseline(config)
    if len(base.formed_groups) < config.groups.count:
        return True  # vacuous: the premise does not hold
    uniform = TargetVector.uniform(config.groups.count)
    return solve_intervention(config, uniform).formed


def construct_verge_market(
    curve: LearningCurve, sellers: int, groups: GroupSet, c_mu: float
) -> MarketConfig:
    """Market sitting exactly on the formation boundary with uniform demographics.

    A single buyer values every group at ``c_mu`` and every group's cost equals
    ``c_mu`` times the curve constant, so each group's cost sits exactly at its
    participation threshold. The uniform target forms (the boundary is
    inclusive); any full-support deviation from it strictly lowers the
    intervention threshold below the unchanged blended cost and kills formation.
    """
    if c_mu <= 0:
        raise ValueError("c_mu must be positive")
    k = groups.count
    buyers = BuyerPanel(np.full((1, k), float(c_mu)))
    kappa = np.full(k, c_mu * curve_constant(curve))
    return MarketConfig(
        groups=groups,
        curve=curve,
        sellers=sellers,
        costs=CostStructure(kappa),
        buyers=buyers,
    )


def optimal_target(potential: PotentialValue, monetized: np.ndarray, beta: float) -> TargetVector:
    """Target maximizing the sellers' intervention threshold at fixed reserve prices.

    On the monetized set the weights are proportional to the potential values
    raised to ``1/(beta+1)``; off it they are zero. Every monetized group must
    have positive potential value.
    """
    members = np.asarray(monetized, dtype=int)
    if members.size == 0:
        raise ValueError("the monetized set must be nonempty")
    rho = potential.value
    if np.any(rho[members] <= 0):
        raise ValueError("every monetized group needs positive potential value")
    weights = np.zeros(rho.size)
    shares = rho[members] ** (1.0 / (beta + 1.0))
    weights[members] = shares / shares.sum()
    return TargetVector(weights)


def max_threshold(potential: PotentialValue, monetized: np.ndarray, curve: LearningCurve) -> float:
    """Intervention threshold attained at the optimal target for a fixed monetized set.

    ``(sum rho / sum rho**(1/(beta+1))) ** ((beta+1)/beta)`` times the curve
    constant; by construction equal to the threshold evaluated at
    :func:`optimal_target`.
    """
    members = np.asarray(monetized, dtype=int)
    if members.size == 0:
        raise ValueError("the monetized set must be nonempty")
    rho = potential.value[members]
    if np.any(rho <= 0):
        raise ValueError("every monetized group needs positive potential value")
    beta = curve.beta
    ratio = rho.sum() / (rho ** (1.0 / (beta + 1.0))).sum()
    return ratio ** ((beta + 1.0) / beta) * curve_constant(curve)


def check_sufficient_condition(
    config: MarketConfig, target: TargetVector
) -> SufficientConditionReport:
    """Evaluate the cost-headroom guarantee for intervention formation.

    Applicable only when the baseline fully forms (which also makes every
    potential value positive, so the demand-spread ratio ``r`` is defined).
    ``satisfied`` implies the intervention forms; the converse need not hold.
    """
    base = solve_baseline(config)
    if len(base.formed_groups) < config.groups.count:
        return SufficientConditionReport(
            applicable=False, eta=None, a=None, b=None, r=None, bound=None, satisfied=False
        )
    rho = base.potential.value
    kappa = config.costs.per_sample
    eta = float(np.max(kappa / base.thresholds))
    weights = target.weights
    w_min = float(weights.min())
    a = np.inf if w_min == 0 else 1.0 / w_min
    b = 1.0 / float(weights.max())
    r = float(rho.max() / rho.min())
    beta = config.curve.beta
    bound = (b / a) ** (beta + 1.0) / (r * config.groups.count)
    return SufficientConditionReport(
        applicable=True,
        eta=eta,
        a=float(a),
        b=b,
        r=r,
        bound=float(bound),
        satisfied=bool(eta < bound),
    )
