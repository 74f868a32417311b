"""Closed-form Nash equilibria of the quasi-symmetric market, both scenarios.

Groups decouple completely in the baseline scenario; the balance intervention
couples them through a single total-production decision per seller and a
monetized set resolved jointly with that total.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    CostStructure,
    Dataset,
    LearningCurve,
    MarketConfig,
    TargetVector,
    accuracy,
    curve_constant,
    learning_ante,
)
from .mechanism import (
    MAX_EXACT_SELLERS,
    CoalitionLimitError,
    PriceVector,
    SellerProfile,
    buyer_utilities,
    coalition_weight,
    marketplace_utility,
    seller_utility,
)

__all__ = [
    "FormationViolationError",
    "DemographicsUndefinedError",
    "PotentialValue",
    "ScenarioUtilities",
    "BaselineOutcome",
    "InterventionOutcome",
    "optimal_reserve",
    "market_potential",
    "baseline_threshold",
    "baseline_production",
    "solve_baseline",
    "baseline_demographics",
    "intervention_threshold",
    "consistent_monetized_sets",
    "intervention_production",
    "solve_intervention",
    "general_best_response",
]


class FormationViolationError(ValueError):
    """Production was requested for a group whose cost exceeds its participation threshold."""


class DemographicsUndefinedError(ValueError):
    """Aggregate demographics are undefined when no group forms."""


@dataclass(frozen=True, eq=False)
class PotentialValue:
    """Revenue-maximizing reserve outcome per group.

    ``value[g]`` is the chosen price times the number of buyers clearing it;
    ``price[g]`` is ``None`` when the group has no positive buyer value.
    """

    value: np.ndarray
    price: tuple[float | None, ...]

    def price_vector(self) -> PriceVector:
        return PriceVector.from_optional(self.price)


@dataclass(frozen=True, eq=False)
class ScenarioUtilities:
    """Utilities of every agent at one scenario's equilibrium."""

    marketplace: float
    sellers: np.ndarray
    buyers: np.ndarray


@dataclass(frozen=True, eq=False)
class BaselineOutcome:
    """Equilibrium of the unconstrained scenario."""

    potential: PotentialValue
    thresholds: np.ndarray
    produced: Dataset
    per_seller: Dataset
    formed_groups: tuple[str, ...]
    utilities: ScenarioUtilities


@dataclass(frozen=True, eq=False)
class InterventionOutcome:
    """Equilibrium of the balance-constrained scenario.

    ``monetized`` holds group indices of the resolved candidate set, kept even
    when the market does not form (it is the set whose threshold the blended
    cost was tested against); ``total_samples`` is the realized equilibrium
    production, zero when unformed. ``threshold`` is ``None`` only when no
    candidate set is consistent.
    """

    potential: PotentialValue
    target: TargetVector
    monetized: tuple[int, ...]
    total_samples: float
    per_seller_total: float
    threshold: float | None
    formed: bool
    utilities: ScenarioUtilities | None

    def produced(self) -> Dataset:
        """Aggregate dataset implied by the target and total production."""
        return Dataset(self.target.weights * self.total_samples)


def optimal_reserve(values: np.ndarray) -> tuple[float | None, float]:
    """Reserve price maximizing price times clearing count, with the attained value.

    Only distinct positive buyer values can maximize, so they are the candidate
    set; ties break toward the lowest price. An empty or all-zero column yields
    ``(None, 0.0)``.
    """
    vals = np.asarray(values, dtype=float).ravel()
    candidates = np.unique(vals[vals > 0])
    if candidates.size == 0:
        return None, 0.0
    order = np.sort(vals)
    counts = vals.size - np.searchsorted(order, candidates, side="left")
    attained = candidates * counts
    best = int(np.argmax(attained))  # first maximum = lowest price
    return float(candidates[best]), float(attained[best])


def market_potential(buyers) -> PotentialValue:
    """Per-group optimal reserves and potential economic values for a buyer panel."""
    prices: list[float | None] = []
    values: list[float] = []
    for g in range(buyers.values.shape[1]):
        price, value = optimal_reserve(buyers.column(g))
        prices.append(price)
        values.append(value)
    return PotentialValue(np.array(values), tuple(prices))


def baseline_threshold(rho_g: float, curve: LearningCurve) -> float:
    """Largest marginal cost at which sellers still enter a group's sub-market."""
    if rho_g < 0:
        raise ValueError("potential economic value must be >= 0")
    return rho_g * curve_constant(curve)


def baseline_production(
    rho_g: float, kappa_g: float, curve: LearningCurve, sellers: int
) -> tuple[float, float]:
    """Per-seller and aggregate equilibrium samples for one formed group.

    The aggregate is ``(rho * alpha * beta / kappa) ** (1/(beta+1))`` and the
    sellers split it evenly. Calling this for a group whose cost exceeds the
    participation threshold is a formation violation.
    """
    if kappa_g > baseline_threshold(rho_g, curve):
        raise FormationViolationError(
            f"cost {kappa_g} exceeds the participation threshold for rho={rho_g}"
        )
    aggregate = (rho_g * curve.alpha * curve.beta / kappa_g) ** (1.0 / (curve.beta + 1.0))
    return aggregate / sellers, aggregate


def _symmetric_utilities(
    config: MarketConfig, potential: PotentialValue, aggregate: np.ndarray
) -> ScenarioUtilities:
    """Assemble all utilities for a symmetric profile holding ``aggregate / M`` each."""
    profile = SellerProfile.symmetric(aggregate / config.sellers, config.sellers)
    prices = potential.price_vector()
    w = marketplace_utility(config, prices, profile)
    v = seller_utility(config, prices, profile, 0)
    return ScenarioUtilities(
        marketplace=w,
        sellers=np.full(config.sellers, v),
        buyers=buyer_utilities(config, prices, profile),
    )


def solve_baseline(config: MarketConfig) -> BaselineOutcome:
    """Equilibrium of the unconstrained scenario, group by group.

    Groups decouple: the marketplace prices each to maximize its potential
    value, and the sellers produce iff the group's cost is at most its
    threshold. Non-formation is an outcome, not an error.
    """
    potential = market_potential(config.buyers)
    c = curve_constant(config.curve)
    thresholds = potential.value * c
    kappa = config.costs.per_sample
    produced = np.zeros(config.groups.count)
    formed: list[str] = []
    for g in range(config.groups.count):
        if kappa[g] <= thresholds[g]:
            _, produced[g] = baseline_production(
                potential.value[g], kappa[g], config.curve, config.sellers
            )
            formed.append(config.groups.labels[g])
    return BaselineOutcome(
        potential=potential,
        thresholds=thresholds,
        produced=Dataset(produced),
        per_seller=Dataset(produced / config.sellers),
        formed_groups=tuple(formed),
        utilities=_symmetric_utilities(config, potential, produced),
    )


def baseline_demographics(outcome: BaselineOutcome) -> np.ndarray:
    """Share of the aggregate dataset per group; zero for unformed groups.

    Identical to ``(rho/kappa)**(1/(beta+1))`` normalized over formed groups,
    since the common ``(alpha*beta)**(1/(beta+1))`` factor cancels.
    """
    total = outcome.produced.total()
    if total <= 0:
        raise DemographicsUndefinedError("no group forms at baseline")
    return outcome.produced.samples / total


def intervention_threshold(
    rho: np.ndarray, weights: np.ndarray, members: np.ndarray, curve: LearningCurve
) -> float:
    """Participation threshold of a given monetized set under a target.

    ``members`` must index groups with positive target weight.
    """
    beta = curve.beta
    rho_sum = float(rho[members].sum())
    demand = float((rho[members] * weights[members] ** -beta).sum())
    if demand <= 0:
        return 0.0
    return rho_sum ** ((beta + 1.0) / beta) / demand ** (1.0 / beta) * curve_constant(curve)


def _tie_blocks(weights: np.ndarray) -> list[np.ndarray]:
    """Indices of positive-weight groups in descending-weight blocks, ties together."""
    order = np.argsort(-weights, kind="stable")
    blocks: list[np.ndarray] = []
    current: list[int] = []
    last = None
    for idx in order:
        w = weights[idx]
        if w <= 0:
            break
        if last is not None and w < last:
            blocks.append(np.array(current, dtype=int))
            current = []
        current.append(int(idx))
        last = w
    if current:
        blocks.append(np.array(current, dtype=int))
    return blocks


def consistent_monetized_sets(
    potential: PotentialValue,
    target: TargetVector,
    costs: CostStructure,
    curve: LearningCurve,
) -> list[tuple[tuple[int, ...], float]]:
    """All self-consistent monetized-set candidates with their induced totals.

    Candidates are prefixes of the groups sorted by descending target weight
    (tied weights stay together); a prefix is consistent when exactly its
    members clear the learning ante at the total production it induces.
    Returned in increasing prefix size; generically there is at most one.
    """
    weights = target.weights
    blended = float(costs.per_sample @ weights)
    if blended <= 0:
        raise ValueError("blended marginal cost must be positive")
    rho = potential.value
    beta = curve.beta
    ante = learning_ante(curve)
    ab = curve.alpha * curve.beta

    blocks = _tie_blocks(weights)
    out: list[tuple[tuple[int, ...], float]] = []
    prefix: list[int] = []
    demand = 0.0
    for b, block in enumerate(blocks):
        prefix.extend(block)
        demand += float((rho[block] * weights[block] ** -beta).sum())
        if demand <= 0:
            continue
        total = (ab / blended * demand) ** (1.0 / (beta + 1.0))
        inside = min(weights[i] for i in prefix) * total > ante
        next_weight = weights[blocks[b + 1][0]] if b + 1 < len(blocks) else 0.0
        outside = next_weight * total <= ante
        if inside and outside:
            out.append((tuple(prefix), total))
    return out


def intervention_production(
    potential: PotentialValue,
    target: TargetVector,
    costs: CostStructure,
    curve: LearningCurve,
    sellers: int,
) -> InterventionOutcome:
    """Joint fixed point of the monetized set and total production under a target.

    Of the self-consistent candidates (see :func:`consistent_monetized_sets`)
    the largest is kept. The market forms when the blended per-sample cost is
    at most that set's participation threshold.

    Groups with zero target weight can never be monetized, whatever their
    potential value; they simply never enter a candidate prefix. Utilities are
    left unset here and attached by :func:`solve_intervention`.
    """
    weights = target.weights
    kappa = costs.per_sample
    blended = float(kappa @ weights)
    rho = potential.value
    candidates = consistent_monetized_sets(potential, target, costs, curve)
    resolved = candidates[-1] if candidates else None

    if resolved is None:
        return InterventionOutcome(
            potential=potential,
            target=target,
            monetized=(),
            total_samples=0.0,
            per_seller_total=0.0,
            threshold=None,
            formed=False,
            utilities=None,
        )

    members, total = resolved
    tau = intervention_threshold(rho, weights, np.array(members, dtype=int), curve)
    formed = blended <= tau
    realized = total if formed else 0.0
    return InterventionOutcome(
        potential=potential,
        target=target,
        monetized=members,
        total_samples=realized,
        per_seller_total=realized / sellers,
        threshold=tau,
        formed=formed,
        utilities=None,
    )


def solve_intervention(config: MarketConfig, target: TargetVector) -> InterventionOutcome:
    """Equilibrium of the balance-constrained scenario.

    The marketplace prices by the same maximize-potential rule as the baseline;
    every cleared buyer is allocated ``weight * total`` samples per group.
    """
    if target.weights.shape[0] != config.groups.count:
        raise ValueError("target vector length does not match the group set")
    potential = market_potential(config.buyers)
    outcome = intervention_production(
        potential, target, config.costs, config.curve, config.sellers
    )
    aggregate = target.weights * outcome.total_samples
    utilities = _symmetric_utilities(config, potential, aggregate)
    return replace(outcome, utilities=utilities)


def general_best_response(
    rival_production: np.ndarray,
    price: float,
    buyer_curves: tuple[LearningCurve, ...],
    kappa_g: float,
    *,
    tol: float = 1e-12,
) -> float:
    """One seller's best response for one group against fixed rival production.

    This works outside the quasi-symmetric setting: each cleared buyer may carry
    its own learning curve, which makes the stationarity condition

        price * sum_i sum_T w_T * alpha_i * beta_i * (x_T + x)**(-beta_i - 1) = kappa_g

    a polynomial equation of unbounded degree with no radical solution in
    general. The left side is strictly decreasing in ``x``, so the root is found
    by doubling an upper bracket and bisecting to absolute ``tol``. Returns zero
    when the marginal payoff at zero production is already below ``kappa_g``, or
    when entry is unprofitable (the stationary point sits in the clamped region
    and yields negative payoff).
    """
    if price <= 0:
        raise ValueError("price must be positive")
    if kappa_g <= 0:
        raise ValueError("kappa must be positive")
    if not buyer_curves:
        return 0.0
    rivals = np.asarray(rival_production, dtype=float).ravel()
    if np.any(rivals < 0):
        raise ValueError("rival production must be nonnegative")
    m = rivals.size + 1
    if m > MAX_EXACT_SELLERS:
        raise CoalitionLimitError(f"coalition enumeration refused for M={m}")

    coalitions: list[tuple[float, float]] = []
    for size in range(rivals.size + 1):
        weight = coalition_weight(size, m)
        for combo in itertools.combinations(rivals, size):
            coalitions.append((weight, float(sum(combo))))

    def marginal(x: float) -> float:
        total = 0.0
        for weight, base in coalitions:
            for c in buyer_curves:
                try:
                    total += weight * c.alpha * c.beta * (base + x) ** (-c.beta - 1.0)
                except OverflowError:
                    return math.inf
        return price * total - kappa_g

    def payoff(x: float) -> float:
        total = 0.0
        for weight, base in coalitions:
            for c in buyer_curves:
                total += weight * (accuracy(c, base + x) - accuracy(c, base))
        return price * total - kappa_g * x

    # Marginal payoff at 0+: infinite when the empty coalition contributes,
    # finite otherwise; below kappa means no production.
    if all(base > 0 for _, base in coalitions):
        at_zero = marginal(0.0)
        if at_zero <= 0:
            return 0.0

    ante_floor = min(learning_ante(c) for c in buyer_curves)
    lo = ante_floor * 1e-6
    while marginal(lo) <= 0 and lo > 1e-250:
        lo *= 1e-3
    if marginal(lo) <= 0:
        return 0.0
    hi = max(2 * lo, 1.0)
    for _ in range(300):
        if marginal(hi) < 0:
            break
        hi *= 2.0
    else:
        raise ValueError("failed to bracket the stationarity condition")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if marginal(mid) > 0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    return root if payoff(root) >= 0 else 0.0
