"""Marketplace mechanics: allocation, posted-price revenue, revenue division, utilities.

Everything here is a pure function of immutable inputs; payments are computed
per (buyer, group) pair and summed, with no netting or escrow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import BuyerPanel, Dataset, LearningCurve, MarketConfig, accuracy

__all__ = [
    "MAX_EXACT_SELLERS",
    "CoalitionLimitError",
    "SellerProfile",
    "PriceVector",
    "allocate",
    "revenue",
    "coalition_weight",
    "shapley_division",
    "clearing_counts",
    "potential_values",
    "marketplace_utility",
    "seller_utility",
    "buyer_utility",
    "buyer_utilities",
]

#: Largest seller count for which exact coalition enumeration is offered.
MAX_EXACT_SELLERS = 20


class CoalitionLimitError(ValueError):
    """Exact revenue division was requested for more sellers than is enumerable.

    Callers seeing this should fall back to the symmetric even split, which is
    exact whenever the sellers' datasets coincide.
    """


@dataclass(frozen=True, eq=False)
class SellerProfile:
    """The sellers' joint strategy: one dataset per seller."""

    datasets: tuple[Dataset, ...]

    def __post_init__(self) -> None:
        datasets = tuple(self.datasets)
        if not datasets:
            raise ValueError("a profile needs at least one seller")
        width = datasets[0].samples.shape[0]
        if any(d.samples.shape[0] != width for d in datasets):
            raise ValueError("sellers disagree on the number of groups")
        object.__setattr__(self, "datasets", datasets)

    @property
    def size(self) -> int:
        return len(self.datasets)

    def matrix(self) -> np.ndarray:
        """Sellers-by-groups sample matrix."""
        return np.stack([d.samples for d in self.datasets])

    def aggregate(self) -> np.ndarray:
        """Coordinate-wise sum of all sellers' datasets."""
        return self.matrix().sum(axis=0)

    def is_symmetric(self) -> bool:
        first = self.datasets[0].samples
        return all(np.array_equal(d.samples, first) for d in self.datasets[1:])

    @staticmethod
    def symmetric(per_seller: np.ndarray, sellers: int) -> "SellerProfile":
        """Profile in which every seller holds the same dataset."""
        shared = Dataset(per_seller)
        return SellerProfile(tuple(shared for _ in range(sellers)))


@dataclass(frozen=True, eq=False)
class PriceVector:
    """Per-group reserve prices; ``inf`` marks a group the marketplace leaves unpriced."""

    prices: np.ndarray

    def __post_init__(self) -> None:
        prices = np.asarray(self.prices, dtype=float).copy()
        if prices.ndim != 1:
            raise ValueError("prices must be a one-dimensional vector")
        if np.any(np.isnan(prices)) or np.any(prices <= 0):
            raise ValueError("reserve prices must be positive (inf = unpriced)")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    @staticmethod
    def from_optional(prices: tuple[float | None, ...]) -> "PriceVector":
        return PriceVector(np.array([math.inf if p is None else p for p in prices]))


def allocate(bid: float, reserve: float, aggregate_g: float) -> float:
    """All-or-nothing allocation: the full aggregate iff the bid clears the reserve."""
    if reserve <= 0:
        raise ValueError("reserve price must be positive")
    if bid < 0 or aggregate_g < 0:
        raise ValueError("bid and aggregate must be nonnegative")
    return aggregate_g if bid >= reserve else 0.0


def revenue(reserve: float, curve: LearningCurve, allocated_g: float) -> float:
    """Price charged for predictions: reserve price times accuracy of the allocation."""
    if reserve <= 0:
        raise ValueError("reserve price must be positive")
    return reserve * accuracy(curve, allocated_g)


def coalition_weight(size: int, sellers: int) -> float:
    """Weight of a coalition of ``size`` other sellers: ``size! (M-size-1)! / M!``."""
    return math.factorial(size) * math.factorial(sellers - size - 1) / math.factorial(sellers)


def shapley_division(
    sellers: SellerProfile, group: int, reserve: float, bid: float, curve: LearningCurve
) -> np.ndarray:
    """Split one buyer's payment for one group across sellers by average marginal accuracy.

    Enumerates the ``2**(M-1)`` coalitions of the other sellers exactly, so the
    seller count is capped at :data:`MAX_EXACT_SELLERS`. A buyer below the
    reserve pays nothing and the division is identically zero.
    """
    m = sellers.size
    if m > MAX_EXACT_SELLERS:
        raise CoalitionLimitError(
            f"exact division enumerates 2**(M-1) coalitions; M={m} exceeds {MAX_EXACT_SELLERS}"
        )
    if bid < reserve:
        return np.zeros(m)
    holdings = sellers.matrix()[:, group]
    payments = np.empty(m)
    for j in range(m):
        others = [holdings[k] for k in range(m) if k != j]
        own = holdings[j]
        share = 0.0
        for size in range(len(others) + 1):
            weight = coalition_weight(size, m)
            for combo in itertools.combinations(others, size):
                base = float(sum(combo))
                share += weight * (accuracy(curve, base + own) - accuracy(curve, base))
        payments[j] = reserve * share
    return payments


def clearing_counts(buyers: BuyerPanel, prices: np.ndarray) -> np.ndarray:
    """Number of buyers whose value meets the reserve, per group."""
    if buyers.size == 0:
        return np.zeros(prices.shape[0], dtype=int)
    return (buyers.values >= prices).sum(axis=0)


def potential_values(buyers: BuyerPanel, prices: np.ndarray) -> np.ndarray:
    """Reserve price times clearing count per group (zero where nobody clears)."""
    counts = clearing_counts(buyers, prices)
    out = np.zeros(prices.shape[0])
    cleared = counts > 0  # an unpriced group (inf) never clears anyone
    out[cleared] = prices[cleared] * counts[cleared]
    return out


def marketplace_utility(config: MarketConfig, prices: PriceVector, sellers: SellerProfile) -> float:
    """Total revenue collected from all buyers over all groups under truthful bids."""
    aggregate = sellers.aggregate()
    rho = potential_values(config.buyers, prices.prices)
    total = 0.0
    for g in range(config.groups.count):
        if rho[g] > 0:
            total += rho[g] * accuracy(config.curve, aggregate[g])
    return total


def seller_utility(config: MarketConfig, prices: PriceVector, sellers: SellerProfile, j: int) -> float:
    """Revenue-division receipts of seller ``j`` minus its production cost.

    Identical datasets make the even split exact (symmetry plus efficiency), so
    symmetric profiles skip the coalition enumeration and scale to any seller
    count; asymmetric profiles use the exact division.
    """
    if not 0 <= j < sellers.size:
        raise IndexError(f"seller index {j} out of range for {sellers.size} sellers")
    aggregate = sellers.aggregate()
    counts = clearing_counts(config.buyers, prices.prices)
    cost = float(config.costs.per_sample @ sellers.datasets[j].samples)
    receipts = 0.0
    if sellers.is_symmetric():
        for g in range(config.groups.count):
            if counts[g] > 0:
                receipts += (
                    prices.prices[g]
                    * counts[g]
                    * accuracy(config.curve, aggregate[g])
                    / sellers.size
                )
    else:
        for g in range(config.groups.count):
            if counts[g] > 0:
                price = float(prices.prices[g])
                division = shapley_division(sellers, g, price, price, config.curve)
                receipts += counts[g] * division[j]
    return receipts - cost


def buyer_utilities(config: MarketConfig, prices: PriceVector, sellers: SellerProfile) -> np.ndarray:
    """Surplus of every buyer: (value - price) times delivered accuracy over cleared groups."""
    aggregate = sellers.aggregate()
    acc = np.array([accuracy(config.curve, a) for a in aggregate])
    values = config.buyers.values
    if values.shape[0] == 0:
        return np.zeros(0)
    clears = values >= prices.prices
    surplus = np.where(clears, values - prices.prices, 0.0)
    return surplus @ acc


def buyer_utility(config: MarketConfig, prices: PriceVector, sellers: SellerProfile, i: int) -> float:
    """Surplus of buyer ``i`` under truthful bidding."""
    if not 0 <= i < config.buyers.size:
        raise IndexError(f"buyer index {i} out of range for {config.buyers.size} buyers")
    return float(buyer_utilities(config, prices, sellers)[i])
