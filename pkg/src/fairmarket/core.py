"""Domain types shared across the package, plus the learning curve and its constants.

Sample counts are continuous reals throughout: the equilibria are calculus
objects and no rounding is applied anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "REL_TOL",
    "LearningCurve",
    "GroupSet",
    "Dataset",
    "CostStructure",
    "BuyerPanel",
    "MarketConfig",
    "TargetVector",
    "accuracy",
    "accuracy_gradient",
    "learning_ante",
    "curve_constant",
]

#: Default relative tolerance for float comparisons across the package.
REL_TOL = 1e-9

#: Absolute slack allowed on the simplex constraint of a target vector.
TARGET_SUM_TOL = 1e-12


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be finite and positive, got {value!r}")
    return value


def _locked(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _vector(values, name: str, *, minimum: float | None = None, strict: bool = False) -> np.ndarray:
    arr = np.asarray(values, dtype=float).copy()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a one-dimensional vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite everywhere")
    if minimum is not None:
        bad = arr <= minimum if strict else arr < minimum
        if np.any(bad):
            op = ">" if strict else ">="
            raise ValueError(f"every entry of {name} must be {op} {minimum}")
    return _locked(arr)


@dataclass(frozen=True)
class LearningCurve:
    """Saturating power-law accuracy model ``max(ceiling - alpha * n**-beta, 0)``.

    ``ceiling`` is the best achievable accuracy, ``alpha`` sets how far below the
    ceiling a finite dataset sits, and ``beta`` is the decay exponent governing
    how quickly extra samples close the gap.
    """

    ceiling: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "ceiling", _positive("ceiling", self.ceiling))
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _positive("beta", self.beta))


def accuracy(curve: LearningCurve, n: float) -> float:
    """Accuracy after training on ``n`` samples, clamped to ``[0, ceiling]``.

    ``n = 0`` maps to zero accuracy by convention: the power law diverges there,
    and no data means no predictions to sell.
    """
    if n < 0:
        raise ValueError(f"sample count must be >= 0, got {n}")
    if n == 0:
        return 0.0
    try:
        shortfall = curve.alpha * n ** -curve.beta
    except OverflowError:
        return 0.0
    return max(curve.ceiling - shortfall, 0.0)


def accuracy_gradient(curve: LearningCurve, n: float) -> float:
    """Marginal accuracy per additional sample (right derivative at the kink).

    Zero on the clamped region below the learning ante.
    """
    if n <= 0 or n < learning_ante(curve):
        return 0.0
    try:
        return curve.alpha * curve.beta * n ** (-curve.beta - 1.0)
    except OverflowError:
        return math.inf


def learning_ante(curve: LearningCurve) -> float:
    """Sample count below which the curve yields zero accuracy: ``(alpha/ceiling)**(1/beta)``."""
    return (curve.alpha / curve.ceiling) ** (1.0 / curve.beta)


def curve_constant(curve: LearningCurve) -> float:
    """Curve-dependent factor turning potential economic value into a participation threshold.

    ``ceiling**((beta+1)/beta) / (alpha**(1/beta) * d**((beta+1)/beta))`` with
    ``d = beta**(-beta/(beta+1)) + beta**(1/(beta+1))``.
    """
    beta = curve.beta
    d = beta ** (-beta / (beta + 1.0)) + beta ** (1.0 / (beta + 1.0))
    return curve.ceiling ** ((beta + 1.0) / beta) / (
        curve.alpha ** (1.0 / beta) * d ** ((beta + 1.0) / beta)
    )


@dataclass(frozen=True)
class GroupSet:
    """Ordered, distinct demographic group labels; every market vector indexes into this."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValueError("a market needs at least one group")
        if len(set(labels)) != len(labels):
            raise ValueError(f"group labels must be distinct, got {labels!r}")
        object.__setattr__(self, "labels", labels)

    @property
    def count(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown group {label!r}; groups are {list(self.labels)}") from None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Per-group sample counts of one dataset."""

    samples: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", _vector(self.samples, "samples", minimum=0.0))

    def total(self) -> float:
        return float(self.samples.sum())


@dataclass(frozen=True, eq=False)
class CostStructure:
    """Strictly positive marginal production cost per sample of each group.

    Quasi-symmetric: one cost vector shared by every seller.
    """

    per_sample: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "per_sample", _vector(self.per_sample, "per_sample", minimum=0.0, strict=True)
        )


@dataclass(frozen=True, eq=False)
class BuyerPanel:
    """Buyers-by-groups matrix of nonnegative values-of-accuracy.

    Truthful bidding is dominant under the posted-price mechanism, so these
    values double as the bids.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).copy()
        if values.ndim != 2:
            raise ValueError("buyer values must be a 2-d (buyers x groups) matrix")
        if values.size and (not np.all(np.isfinite(values)) or np.any(values < 0)):
            raise ValueError("buyer values must be finite and >= 0")
        object.__setattr__(self, "values", _locked(values))

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def column(self, group_index: int) -> np.ndarray:
        return self.values[:, group_index]


@dataclass(frozen=True, eq=False)
class MarketConfig:
    """One complete quasi-symmetric market instance."""

    groups: GroupSet
    curve: LearningCurve
    sellers: int
    costs: CostStructure
    buyers: BuyerPanel

    def __post_init__(self) -> None:
        object.__setattr__(self, "sellers", int(self.sellers))
        if self.sellers < 1:
            raise ValueError(f"need at least one seller, got {self.sellers}")
        k = self.groups.count
        if self.costs.per_sample.shape != (k,):
            raise ValueError(
                f"cost vector has {self.costs.per_sample.shape[0]} entries for {k} groups"
            )
        if self.buyers.values.shape[1] != k:
            raise ValueError(
                f"buyer panel has {self.buyers.values.shape[1]} columns for {k} groups"
            )


@dataclass(frozen=True, eq=False)
class TargetVector:
    """Required demographic shares imposed by the balance intervention; sums to one."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = _vector(self.weights, "weights", minimum=0.0)
        if np.any(weights > 1.0):
            raise ValueError("target weights must lie in [0, 1]")
        total = float(weights.sum())
        if abs(total - 1.0) > TARGET_SUM_TOL:
            raise ValueError(f"target weights must sum to 1 (got {total!r})")
        object.__setattr__(self, "weights", weights)

    @staticmethod
    def uniform(count: int) -> "TargetVector":
        """The uniform target: equal share for each of ``count`` groups."""
        if count < 1:
            raise ValueError("need at least one group")
        return TargetVector(np.full(count, 1.0 / count))
