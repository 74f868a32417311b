"""Buyer-population growth sweeps and cost-of-fairness amortization analysis.

A buyer sequence maps a population size to a panel whose rows are a prefix of
the next size's rows, so markets grow by pure arrival. Sweeps solve both
scenarios per probe and record utility ratios; ratios with a zero baseline
denominator are recorded as absent, never as zero or infinity.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import BuyerPanel, CostStructure, GroupSet, LearningCurve, MarketConfig, TargetVector
from .equilibrium import BaselineOutcome, InterventionOutcome, solve_baseline, solve_intervention

__all__ = [
    "CycleArrivals",
    "RateArrivals",
    "BuyerSequence",
    "MarketStub",
    "TracePoint",
    "RatioTrace",
    "AmortizationVerdict",
    "MitigationResult",
    "DEFAULT_PROBES",
    "sweep",
    "check_mitigation",
    "amortization_report",
    "unbounded_production_check",
]

#: Default geometric probe ladder; limits are asymptotic and geometric spacing
#: exposes the decay rate of the utility-ratio deviations.
DEFAULT_PROBES = (100, 1_000, 10_000, 100_000, 1_000_000)


@dataclass(frozen=True, eq=False)
class CycleArrivals:
    """Arriving buyers cycle through fixed value rows; one row = constant replication."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float).copy()
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("cycle rows must be a nonempty (rows x groups) matrix")
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise ValueError("cycle rows must be finite and >= 0")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def tail(self, count: int) -> np.ndarray:
        reps = -(-count // self.rows.shape[0])  # ceil
        return np.tile(self.rows, (reps, 1))[:count]


@dataclass(frozen=True, eq=False)
class RateArrivals:
    """Each group gains a buyer at value ``values[g]`` every ``1/rates[g]`` arrivals.

    Arrival ``t`` carries value ``values[g]`` for group ``g`` exactly when
    ``floor(t * rates[g])`` ticks up, so the group's clearing count after ``n``
    arrivals is ``floor(n * rates[g])``. Rates must lie in ``[0, 1]``.
    """

    rates: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float).copy()
        values = np.asarray(self.values, dtype=float).copy()
        if rates.shape != values.shape or rates.ndim != 1:
            raise ValueError("rates and values must be matching vectors")
        if np.any(rates < 0) or np.any(rates > 1):
            raise ValueError("arrival rates must lie in [0, 1]")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("arrival values must be finite and >= 0")
        rates.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "values", values)

    def tail(self, count: int) -> np.ndarray:
        t = np.arange(1, count + 1, dtype=float)[:, None]
        ticks = np.floor(t * self.rates) - np.floor((t - 1.0) * self.rates)
        return np.where(ticks > 0, self.values, 0.0)


@dataclass(frozen=True, eq=False)
class BuyerSequence:
    """Explicit leading buyers followed by a deterministic arrival rule."""

    prefix: np.ndarray
    arrivals: CycleArrivals | RateArrivals | None = None

    def __post_init__(self) -> None:
        prefix = np.asarray(self.prefix, dtype=float).copy()
        if prefix.ndim != 2:
            raise ValueError("prefix must be a (buyers x groups) matrix")
        if prefix.size and (np.any(prefix < 0) or not np.all(np.isfinite(prefix))):
            raise ValueError("prefix values must be finite and >= 0")
        prefix.setflags(write=False)
        object.__setattr__(self, "prefix", prefix)
        if self.arrivals is not None:
            width = prefix.shape[1]
            rule_width = (
                self.arrivals.rows.shape[1]
                if isinstance(self.arrivals, CycleArrivals)
                else self.arrivals.rates.shape[0]
            )
            if rule_width != width:
                raise ValueError("arrival rule width does not match the prefix")

    @property
    def group_count(self) -> int:
        return int(self.prefix.shape[1])

    def panel(self, n: int) -> BuyerPanel:
        """Panel of exactly ``n`` buyers; rows are a prefix of ``panel(n + 1)``'s."""
        if n < 0:
            raise ValueError("panel size must be >= 0")
        head = self.prefix[: min(n, self.prefix.shape[0])]
        extra = n - head.shape[0]
        if extra == 0:
            return BuyerPanel(head)
        if self.arrivals is None:
            raise ValueError(
                f"sequence has only {self.prefix.shape[0]} explicit buyers and no arrival rule"
            )
        return BuyerPanel(np.vstack([head, self.arrivals.tail(extra)]))


@dataclass(frozen=True, eq=False)
class MarketStub:
    """Everything of a market except its buyers; growth sweeps fill those in."""

    groups: GroupSet
    curve: LearningCurve
    sellers: int
    costs: CostStructure

    def with_buyers(self, panel: BuyerPanel) -> MarketConfig:
        return MarketConfig(
            groups=self.groups,
            curve=self.curve,
            sellers=self.sellers,
            costs=self.costs,
            buyers=panel,
        )


@dataclass(frozen=True, eq=False)
class TracePoint:
    """Paired-scenario summary at one population size.

    Ratio fields are ``None`` when the corresponding baseline utility is zero.
    Buyer ratios are summarized (min/mean over buyers with nonzero baseline
    surplus) because populations grow unboundedly.
    """

    n_buyers: int
    rho: np.ndarray
    baseline_formed: bool
    intervention_formed: bool
    baseline_total: float
    intervention_total: float
    ur_marketplace: float | None
    ur_sellers: tuple[float, ...] | None
    ur_buyer_min: float | None
    ur_buyer_mean: float | None
    defined_buyer_ratios: int


@dataclass(frozen=True, eq=False)
class RatioTrace:
    """Sweep results in probe order."""

    points: tuple[TracePoint, ...]


@dataclass(frozen=True, eq=False)
class AmortizationVerdict:
    """Per-agent-class verdicts on amortization; all ``None`` when inconclusive."""

    conclusive: bool
    marketplace: bool | None
    sellers: bool | None
    buyers: bool | None

    def all_pass(self) -> bool:
        return self.conclusive and bool(self.marketplace and self.sellers and self.buyers)


@dataclass(frozen=True, eq=False)
class MitigationResult:
    """Smallest probed population at which the intervention forms and stays formed."""

    found: bool
    n0: int | None
    probes: tuple[int, ...]


def _ratio(numerator: float, denominator: float) -> float | None:
    return numerator / denominator if denominator != 0.0 else None


def _trace_point(
    n: int, base: BaselineOutcome, inter: InterventionOutcome
) -> TracePoint:
    ur_mkt = _ratio(inter.utilities.marketplace, base.utilities.marketplace)
    seller_base = base.utilities.sellers
    seller_inter = inter.utilities.sellers
    if np.all(seller_base != 0.0):
        ur_sellers = tuple(float(x) for x in seller_inter / seller_base)
    else:
        ur_sellers = None
    buyer_base = base.utilities.buyers
    buyer_inter = inter.utilities.buyers
    defined = buyer_base != 0.0
    count = int(defined.sum())
    if count:
        ratios = buyer_inter[defined] / buyer_base[defined]
        ur_min, ur_mean = float(ratios.min()), float(ratios.mean())
    else:
        ur_min = ur_mean = None
    return TracePoint(
        n_buyers=n,
        rho=base.potential.value,
        baseline_formed=bool(base.formed_groups),
        intervention_formed=inter.formed,
        baseline_total=base.produced.total(),
        intervention_total=inter.total_samples,
        ur_marketplace=ur_mkt,
        ur_sellers=ur_sellers,
        ur_buyer_min=ur_min,
        ur_buyer_mean=ur_mean,
        defined_buyer_ratios=count,
    )


def _max_workers() -> int:
    raw = os.environ.get("FAIRMARKET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def sweep(
    sequence: BuyerSequence,
    stub: MarketStub,
    target: TargetVector,
    ns: tuple[int, ...],
    *,
    max_workers: int | None = None,
) -> RatioTrace:
    """Solve both scenarios at each probe size and record the utility ratios.

    Probes must be strictly increasing. Probes are independent solves; the
    ``FAIRMARKET_THREADS`` environment variable (or ``max_workers``) caps the
    parallelism, and assembly order is deterministic regardless.
    """
    probes = tuple(int(n) for n in ns)
    if any(b <= a for a, b in zip(probes, probes[1:])):
        raise ValueError("probe sizes must be strictly increasing")

    def solve(n: int) -> TracePoint:
        config = stub.with_buyers(sequence.panel(n))
        return _trace_point(n, solve_baseline(config), solve_intervention(config, target))

    workers = _max_workers() if max_workers is None else max(1, max_workers)
    if workers == 1 or len(probes) <= 1:
        points = [solve(n) for n in probes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(solve, probes))
    return RatioTrace(tuple(points))


def check_mitigation(
    sequence: BuyerSequence,
    stub: MarketStub,
    target: TargetVector,
    n_probe: int,
    *,
    start: int = 10,
) -> MitigationResult:
    """Probe geometrically up to ``n_probe`` for stable intervention formation.

    Returns the smallest probed size from which the intervention forms at every
    subsequent probe. Not finding one is inconclusive, not a refutation; the
    caller asserts that some group's potential value grows unboundedly.
    """
    if n_probe < start:
        raise ValueError("n_probe must be at least the starting probe")
    probes = []
    n = start
    while n < n_probe:
        probes.append(n)
        n *= 10
    probes.append(n_probe)
    formed = []
    for n in probes:
        config = stub.with_buyers(sequence.panel(n))
        formed.append(solve_intervention(config, target).formed)
    n0 = None
    for idx in range(len(probes)):
        if all(formed[idx:]):
            n0 = probes[idx]
            break
    return MitigationResult(found=n0 is not None, n0=n0, probes=tuple(probes))


def amortization_report(trace: RatioTrace, tolerance: float) -> AmortizationVerdict:
    """Judge whether the cost of fairness has amortized along a growth trace.

    Marketplace and sellers pass when their final ratios are within
    ``tolerance`` of one and the deviations ``|ratio - 1|`` are weakly
    decreasing over the last three conclusive points; buyers pass when every
    defined final ratio is at least ``1 - tolerance``. Fewer than three points
    with both scenarios formed and defined ratios is inconclusive.
    """
    usable = [
        p
        for p in trace.points
        if p.baseline_formed
        and p.intervention_formed
        and p.ur_marketplace is not None
        and p.ur_sellers is not None
    ]
    if len(usable) < 3:
        return AmortizationVerdict(conclusive=False, marketplace=None, sellers=None, buyers=None)
    last3 = usable[-3:]
    final = last3[-1]

    mkt_dev = [abs(p.ur_marketplace - 1.0) for p in last3]
    marketplace_ok = mkt_dev[-1] <= tolerance and mkt_dev[0] >= mkt_dev[1] >= mkt_dev[2]

    seller_dev = [max(abs(r - 1.0) for r in p.ur_sellers) for p in last3]
    sellers_ok = seller_dev[-1] <= tolerance and seller_dev[0] >= seller_dev[1] >= seller_dev[2]

    buyers_ok = final.ur_buyer_min is None or final.ur_buyer_min >= 1.0 - tolerance
    return AmortizationVerdict(
        conclusive=True,
        marketplace=bool(marketplace_ok),
        sellers=bool(sellers_ok),
        buyers=bool(buyers_ok),
    )


def unbounded_production_check(
    sequence: BuyerSequence,
    stub: MarketStub,
    target: TargetVector,
    ns: tuple[int, ...],
) -> bool:
    """True iff total production strictly increases along formed probes, both scenarios.

    Needs at least two formed probes per scenario to witness an increase;
    constant sequences therefore fail.
    """
    trace = sweep(sequence, stub, target, ns)
    base = [p.baseline_total for p in trace.points if p.baseline_formed]
    inter = [p.intervention_total for p in trace.points if p.intervention_formed]
    if len(base) < 2 or len(inter) < 2:
        return False
    base_up = all(b > a for a, b in zip(base, base[1:]))
    inter_up = all(b > a for a, b in zip(inter, inter[1:]))
    return base_up and inter_up
