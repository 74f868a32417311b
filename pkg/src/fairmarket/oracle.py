"""Independent brute-force verifiers for every closed form in the package.

Nothing here consults the closed-form solutions: prices come from exhaustive
search and production fixed points from scalar numeric maximization.

Seller payoffs are evaluated along the symmetric diagonal: a seller weighing a
strategy values it as if every seller matched it, which is exactly the reduced
utility that pins down this model's equilibria (asymmetric profiles are never
equilibria here, and at symmetric profiles the even revenue split is the exact
division). Dynamics runs are single-threaded round-robin by contract;
independent runs parallelize freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import MarketConfig, TargetVector, learning_ante
from .mechanism import SellerProfile

__all__ = [
    "BracketError",
    "DeviationGrid",
    "DynamicsResult",
    "find_root_bisect",
    "maximize_production",
    "best_response_dynamics",
    "verify_equilibrium",
    "price_grid_search",
    "quintic_certificate",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(ValueError):
    """Root finding was started from endpoints whose values share a sign."""


def find_root_bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Deterministic bisection for a sign change of ``f`` on ``[lo, hi]``.

    Identical inputs give bit-identical outputs; the returned bracket width is
    at most ``tol`` (or float resolution, whichever is coarser).
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"f({lo}) and f({hi}) share a sign; no bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
    x = 0.5 * (lo + hi)
    return x, f(x)


def maximize_production(
    f,
    *,
    scale: float,
    knots: tuple[float, ...],
    coarse: int = 32,
) -> tuple[float, float]:
    """Maximize a seller payoff ``f`` over own production on ``[0, inf)``.

    Requires ``f(0) == 0`` and that ``knots`` lists the production levels where
    a revenue term activates: below the smallest knot the payoff is pure cost
    (so an empty ``knots`` means no revenue anywhere and zero wins outright),
    and beyond the largest the payoff is concave, eventually falling linearly.
    A coarse log sweep of the revenue region localizes the best hump; the
    candidates (the two best sweep points plus interior local maxima) are
    refined by golden section and compared against the zero strategy. A tie
    with zero prefers entry at the largest tying production, matching the
    inclusive participation convention of the closed forms; the tie slack
    absorbs float noise at exact-boundary markets.
    """
    if not knots:
        return 0.0, 0.0
    floor = min(knots)
    anchor = max(scale, max(knots), 1e-9)
    hi = 4.0 * anchor
    prev = f(hi / 2)
    for _ in range(200):
        cur = f(hi)
        if cur <= prev:
            break  # past the peak: f is concave beyond the kinks
        prev = cur
        hi *= 2.0

    points = np.geomspace(floor, hi, coarse)
    extra = [k for k in knots if floor < k < hi]
    if extra:
        points = np.unique(np.concatenate([points, np.array(extra)]))
    values = np.array([f(x) for x in points])

    candidates = set(np.argsort(values)[-2:].tolist())
    interior = [
        i
        for i in range(1, points.size - 1)
        if values[i] >= values[i - 1] and values[i] >= values[i + 1]
    ]
    candidates.update(sorted(interior, key=lambda i: values[i])[-4:])

    refined: list[tuple[float, float]] = []
    for idx in candidates:
        left = max(points[idx - 1] if idx > 0 else floor, floor)
        right = points[idx + 1] if idx + 1 < points.size else hi * 2.0
        tol = max(1e-13, 1e-11 * right)
        refined.append(_golden_max(f, left, right, tol))

    peak = max(fx for _, fx in refined)
    slack = 1e-11 * max(1.0, float(np.abs(values).max(initial=0.0)))
    if peak <= -slack:
        return 0.0, 0.0
    best_x, best_f = 0.0, 0.0
    for x, fx in refined:
        if fx >= peak - slack and x > best_x:
            best_x, best_f = x, fx
    return best_x, best_f


def _default_multipliers() -> np.ndarray:
    grid = np.unique(np.concatenate([[0.0, 1.0], np.geomspace(0.5, 2.0, 31)]))
    grid.setflags(write=False)
    return grid


@dataclass(frozen=True, eq=False)
class DeviationGrid:
    """Multiplicative probes applied to candidate strategies when certifying equilibria."""

    multipliers: np.ndarray = field(default_factory=_default_multipliers)

    def __post_init__(self) -> None:
        mult = np.asarray(self.multipliers, dtype=float).copy()
        if np.any(mult < 0):
            raise ValueError("multipliers must be nonnegative")
        if not (np.any(mult == 0.0) and np.any(mult == 1.0)):
            raise ValueError("the grid must contain 0 and 1")
        mult.setflags(write=False)
        object.__setattr__(self, "multipliers", mult)


@dataclass(frozen=True, eq=False)
class DynamicsResult:
    """Fixed point (or last iterate) of round-robin best-response dynamics."""

    profile: SellerProfile
    converged: bool
    iterations: int
    last_change: float


def _clamped_accuracy(curve, n: float) -> float:
    if n <= 0:
        return 0.0
    try:
        acc = curve.ceiling - curve.alpha * n ** -curve.beta
    except OverflowError:
        return 0.0
    return acc if acc > 0.0 else 0.0


def _oracle_prices(config: MarketConfig) -> tuple[np.ndarray, np.ndarray]:
    """Reserve prices and potential values via exhaustive search (inf = unpriced)."""
    k = config.groups.count
    prices = np.full(k, math.inf)
    rho = np.zeros(k)
    for g in range(k):
        price, value = price_grid_search(config.buyers.column(g))
        if price is not None:
            prices[g] = price
            rho[g] = value
    return prices, rho


def _group_payoff(curve, rho_g: float, kappa_g: float, m: int):
    """Symmetric-diagonal payoff in own group production: ``rho/M * G(M x) - kappa x``."""
    ceiling, alpha, beta = curve.ceiling, curve.alpha, curve.beta
    share = rho_g / m

    def f(x: float) -> float:
        if x <= 0.0:
            return 0.0
        try:
            acc = ceiling - alpha * (m * x) ** -beta
        except OverflowError:
            acc = 0.0
        if acc < 0.0:
            acc = 0.0
        return share * acc - kappa_g * x

    return f


def _total_payoff(curve, rho: np.ndarray, weights: np.ndarray, blended: float, m: int):
    """Symmetric-diagonal payoff in own total production under a balance target."""
    active = [
        (float(rho[g]) / m, float(weights[g]))
        for g in range(weights.size)
        if weights[g] > 0 and rho[g] > 0
    ]

    def f(n: float) -> float:
        if n <= 0.0:
            return 0.0
        gain = 0.0
        for share, weight in active:
            gain += share * _clamped_accuracy(curve, m * weight * n)
        return gain - blended * n

    return f


def _group_knots(curve, m: int) -> tuple[float, ...]:
    return (learning_ante(curve) / m,)


def _total_knots(curve, rho: np.ndarray, weights: np.ndarray, m: int) -> tuple[float, ...]:
    """Activation totals of the revenue-carrying groups (positive weight and value)."""
    ante = learning_ante(curve)
    return tuple(
        ante / (m * weights[g])
        for g in range(weights.size)
        if weights[g] > 0 and rho[g] > 0
    )


def best_response_dynamics(
    config: MarketConfig,
    *,
    target: TargetVector | None = None,
    init: SellerProfile | None = None,
    max_iters: int = 300,
    tol: float = 1e-8,
) -> DynamicsResult:
    """Round-robin best-response iteration to a production fixed point.

    Reserve prices come from :func:`price_grid_search` and buyers bid
    truthfully. Each seller in turn replaces its strategy with a numeric
    maximizer of its symmetric-diagonal payoff: per-group production in the
    unconstrained scenario, a single total under a target; the zero strategy is
    always a candidate, so the participation boundary is captured exactly.
    Convergence is declared when the largest relative strategy change in a
    sweep drops below ``tol``; otherwise the last iterate is returned with
    ``converged=False``.
    """
    m = config.sellers
    k = config.groups.count
    _prices, rho = _oracle_prices(config)
    kappa = config.costs.per_sample
    curve = config.curve
    ante = learning_ante(curve)

    if target is None:
        state = np.zeros((m, k)) if init is None else init.matrix().copy()
        payoffs = [_group_payoff(curve, rho[g], kappa[g], m) for g in range(k)]
        knots = _group_knots(curve, m)
        last_change = math.inf
        iterations = 0
        for iterations in range(1, max_iters + 1):
            last_change = 0.0
            for j in range(m):
                for g in range(k):
                    old = state[j, g]
                    if rho[g] <= 0:
                        new = 0.0
                    else:
                        new, _ = maximize_production(
                            payoffs[g], scale=max(old, ante / m), knots=knots
                        )
                    state[j, g] = new
                    last_change = max(last_change, abs(new - old) / max(1.0, abs(old)))
            if last_change < tol:
                break
        profile = SellerProfile(tuple(_dataset(state[j]) for j in range(m)))
        return DynamicsResult(profile, last_change < tol, iterations, last_change)

    weights = target.weights
    blended = float(kappa @ weights)
    payoff = _total_payoff(curve, rho, weights, blended, m)
    knots = _total_knots(curve, rho, weights, m)
    scale_floor = max(knots) if knots else ante
    totals = (
        np.zeros(m) if init is None else np.array([d.samples.sum() for d in init.datasets])
    )
    last_change = math.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        last_change = 0.0
        for j in range(m):
            old = totals[j]
            new, _ = maximize_production(
                payoff, scale=max(old, scale_floor), knots=knots
            )
            totals[j] = new
            last_change = max(last_change, abs(new - old) / max(1.0, abs(old)))
        if last_change < tol:
            break
    profile = SellerProfile(tuple(_dataset(weights * totals[j]) for j in range(m)))
    return DynamicsResult(profile, last_change < tol, iterations, last_change)


def _dataset(samples: np.ndarray):
    from .core import Dataset

    return Dataset(np.maximum(samples, 0.0))


def verify_equilibrium(
    config: MarketConfig,
    profile: SellerProfile,
    *,
    target: TargetVector | None = None,
    grid: DeviationGrid | None = None,
) -> float:
    """Largest payoff improvement any single agent can find from ``profile``.

    Sellers sweep grid multiples of both their current strategy and their
    numeric best response (so all-zero profiles are probed too), with payoffs
    evaluated on the symmetric diagonal; the marketplace sweeps every candidate
    reserve price; buyers sweep a bid grid around the reserve and their value.
    Returns the maximum positive delta, zero if nobody improves.
    """
    if grid is None:
        grid = DeviationGrid()
    mult = grid.multipliers
    m = config.sellers
    k = config.groups.count
    prices, rho = _oracle_prices(config)
    kappa = config.costs.per_sample
    curve = config.curve
    ante = learning_ante(curve)
    state = profile.matrix()
    best = 0.0

    if target is None:
        knots = _group_knots(curve, m)
        for g in range(k):
            if rho[g] <= 0:
                continue
            payoff = _group_payoff(curve, rho[g], kappa[g], m)
            for j in range(m):
                current = state[j, g]
                base_value = payoff(current)
                response, _ = maximize_production(
                    payoff, scale=max(current, ante / m), knots=knots
                )
                candidates = {float(c) for c in mult * current}
                candidates.update(float(c) for c in mult * response)
                for x in candidates:
                    best = max(best, payoff(x) - base_value)
    else:
        weights = target.weights
        blended = float(kappa @ weights)
        payoff = _total_payoff(curve, rho, weights, blended, m)
        knots = _total_knots(curve, rho, weights, m)
        scale_floor = max(knots) if knots else ante
        totals = state.sum(axis=1)
        for j in range(m):
            current = totals[j]
            base_value = payoff(current)
            response, _ = maximize_production(
                payoff, scale=max(current, scale_floor), knots=knots
            )
            candidates = {float(c) for c in mult * current}
            candidates.update(float(c) for c in mult * response)
            for n in candidates:
                best = max(best, payoff(n) - base_value)

    # Marketplace: revenue per group is price * clearing count * fixed accuracy.
    aggregate = state.sum(axis=0)
    for g in range(k):
        acc = _clamped_accuracy(curve, aggregate[g])
        if acc <= 0:
            continue
        current_revenue = rho[g] * acc
        column = config.buyers.column(g)
        for candidate in np.unique(column[column > 0]):
            attained = candidate * int((column >= candidate).sum())
            best = max(best, attained * acc - current_revenue)

    # Buyers: bids only gate their own allocation; groups are separable.
    values = config.buyers.values
    for g in range(k):
        price = prices[g]
        if not math.isfinite(price):
            continue
        acc = _clamped_accuracy(curve, aggregate[g])
        eps = 1e-6 * max(1.0, price)
        for i in range(values.shape[0]):
            mu = values[i, g]
            truthful = (mu - price) * acc if mu >= price else 0.0
            for bid in (0.0, price - eps, price, mu, mu + eps):
                deviated = (mu - price) * acc if bid >= price else 0.0
                best = max(best, deviated - truthful)
    return best


def price_grid_search(values) -> tuple[float | None, float]:
    """Exhaustive reserve-price maximization over the distinct positive buyer values."""
    vals = [float(v) for v in np.asarray(values, dtype=float).ravel()]
    best_price, best_value = None, 0.0
    for candidate in sorted({v for v in vals if v > 0}):
        attained = candidate * sum(1 for v in vals if v >= candidate)
        if attained > best_value:
            best_price, best_value = candidate, attained
    return best_price, best_value


def quintic_certificate() -> tuple[float, float]:
    """Root and payoff bound certifying the radical-free equilibrium instance.

    A one-seller, two-buyer market with decay exponents 3 and 4 (offsets 1/3 and
    1/4, ceiling 5, unit price and unit cost) reduces the seller's stationarity
    condition to ``x**5 - x - 1 = 0``, which has no closed-form solution. The
    root is computed by bisection; positive production is certified by the
    payoff bound of producing one sample against the cost of two:
    ``(5 - 1/3) + (5 - 1/4) - 2 > 0``.
    """
    root = find_root_bisect(lambda x: x**5 - x - 1.0, 1.0, 2.0, tol=1e-12)
    bound = (5.0 - 1.0 / 3.0) + (5.0 - 1.0 / 4.0) - 2.0
    return root, bound
