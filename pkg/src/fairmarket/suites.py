"""Seeded randomized verification suites: oracle equivalence and theorem reproduction.

Each suite draws markets from a seeded generator, checks one contract, and
reports failures with the offending market serialized as a run configuration.
Generators deliberately avoid knife-edge draws (costs within a few percent of a
participation threshold, or targets that put the monetized-set resolution near
a learning-ante boundary): at those points two equilibria coexist and closed
form versus numeric search may legitimately pick different ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, serialize_run_config
from .core import (
    BuyerPanel,
    CostStructure,
    Dataset,
    GroupSet,
    LearningCurve,
    MarketConfig,
    TargetVector,
    accuracy,
    curve_constant,
    learning_ante,
)
from .equilibrium import (
    consistent_monetized_sets,
    intervention_threshold,
    market_potential,
    solve_baseline,
    solve_intervention,
)
from .fairness import (
    check_backfire,
    check_sufficient_condition,
    check_uniform_safety,
    construct_backfire_market,
    construct_verge_market,
    max_threshold,
    optimal_target,
)
from .growth import BuyerSequence, CycleArrivals, MarketStub, amortization_report, sweep
from .mechanism import PriceVector, SellerProfile, shapley_division
from .oracle import best_response_dynamics, verify_equilibrium

__all__ = [
    "SuiteResult",
    "random_curve",
    "random_market",
    "random_target",
    "amortization_sweep_setup",
    "suite_oracle",
    "suite_truthfulness",
    "suite_shapley",
    "suite_backfire",
    "suite_uniform_safety",
    "suite_only_u",
    "suite_sufficient",
    "suite_amortization",
    "suite_kkt",
    "suite_symmetric_collapse",
    "CLI_SUITES",
]


@dataclass
class SuiteResult:
    """Outcome of one randomized suite."""

    name: str
    passed: bool
    trials: int
    failures: list[str] = field(default_factory=list)

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        tail = f"; {len(self.failures)} failure(s)" if self.failures else ""
        return f"{self.name}: {status} ({self.trials} trials{tail})"


def _describe(config: MarketConfig, target: TargetVector | None) -> str:
    rc = RunConfig(
        market=config, target=target, growth=None, seed=0, out_format="csv", output=None
    )
    return serialize_run_config(rc)


def random_curve(rng: np.random.Generator) -> LearningCurve:
    return LearningCurve(
        ceiling=float(rng.uniform(0.5, 4.0)),
        alpha=float(rng.uniform(0.2, 1.5)),
        beta=float(rng.uniform(0.4, 3.0)),
    )


def _random_values(
    rng: np.random.Generator, buyers: int, groups: int, *, ensure_full: bool
) -> np.ndarray:
    values = rng.uniform(0.2, 3.0, size=(buyers, groups))
    values[rng.random(values.shape) < 0.3] = 0.0
    if ensure_full and buyers:
        for g in range(groups):
            if not np.any(values[:, g] > 0):
                values[int(rng.integers(buyers)), g] = float(rng.uniform(0.5, 3.0))
    return values


def random_market(
    rng: np.random.Generator,
    *,
    fully_forming: bool = False,
    min_groups: int = 1,
    max_groups: int = 3,
    max_sellers: int = 4,
    max_buyers: int = 10,
    boundary_margin: float = 0.05,
) -> MarketConfig:
    """One random quasi-symmetric market, avoiding participation knife edges.

    ``fully_forming`` guarantees every group has buyers and an affordable cost;
    otherwise per-group costs land on either side of the threshold but never
    within ``boundary_margin`` of it.
    """
    k = int(rng.integers(min_groups, max_groups + 1))
    m = int(rng.integers(1, max_sellers + 1))
    n = int(rng.integers(1 if fully_forming else 0, max_buyers + 1))
    curve = random_curve(rng)
    values = _random_values(rng, n, k, ensure_full=fully_forming)
    buyers = BuyerPanel(values if n else np.zeros((0, k)))
    potential = market_potential(buyers)
    c = curve_constant(curve)
    kappa = np.empty(k)
    for g in range(k):
        tau = potential.value[g] * c
        if tau <= 0:
            kappa[g] = float(rng.uniform(0.1, 1.0))
        elif fully_forming:
            kappa[g] = tau * float(rng.uniform(0.05, 0.9))
        else:
            lo, hi = 1.0 - boundary_margin, 1.0 + boundary_margin
            factor = float(rng.uniform(0.05, 1.6))
            while lo < factor < hi:
                factor = float(rng.uniform(0.05, 1.6))
            kappa[g] = tau * factor
    return MarketConfig(
        groups=GroupSet(tuple(f"g{i + 1}" for i in range(k))),
        curve=curve,
        sellers=m,
        costs=CostStructure(kappa),
        buyers=buyers,
    )


def random_target(rng: np.random.Generator, groups: int, *, floor: float = 0.05) -> TargetVector:
    draws = rng.uniform(floor, 1.0, size=groups)
    return TargetVector(draws / draws.sum())


def _clean_intervention_draw(
    rng: np.random.Generator, config: MarketConfig, *, margin: float = 0.05, attempts: int = 60
) -> TargetVector | None:
    """A target whose monetized-set resolution sits clear of every boundary.

    Rejects draws with several coexisting consistent monetized sets, with the
    blended cost within ``margin`` of the participation threshold, or with a
    group's required share within ``margin`` of the learning ante.
    """
    k = config.groups.count
    potential = market_potential(config.buyers)
    ante = learning_ante(config.curve)
    for _ in range(attempts):
        target = random_target(rng, k)
        candidates = consistent_monetized_sets(
            potential, target, config.costs, config.curve
        )
        if len(candidates) > 1:
            continue
        if not candidates:
            return target  # nothing monetizable: both solvers sit at zero
        members, total = candidates[0]
        weights = target.weights
        inside = min(weights[g] for g in members) * total
        if inside < (1.0 + margin) * ante:
            continue
        outside = [weights[g] for g in range(k) if g not in set(members) and weights[g] > 0]
        if outside and max(outside) * total > (1.0 - margin) * ante:
            continue
        tau = intervention_threshold(potential.value, weights, np.array(members), config.curve)
        blended = float(config.costs.per_sample @ weights)
        if abs(blended - tau) < margin * max(tau, blended, 1e-9):
            continue
        return target
    return None


def suite_oracle(seed: int = 0, trials: int = 100) -> SuiteResult:
    """Closed forms versus numeric best response on random small markets.

    Productions must agree within relative 1e-6 in both scenarios and the
    equilibrium certificates must stay at or below 1e-8.
    """
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    done = 0
    while done < trials:
        config = random_market(rng)
        target = _clean_intervention_draw(rng, config)
        if target is None:
            continue
        done += 1

        base = solve_baseline(config)
        dynamics = best_response_dynamics(config)
        expected = base.per_seller.samples
        got = dynamics.profile.matrix()
        if not np.allclose(got, np.tile(expected, (config.sellers, 1)), rtol=1e-6, atol=1e-9):
            failures.append(
                f"baseline production mismatch: closed {expected} vs dynamics {got[0]}\n"
                + _describe(config, None)
            )
            continue
        certificate = verify_equilibrium(
            config, SellerProfile.symmetric(expected, config.sellers)
        )
        if certificate > 1e-8:
            failures.append(
                f"baseline certificate {certificate} > 1e-8\n" + _describe(config, None)
            )
            continue

        inter = solve_intervention(config, target)
        inter_dyn = best_response_dynamics(config, target=target)
        got_total = float(inter_dyn.profile.aggregate().sum())
        if not math.isclose(got_total, inter.total_samples, rel_tol=1e-6, abs_tol=1e-9):
            failures.append(
                f"intervention production mismatch: closed {inter.total_samples} vs "
                f"dynamics {got_total}\n" + _describe(config, target)
            )
            continue
        per_seller = target.weights * inter.per_seller_total
        certificate = verify_equilibrium(
            config, SellerProfile.symmetric(per_seller, config.sellers), target=target
        )
        if certificate > 1e-8:
            failures.append(
                f"intervention certificate {certificate} > 1e-8\n" + _describe(config, target)
            )
    return SuiteResult("oracle", not failures, trials, failures)


def suite_truthfulness(seed: int = 0, trials: int = 100) -> SuiteResult:
    """Truthful bidding is a best response on a bid grid, at random profiles and prices."""
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    for _ in range(trials):
        config = random_market(rng, max_buyers=8)
        k = config.groups.count
        aggregate = rng.uniform(0.0, 5.0, size=k)
        potential = market_potential(config.buyers)
        prices = np.empty(k)
        for g in range(k):
            if potential.price[g] is not None and rng.random() < 0.7:
                prices[g] = potential.price[g]
            else:
                prices[g] = float(rng.uniform(0.1, 3.5))
        acc = np.array([accuracy(config.curve, a) for a in aggregate])
        for i in range(config.buyers.size):
            for g in range(k):
                mu = config.buyers.values[i, g]
                price = prices[g]
                truthful = (mu - price) * acc[g] if mu >= price else 0.0
                eps = 1e-6 * max(1.0, price)
                for bid in (0.0, price - eps, price, mu, mu + eps):
                    deviated = (mu - price) * acc[g] if bid >= price else 0.0
                    if deviated > truthful + 1e-12:
                        failures.append(
                            f"buyer {i} group {g}: bid {bid} beats truthful by "
                            f"{deviated - truthful}\n" + _describe(config, None)
                        )
    return SuiteResult("truthfulness", not failures, trials, failures)


def suite_shapley(seed: int = 0, trials: int = 100) -> SuiteResult:
    """Exact division versus the even split for identical sellers, plus axioms.

    Identical sellers (M = 1..6) must match ``price * accuracy(total) / M``
    within 1e-9; random asymmetric profiles must satisfy efficiency, the null
    player axiom, and symmetry for duplicated datasets.
    """
    rng = np.random.default_rng(seed)
    failures: list[str] = []

    for m in range(1, 7):
        curve = random_curve(rng)
        row = rng.uniform(0.2, 3.0, size=2)
        profile = SellerProfile.symmetric(row, m)
        price = float(rng.uniform(0.3, 3.0))
        for g in range(2):
            payments = shapley_division(profile, g, price, price, curve)
            even = price * accuracy(curve, m * row[g]) / m
            if not np.allclose(payments, even, rtol=1e-9, atol=1e-12):
                failures.append(f"identical sellers M={m}: {payments} != {even}")

    for _ in range(trials):
        curve = random_curve(rng)
        m = int(rng.integers(1, 5))
        matrix = rng.uniform(0.0, 4.0, size=(m, 2))
        matrix[rng.random(matrix.shape) < 0.2] = 0.0
        zero_seller = int(rng.integers(m + 1))
        matrix = np.insert(matrix, zero_seller, 0.0, axis=0)
        dup_of = int(rng.integers(matrix.shape[0]))
        matrix = np.vstack([matrix, matrix[dup_of]])
        profile = SellerProfile(tuple(Dataset(r) for r in matrix))
        price = float(rng.uniform(0.3, 3.0))
        g = int(rng.integers(2))
        payments = shapley_division(profile, g, price, price, curve)
        total = price * accuracy(curve, float(matrix[:, g].sum()))
        if not math.isclose(payments.sum(), total, rel_tol=1e-9, abs_tol=1e-12):
            failures.append(f"efficiency: sum {payments.sum()} != {total}")
        if matrix[zero_seller, g] == 0.0 and matrix[zero_seller].sum() == 0.0:
            if abs(payments[zero_seller]) > 1e-12:
                failures.append(f"null player paid {payments[zero_seller]}")
        if not math.isclose(
            payments[dup_of], payments[-1], rel_tol=1e-9, abs_tol=1e-12
        ):
            failures.append(f"symmetry: {payments[dup_of]} != {payments[-1]}")
    return SuiteResult("shapley", not failures, trials, failures)


def suite_backfire(seed: int = 0, trials: int = 50) -> SuiteResult:
    """Constructed backfire markets must backfire, for random targets and buyers."""
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    for _ in range(trials):
        k = int(rng.integers(2, 5))
        target = random_target(rng, k)
        curve = random_curve(rng)
        m = int(rng.integers(1, 5))
        n = int(rng.integers(1, 9))
        buyers = BuyerPanel(_random_values(rng, n, k, ensure_full=True))
        market = construct_backfire_market(target, buyers, curve, m)
        report = check_backfire(market, target)
        if not report.backfired:
            failures.append(
                f"constructed market did not backfire (baseline formed: "
                f"{report.baseline_formed_groups}, intervention formed: "
                f"{report.intervention_formed})\n" + _describe(market, target)
            )
    return SuiteResult("backfire", not failures, trials, failures)


def suite_uniform_safety(seed: int = 0, trials: int = 1000) -> SuiteResult:
    """The uniform target never backfires in fully-forming markets."""
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    for _ in range(trials):
        config = random_market(rng, fully_forming=True, min_groups=2, max_groups=4, max_buyers=12)
        if not check_uniform_safety(config):
            failures.append("uniform target backfired\n" + _describe(config, None))
    return SuiteResult("uniform-safety", not failures, trials, failures)


def suite_only_u(seed: int = 0, trials: int = 200) -> SuiteResult:
    """A verge market forms under the uniform target and under nothing else.

    Draws one verge market from the seed, checks formation at the uniform
    target, then checks that ``trials`` random full-support targets at least
    1e-3 away from uniform (sup norm) all fail to form.
    """
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 5))
    curve = random_curve(rng)
    m = int(rng.integers(1, 5))
    c_mu = float(rng.uniform(0.5, 3.0))
    market = construct_verge_market(
        curve, m, GroupSet(tuple(f"g{i + 1}" for i in range(k))), c_mu
    )
    failures: list[str] = []
    uniform = TargetVector.uniform(k)
    if not solve_intervention(market, uniform).formed:
        failures.append("verge market failed to form under the uniform target\n"
                        + _describe(market, uniform))
    done = 0
    while done < trials:
        target = random_target(rng, k)
        if np.max(np.abs(target.weights - uniform.weights)) <= 1e-3:
            continue
        done += 1
        if solve_intervention(market, target).formed:
            failures.append(
                f"verge market formed under non-uniform target {target.weights}\n"
                + _describe(market, target)
            )
    return SuiteResult("only-u", not failures, trials, failures)


def suite_sufficient(seed: int = 0, trials: int = 1000) -> SuiteResult:
    """Markets satisfying the cost-headroom bound always form under intervention."""
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    done = 0
    while done < trials:
        k = int(rng.integers(2, 5))
        curve = random_curve(rng)
        m = int(rng.integers(1, 5))
        n = int(rng.integers(1, 10))
        buyers = BuyerPanel(_random_values(rng, n, k, ensure_full=True))
        target = random_target(rng, k)
        potential = market_potential(buyers)
        rho = potential.value
        c = curve_constant(curve)
        w = target.weights
        bound = (w.min() / w.max()) ** (curve.beta + 1.0) / ((rho.max() / rho.min()) * k)
        eta = float(rng.uniform(0.05, 0.95)) * bound
        kappa = eta * rho * c
        if np.any(kappa <= 0) or not np.all(np.isfinite(kappa)):
            continue
        done += 1
        config = MarketConfig(
            groups=GroupSet(tuple(f"g{i + 1}" for i in range(k))),
            curve=curve,
            sellers=m,
            costs=CostStructure(kappa),
            buyers=buyers,
        )
        report = check_sufficient_condition(config, target)
        if not (report.applicable and report.satisfied):
            failures.append(
                f"constructed market not reported satisfied (eta={report.eta}, "
                f"bound={report.bound})\n" + _describe(config, target)
            )
            continue
        if not solve_intervention(config, target).formed:
            failures.append(
                "satisfied bound but the intervention did not form\n"
                + _describe(config, target)
            )
    return SuiteResult("sufficient", not failures, trials, failures)


def amortization_sweep_setup() -> tuple[BuyerSequence, MarketStub, TargetVector]:
    """Canonical growing market: one group's demand scales with N, the other is fixed.

    The fixed group keeps four buyers (one valuing it at 2, three at 1, so its
    optimal reserve stays 1 with potential value 4 and the value-2 buyer keeps
    positive surplus); arrivals alternate values 2 and 1 for the growing group,
    keeping its reserve at 1 while its potential value grows linearly.
    """
    sequence = BuyerSequence(
        prefix=np.array([[0.0, 2.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]),
        arrivals=CycleArrivals(np.array([[2.0, 0.0], [1.0, 0.0]])),
    )
    stub = MarketStub(
        groups=GroupSet(("grow", "fixed")),
        curve=LearningCurve(1.0, 1.0, 1.0),
        sellers=2,
        costs=CostStructure(np.array([1.0, 1.0])),
    )
    return sequence, stub, TargetVector.uniform(2)


def suite_amortization(
    seed: int = 0, trials: int = 0, *, tolerance: float = 0.01
) -> SuiteResult:
    """Growing sweep to a million buyers: ratios amortize at the stated tolerance.

    Also checks the decay rate of the marketplace deviation between the 10^4
    and 10^6 probes against the curve's ``beta/(beta+1)`` exponent (within a
    factor of three). The seed and trial count are accepted for interface
    uniformity; the sweep itself is deterministic.
    """
    del seed, trials
    sequence, stub, target = amortization_sweep_setup()
    probes = (100, 1_000, 10_000, 100_000, 1_000_000)
    trace = sweep(sequence, stub, target, probes)
    failures: list[str] = []
    verdict = amortization_report(trace, tolerance)
    if not verdict.conclusive:
        failures.append("trace inconclusive (fewer than 3 usable points)")
    else:
        if not verdict.marketplace:
            failures.append("marketplace ratio failed to amortize")
        if not verdict.sellers:
            failures.append("seller ratios failed to amortize")
        if not verdict.buyers:
            failures.append("a buyer ratio fell below 1 - tolerance at the final probe")
    for point in trace.points:
        if point.ur_marketplace is not None and point.ur_marketplace > 1.0 + 1e-12:
            failures.append(f"marketplace ratio above 1 pre-limit at N={point.n_buyers}")
        if point.ur_sellers is not None and max(point.ur_sellers) > 1.0 + 1e-12:
            failures.append(f"seller ratio above 1 pre-limit at N={point.n_buyers}")
    by_n = {p.n_buyers: p for p in trace.points}
    dev4 = abs(by_n[10_000].ur_marketplace - 1.0)
    dev6 = abs(by_n[1_000_000].ur_marketplace - 1.0)
    beta = stub.curve.beta
    theory = 100.0 ** (beta / (beta + 1.0))
    observed = dev4 / dev6 if dev6 > 0 else float("inf")
    if not (theory / 3.0 <= observed <= theory * 3.0):
        failures.append(
            f"deviation decay {observed:.3g} outside a factor 3 of theory {theory:.3g}"
        )
    return SuiteResult("amortization", not failures, len(trace.points), failures)


def suite_kkt(seed: int = 0, trials: int = 100, *, perturbations: int = 50) -> SuiteResult:
    """The closed-form optimal target dominates random simplex perturbations.

    The threshold at the optimal target must equal the closed-form maximum
    within 1e-9, and no perturbed target may exceed it by more than 1e-9.
    """
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    for _ in range(trials):
        k = int(rng.integers(1, 5))
        curve = random_curve(rng)
        rho = rng.uniform(0.2, 5.0, size=k)
        buyers = BuyerPanel(np.diag(rho)) if k > 1 else BuyerPanel(rho.reshape(1, 1))
        potential = market_potential(buyers)
        if k == 1 or rng.random() < 0.5:
            members = np.arange(k)
        else:
            size = int(rng.integers(1, k + 1))
            members = np.sort(rng.choice(k, size=size, replace=False))
        star = optimal_target(potential, members, curve.beta)
        best = max_threshold(potential, members, curve)
        attained = intervention_threshold(potential.value, star.weights, members, curve)
        if abs(attained - best) > 1e-9 * max(1.0, best):
            failures.append(f"threshold at optimal target {attained} != maximum {best}")
            continue
        for _ in range(perturbations):
            noise = star.weights[members] * np.exp(0.3 * rng.standard_normal(members.size))
            weights = np.zeros(k)
            weights[members] = noise / noise.sum()
            perturbed = TargetVector(weights)
            tau = intervention_threshold(potential.value, perturbed.weights, members, curve)
            if tau > best + 1e-9:
                failures.append(f"perturbed target beats the maximum: {tau} > {best}")
                break
    return SuiteResult("kkt", not failures, trials, failures)


def suite_symmetric_collapse(seed: int = 0, trials: int = 100) -> SuiteResult:
    """Symmetric demand and costs under the uniform target cost nothing.

    Intervention production and all utilities must match the baseline within
    relative 1e-9.
    """
    rng = np.random.default_rng(seed)
    failures: list[str] = []
    for _ in range(trials):
        k = int(rng.integers(2, 5))
        m = int(rng.integers(1, 5))
        n = int(rng.integers(1, 11))
        curve = random_curve(rng)
        column = rng.uniform(0.2, 3.0, size=n)
        buyers = BuyerPanel(np.tile(column[:, None], (1, k)))
        potential = market_potential(buyers)
        tau = potential.value[0] * curve_constant(curve)
        kappa = np.full(k, tau * float(rng.uniform(0.05, 0.9)))
        config = MarketConfig(
            groups=GroupSet(tuple(f"g{i + 1}" for i in range(k))),
            curve=curve,
            sellers=m,
            costs=CostStructure(kappa),
            buyers=buyers,
        )
        base = solve_baseline(config)
        inter = solve_intervention(config, TargetVector.uniform(k))
        if not np.allclose(
            inter.produced().samples, base.produced.samples, rtol=1e-9, atol=1e-12
        ):
            failures.append(
                "production differs under the uniform target\n" + _describe(config, None)
            )
            continue
        wb, wi = base.utilities.marketplace, inter.utilities.marketplace
        ok = math.isclose(wb, wi, rel_tol=1e-9, abs_tol=1e-12)
        ok = ok and np.allclose(
            base.utilities.sellers, inter.utilities.sellers, rtol=1e-9, atol=1e-12
        )
        ok = ok and np.allclose(
            base.utilities.buyers, inter.utilities.buyers, rtol=1e-9, atol=1e-12
        )
        if not ok:
            failures.append("utilities differ under the uniform target\n" + _describe(config, None))
    return SuiteResult("symmetric-collapse", not failures, trials, failures)


#: Suites reachable from the command line, in display order.
CLI_SUITES = {
    "oracle": suite_oracle,
    "truthfulness": suite_truthfulness,
    "shapley": suite_shapley,
    "backfire": suite_backfire,
    "uniform-safety": suite_uniform_safety,
    "only-u": suite_only_u,
    "sufficient": suite_sufficient,
    "amortization": suite_amortization,
}

#: Default trial counts per suite (matching the package's acceptance settings).
DEFAULT_TRIALS = {
    "oracle": 100,
    "truthfulness": 100,
    "shapley": 100,
    "backfire": 50,
    "uniform-safety": 1000,
    "only-u": 200,
    "sufficient": 1000,
    "amortization": 0,
}
