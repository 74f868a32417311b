"""Paired baseline/intervention comparison of one market."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MarketConfig, TargetVector
from .equilibrium import BaselineOutcome, InterventionOutcome, solve_baseline, solve_intervention

__all__ = ["ComparisonReport", "compare_scenarios"]


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Both scenarios' outcomes with utility ratios and formation flags.

    Ratio entries are ``nan`` where the baseline utility is zero (they are
    rendered as absent downstream, never as zero or infinity).
    """

    config: MarketConfig
    target: TargetVector
    baseline: BaselineOutcome
    intervention: InterventionOutcome
    ur_marketplace: float
    ur_sellers: np.ndarray
    ur_buyers: np.ndarray
    backfired: bool


def _ratios(numerators: np.ndarray, denominators: np.ndarray) -> np.ndarray:
    out = np.full(denominators.shape, np.nan)
    defined = denominators != 0.0
    out[defined] = numerators[defined] / denominators[defined]
    return out


def compare_scenarios(config: MarketConfig, target: TargetVector) -> ComparisonReport:
    """Solve both scenarios and assemble the paired report."""
    base = solve_baseline(config)
    inter = solve_intervention(config, target)
    w = base.utilities.marketplace
    ur_mkt = inter.utilities.marketplace / w if w != 0.0 else float("nan")
    return ComparisonReport(
        config=config,
        target=target,
        baseline=base,
        intervention=inter,
        ur_marketplace=ur_mkt,
        ur_sellers=_ratios(inter.utilities.sellers, base.utilities.sellers),
        ur_buyers=_ratios(inter.utilities.buyers, base.utilities.buyers),
        backfired=bool(base.formed_groups) and not inter.formed,
    )
