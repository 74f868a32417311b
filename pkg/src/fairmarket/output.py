"""Machine-readable renderers for outcomes, comparisons and sweep traces.

CSV cells use ``.`` decimals, no thousands separators, and 12 significant
digits so fixtures are bit-stable across platforms; any undefined quantity is
the literal ``NA``, never zero, infinity or an empty cell.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .core import MarketConfig
from .equilibrium import BaselineOutcome, DemographicsUndefinedError, InterventionOutcome, baseline_demographics
from .growth import AmortizationVerdict, RatioTrace
from .report import ComparisonReport

__all__ = [
    "fmt",
    "render_baseline_csv",
    "render_baseline_json",
    "render_intervention_csv",
    "render_intervention_json",
    "render_comparison_csv",
    "render_comparison_json",
    "render_trace_csv",
    "render_trace_json",
]


def fmt(value) -> str:
    """One CSV cell: 12 significant digits, ``NA`` for missing or non-finite."""
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    x = float(value)
    if not math.isfinite(x):
        return "NA"
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return f"{x:.12g}"


def _json_value(value):
    if value is None:
        return None
    if isinstance(value, (bool, str, int)):
        return value
    x = float(value)
    return x if math.isfinite(x) else None


def _agent_rows(utilities) -> list[str]:
    rows = ["agent,index,utility"]
    rows.append(f"marketplace,NA,{fmt(utilities.marketplace)}")
    for j, v in enumerate(utilities.sellers):
        rows.append(f"seller,{j},{fmt(v)}")
    for i, u in enumerate(utilities.buyers):
        rows.append(f"buyer,{i},{fmt(u)}")
    return rows


def _utilities_json(utilities) -> dict:
    return {
        "marketplace": _json_value(utilities.marketplace),
        "sellers": [_json_value(v) for v in utilities.sellers],
        "buyers": [_json_value(u) for u in utilities.buyers],
    }


def render_baseline_csv(config: MarketConfig, outcome: BaselineOutcome) -> str:
    try:
        demographics = baseline_demographics(outcome)
    except DemographicsUndefinedError:
        demographics = None
    rows = ["group,price,rho,tau,kappa,produced,demographic"]
    for g, label in enumerate(config.groups.labels):
        demo = demographics[g] if demographics is not None else None
        rows.append(
            ",".join(
                [
                    label,
                    fmt(outcome.potential.price[g]),
                    fmt(outcome.potential.value[g]),
                    fmt(outcome.thresholds[g]),
                    fmt(config.costs.per_sample[g]),
                    fmt(outcome.produced.samples[g]),
                    fmt(demo),
                ]
            )
        )
    rows.append("")
    rows.append("key,value")
    rows.append(f"formed,{fmt(bool(outcome.formed_groups))}")
    rows.append(f"formed_groups,{'|'.join(outcome.formed_groups) if outcome.formed_groups else 'NA'}")
    rows.append(f"total_samples,{fmt(outcome.produced.total())}")
    rows.append("")
    rows.extend(_agent_rows(outcome.utilities))
    return "\n".join(rows) + "\n"


def render_baseline_json(config: MarketConfig, outcome: BaselineOutcome) -> str:
    try:
        demographics = baseline_demographics(outcome)
    except DemographicsUndefinedError:
        demographics = None
    doc = {
        "scenario": "baseline",
        "groups": [
            {
                "group": label,
                "price": _json_value(outcome.potential.price[g]),
                "rho": _json_value(outcome.potential.value[g]),
                "tau": _json_value(outcome.thresholds[g]),
                "kappa": _json_value(config.costs.per_sample[g]),
                "produced": _json_value(outcome.produced.samples[g]),
                "demographic": _json_value(demographics[g]) if demographics is not None else None,
            }
            for g, label in enumerate(config.groups.labels)
        ],
        "formed": bool(outcome.formed_groups),
        "formed_groups": list(outcome.formed_groups),
        "total_samples": _json_value(outcome.produced.total()),
        "utilities": _utilities_json(outcome.utilities),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_intervention_csv(config: MarketConfig, outcome: InterventionOutcome) -> str:
    produced = outcome.produced().samples
    monetized = set(outcome.monetized)
    rows = ["group,price,rho,kappa,target,allocated,monetized"]
    for g, label in enumerate(config.groups.labels):
        rows.append(
            ",".join(
                [
                    label,
                    fmt(outcome.potential.price[g]),
                    fmt(outcome.potential.value[g]),
                    fmt(config.costs.per_sample[g]),
                    fmt(outcome.target.weights[g]),
                    fmt(produced[g]),
                    fmt(g in monetized),
                ]
            )
        )
    blended = float(config.costs.per_sample @ outcome.target.weights)
    rows.append("")
    rows.append("key,value")
    rows.append(f"formed,{fmt(outcome.formed)}")
    rows.append(f"threshold,{fmt(outcome.threshold)}")
    rows.append(f"blended_cost,{fmt(blended)}")
    rows.append(f"total_samples,{fmt(outcome.total_samples)}")
    rows.append(f"per_seller_total,{fmt(outcome.per_seller_total)}")
    rows.append("")
    rows.extend(_agent_rows(outcome.utilities))
    return "\n".join(rows) + "\n"


def render_intervention_json(config: MarketConfig, outcome: InterventionOutcome) -> str:
    produced = outcome.produced().samples
    monetized = set(outcome.monetized)
    doc = {
        "scenario": "intervention",
        "groups": [
            {
                "group": label,
                "price": _json_value(outcome.potential.price[g]),
                "rho": _json_value(outcome.potential.value[g]),
                "kappa": _json_value(config.costs.per_sample[g]),
                "target": _json_value(outcome.target.weights[g]),
                "allocated": _json_value(produced[g]),
                "monetized": g in monetized,
            }
            for g, label in enumerate(config.groups.labels)
        ],
        "formed": outcome.formed,
        "threshold": _json_value(outcome.threshold),
        "blended_cost": _json_value(float(config.costs.per_sample @ outcome.target.weights)),
        "total_samples": _json_value(outcome.total_samples),
        "per_seller_total": _json_value(outcome.per_seller_total),
        "utilities": _utilities_json(outcome.utilities),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _ratio_cell(x: float) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else fmt(x)


def render_comparison_csv(report: ComparisonReport) -> str:
    config = report.config
    inter_produced = report.intervention.produced().samples
    rows = ["group,baseline_produced,intervention_produced,change"]
    for g, label in enumerate(config.groups.labels):
        base_g = report.baseline.produced.samples[g]
        rows.append(
            ",".join(
                [label, fmt(base_g), fmt(inter_produced[g]), fmt(inter_produced[g] - base_g)]
            )
        )
    rows.append("")
    rows.append("agent,index,baseline_utility,intervention_utility,ratio")
    base_u, inter_u = report.baseline.utilities, report.intervention.utilities
    rows.append(
        f"marketplace,NA,{fmt(base_u.marketplace)},{fmt(inter_u.marketplace)},"
        f"{_ratio_cell(report.ur_marketplace)}"
    )
    for j in range(len(base_u.sellers)):
        rows.append(
            f"seller,{j},{fmt(base_u.sellers[j])},{fmt(inter_u.sellers[j])},"
            f"{_ratio_cell(float(report.ur_sellers[j]))}"
        )
    for i in range(len(base_u.buyers)):
        rows.append(
            f"buyer,{i},{fmt(base_u.buyers[i])},{fmt(inter_u.buyers[i])},"
            f"{_ratio_cell(float(report.ur_buyers[i]))}"
        )
    rows.append("")
    rows.append("key,value")
    rows.append(f"baseline_formed,{fmt(bool(report.baseline.formed_groups))}")
    rows.append(
        f"baseline_fully_formed,{fmt(len(report.baseline.formed_groups) == config.groups.count)}"
    )
    rows.append(f"intervention_formed,{fmt(report.intervention.formed)}")
    rows.append(f"backfired,{fmt(report.backfired)}")
    return "\n".join(rows) + "\n"


def render_comparison_json(report: ComparisonReport) -> str:
    config = report.config
    inter_produced = report.intervention.produced().samples
    doc = {
        "groups": [
            {
                "group": label,
                "baseline_produced": _json_value(report.baseline.produced.samples[g]),
                "intervention_produced": _json_value(inter_produced[g]),
            }
            for g, label in enumerate(config.groups.labels)
        ],
        "utilities": {
            "baseline": _utilities_json(report.baseline.utilities),
            "intervention": _utilities_json(report.intervention.utilities),
        },
        "ratios": {
            "marketplace": _json_value(report.ur_marketplace),
            "sellers": [_json_value(x) for x in report.ur_sellers],
            "buyers": [_json_value(x) for x in report.ur_buyers],
        },
        "baseline_formed": bool(report.baseline.formed_groups),
        "baseline_fully_formed": len(report.baseline.formed_groups) == config.groups.count,
        "intervention_formed": report.intervention.formed,
        "backfired": report.backfired,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _trace_header(labels) -> str:
    rho_cols = ",".join(f"rho_{label}" for label in labels)
    return (
        f"n_buyers,{rho_cols},baseline_formed,intervention_formed,"
        "baseline_samples,intervention_samples,"
        "ur_marketplace,ur_seller,ur_buyer_min,ur_buyer_mean"
    )


def _common_seller_ratio(point) -> float | None:
    if point.ur_sellers is None:
        return None
    return point.ur_sellers[0]


def render_trace_csv(
    labels, trace: RatioTrace, verdict: AmortizationVerdict | None = None
) -> str:
    rows = [_trace_header(labels)]
    for p in trace.points:
        rho_cells = ",".join(fmt(x) for x in p.rho)
        rows.append(
            ",".join(
                [
                    str(p.n_buyers),
                    rho_cells,
                    fmt(p.baseline_formed),
                    fmt(p.intervention_formed),
                    fmt(p.baseline_total),
                    fmt(p.intervention_total),
                    fmt(p.ur_marketplace),
                    fmt(_common_seller_ratio(p)),
                    fmt(p.ur_buyer_min),
                    fmt(p.ur_buyer_mean),
                ]
            )
        )
    if verdict is not None:
        rows.append("")
        rows.append("verdict,conclusive,marketplace,sellers,buyers")

        def cell(flag):
            return "NA" if flag is None else ("pass" if flag else "fail")

        rows.append(
            f"amortization,{fmt(verdict.conclusive)},{cell(verdict.marketplace)},"
            f"{cell(verdict.sellers)},{cell(verdict.buyers)}"
        )
    return "\n".join(rows) + "\n"


def render_trace_json(
    labels, trace: RatioTrace, verdict: AmortizationVerdict | None = None
) -> str:
    doc = {
        "points": [
            {
                "n_buyers": p.n_buyers,
                "rho": {label: _json_value(x) for label, x in zip(labels, p.rho)},
                "baseline_formed": p.baseline_formed,
                "intervention_formed": p.intervention_formed,
                "baseline_samples": _json_value(p.baseline_total),
                "intervention_samples": _json_value(p.intervention_total),
                "ur_marketplace": _json_value(p.ur_marketplace),
                "ur_seller": _json_value(_common_seller_ratio(p)),
                "ur_buyer_min": _json_value(p.ur_buyer_min),
                "ur_buyer_mean": _json_value(p.ur_buyer_mean),
            }
            for p in trace.points
        ]
    }
    if verdict is not None:
        doc["amortization"] = {
            "conclusive": verdict.conclusive,
            "marketplace": verdict.marketplace,
            "sellers": verdict.sellers,
            "buyers": verdict.buyers,
        }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
