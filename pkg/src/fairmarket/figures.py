"""Matplotlib rendering of report outputs, written next to the delimited files.

Figures are a convenience view of the same numbers the CSV/JSON carry; the
delimited output stays the canonical artifact. The Agg backend keeps rendering
headless and deterministic.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import MarketConfig
from .equilibrium import BaselineOutcome, InterventionOutcome
from .growth import RatioTrace
from .report import ComparisonReport

__all__ = [
    "save_baseline_figure",
    "save_intervention_figure",
    "save_comparison_figures",
    "save_sweep_figures",
]


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_baseline_figure(config: MarketConfig, outcome: BaselineOutcome, stem: Path) -> list[Path]:
    plt = _plt()
    labels = config.groups.labels
    x = np.arange(len(labels))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.bar(x, outcome.produced.samples, color="tab:blue")
    ax1.set_xticks(x, labels)
    ax1.set_ylabel("aggregate samples")
    ax1.set_title("production")
    width = 0.38
    ax2.bar(x - width / 2, outcome.thresholds, width, label="threshold", color="tab:green")
    ax2.bar(x + width / 2, config.costs.per_sample, width, label="cost", color="tab:red")
    ax2.set_xticks(x, labels)
    ax2.set_title("participation")
    ax2.legend()
    fig.tight_layout()
    path = stem.with_name(stem.name + "_production.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def save_intervention_figure(
    config: MarketConfig, outcome: InterventionOutcome, stem: Path
) -> list[Path]:
    plt = _plt()
    labels = config.groups.labels
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.bar(x, outcome.produced().samples, color="tab:purple")
    ax.set_xticks(x, labels)
    ax.set_ylabel("allocated samples")
    status = "formed" if outcome.formed else "not formed"
    ax.set_title(f"intervention production ({status})")
    fig.tight_layout()
    path = stem.with_name(stem.name + "_production.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def save_comparison_figures(report: ComparisonReport, stem: Path) -> list[Path]:
    plt = _plt()
    labels = report.config.groups.labels
    x = np.arange(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.bar(x - width / 2, report.baseline.produced.samples, width, label="baseline")
    ax.bar(x + width / 2, report.intervention.produced().samples, width, label="intervention")
    ax.set_xticks(x, labels)
    ax.set_ylabel("aggregate samples")
    ax.set_title("production by scenario")
    ax.legend()
    fig.tight_layout()
    production = stem.with_name(stem.name + "_production.png")
    fig.savefig(production, dpi=120)
    plt.close(fig)

    names, ratios = ["marketplace"], [report.ur_marketplace]
    for j, r in enumerate(report.ur_sellers):
        names.append(f"seller {j}")
        ratios.append(float(r))
    fig, ax = plt.subplots(figsize=(max(5.5, 0.8 * len(names)), 3.5))
    xs = np.arange(len(names))
    ax.bar(xs, [0.0 if np.isnan(r) else r for r in ratios], color="tab:orange")
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_xticks(xs, names, rotation=45, ha="right")
    ax.set_ylabel("intervention / baseline utility")
    ax.set_title("utility ratios")
    fig.tight_layout()
    ratios_path = stem.with_name(stem.name + "_ratios.png")
    fig.savefig(ratios_path, dpi=120)
    plt.close(fig)
    return [production, ratios_path]


def save_sweep_figures(labels, trace: RatioTrace, stem: Path) -> list[Path]:
    plt = _plt()
    ns = [p.n_buyers for p in trace.points]

    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for name, series in (
        ("marketplace", [p.ur_marketplace for p in trace.points]),
        ("seller", [None if p.ur_sellers is None else p.ur_sellers[0] for p in trace.points]),
        ("buyer (min)", [p.ur_buyer_min for p in trace.points]),
    ):
        xs = [n for n, v in zip(ns, series) if v is not None]
        ys = [v for v in series if v is not None]
        if xs:
            ax.plot(xs, ys, marker="o", label=name)
    ax.axhline(1.0, color="black", linewidth=0.8, linestyle="--")
    ax.set_xscale("log")
    ax.set_xlabel("buyers")
    ax.set_ylabel("utility ratio")
    ax.set_title("cost-of-fairness amortization")
    ax.legend()
    fig.tight_layout()
    ratios_path = stem.with_name(stem.name + "_ratios.png")
    fig.savefig(ratios_path, dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(ns, [p.baseline_total for p in trace.points], marker="o", label="baseline")
    ax.plot(ns, [p.intervention_total for p in trace.points], marker="s", label="intervention")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("buyers")
    ax.set_ylabel("total samples")
    ax.set_title("production growth")
    ax.legend()
    fig.tight_layout()
    production = stem.with_name(stem.name + "_production.png")
    fig.savefig(production, dpi=120)
    plt.close(fig)
    return [ratios_path, production]
