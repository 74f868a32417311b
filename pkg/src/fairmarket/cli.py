"""Command-line interface: solve, compare, sweep, verify.

Exit codes: 0 success (including non-formation, which is a model outcome),
1 verification-suite failure, 2 usage or configuration error, 3 I/O failure.
Identical (config, seed) pairs produce byte-identical delimited output.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import figures, output
from .config import ConfigError, RunConfig, parse_run_config
from .core import TargetVector
from .equilibrium import solve_baseline, solve_intervention
from .growth import amortization_report, sweep
from .report import compare_scenarios
from .suites import CLI_SUITES, DEFAULT_TRIALS

__all__ = ["main"]


def _load(path: str) -> RunConfig:
    text = Path(path).read_text()
    return parse_run_config(text)


def _resolve_target(args, rc: RunConfig) -> TargetVector | None:
    k = rc.market.groups.count
    if getattr(args, "target", None):
        raw = args.target.strip()
        if raw.lower() == "uniform":
            return TargetVector.uniform(k)
        weights = np.zeros(k)
        for token in raw.replace(",", " ").split():
            if "=" not in token:
                raise ConfigError(f"--target entries look like group=weight, got {token!r}")
            label, value = token.split("=", 1)
            weights[rc.market.groups.index(label)] = float(value)
        return TargetVector(weights)
    return rc.target


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _figure_stem(args) -> Path | None:
    if not getattr(args, "figures", False):
        return None
    if not args.output:
        raise ConfigError("--figures needs --output (figures are written next to it)")
    out = Path(args.output)
    return out.with_suffix("") if out.suffix else out


def cmd_solve(args) -> int:
    rc = _load(args.config)
    fmt = args.format or rc.out_format
    out_path = args.output or rc.output
    if args.scenario == "baseline":
        outcome = solve_baseline(rc.market)
        text = (
            output.render_baseline_csv(rc.market, outcome)
            if fmt == "csv"
            else output.render_baseline_json(rc.market, outcome)
        )
        _emit(text, out_path)
        stem = _figure_stem(args)
        if stem is not None:
            figures.save_baseline_figure(rc.market, outcome, stem)
    else:
        target = _resolve_target(args, rc)
        if target is None:
            raise ConfigError(
                "intervention scenario needs a target (config [intervention] or --target)"
            )
        outcome = solve_intervention(rc.market, target)
        text = (
            output.render_intervention_csv(rc.market, outcome)
            if fmt == "csv"
            else output.render_intervention_json(rc.market, outcome)
        )
        _emit(text, out_path)
        stem = _figure_stem(args)
        if stem is not None:
            figures.save_intervention_figure(rc.market, outcome, stem)
    return 0


def cmd_compare(args) -> int:
    rc = _load(args.config)
    target = _resolve_target(args, rc)
    if target is None:
        raise ConfigError("compare needs an [intervention] section (or --target)")
    report = compare_scenarios(rc.market, target)
    fmt = args.format or rc.out_format
    text = (
        output.render_comparison_csv(report)
        if fmt == "csv"
        else output.render_comparison_json(report)
    )
    _emit(text, args.output or rc.output)
    stem = _figure_stem(args)
    if stem is not None:
        figures.save_comparison_figures(report, stem)
    return 0


def cmd_sweep(args) -> int:
    rc = _load(args.config)
    if rc.growth is None:
        raise ConfigError("sweep needs a [growth] section")
    target = _resolve_target(args, rc)
    if target is None:
        raise ConfigError("sweep needs an [intervention] section (or --target)")
    probes = rc.growth.probes
    if args.probes:
        probes = tuple(int(tok) for tok in args.probes.replace(",", " ").split())
    trace = sweep(rc.growth.sequence, rc.stub(), target, probes)
    verdict = amortization_report(trace, args.tolerance)
    labels = rc.market.groups.labels
    fmt = args.format or rc.out_format
    text = (
        output.render_trace_csv(labels, trace, verdict)
        if fmt == "csv"
        else output.render_trace_json(labels, trace, verdict)
    )
    _emit(text, args.output or rc.output)
    stem = _figure_stem(args)
    if stem is not None:
        figures.save_sweep_figures(labels, trace, stem)
    return 0


def cmd_verify(args) -> int:
    names = list(CLI_SUITES) if args.suite == "all" else [args.suite]
    all_passed = True
    for name in names:
        trials = args.trials if args.trials is not None else DEFAULT_TRIALS[name]
        result = CLI_SUITES[name](seed=args.seed, trials=trials)
        print(result.summary())
        if not result.passed:
            all_passed = False
            print(f"first counterexample for {name}:", file=sys.stderr)
            print(result.failures[0], file=sys.stderr)
    return 0 if all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairmarket",
        description="Equilibria of a stylized data market, with and without a "
        "demographic-balance intervention.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p) -> None:
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), help="override the config's format")
        p.add_argument(
            "--figures",
            action="store_true",
            help="also render figures next to --output",
        )

    p = sub.add_parser("solve", help="solve one scenario of one market")
    p.add_argument("config", help="market configuration file")
    p.add_argument(
        "--scenario", choices=("baseline", "intervention"), default="baseline"
    )
    p.add_argument("--target", help="intervention target: 'uniform' or g1=0.6 g2=0.4")
    add_output_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="paired baseline/intervention report")
    p.add_argument("config")
    p.add_argument("--target", help="override the config's intervention target")
    add_output_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="growth sweep with utility-ratio trace")
    p.add_argument("config")
    p.add_argument("--target", help="override the config's intervention target")
    p.add_argument("--probes", help="override probe sizes, e.g. '100 1000 10000'")
    p.add_argument(
        "--tolerance", type=float, default=0.01, help="amortization verdict tolerance"
    )
    add_output_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run a randomized verification suite")
    p.add_argument(
        "--suite", choices=tuple(CLI_SUITES) + ("all",), default="all"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, help="override the suite's trial count")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: cannot read {exc.filename}: not found", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
