"""Run-configuration file format: a flat, sectioned, diff-friendly key-value text.

Example::

    [market]
    groups = g1 g2
    sellers = 2
    ceiling = 1.0
    alpha = 1.0
    beta = 1.0
    kappa = g1=1 g2=1

    [buyers]
    buyer = 1 0          # one explicit buyer, values in group order
    bulk = g2 4 1.0      # 4 buyers valuing only g2 at 1.0

    [intervention]
    target = uniform     # or: target = g1=0.6 g2=0.4

    [growth]
    prefix = 0 2         # explicit leading buyers, one per line
    arrival = 2 0        # arriving buyers cycle these rows ...
    arrival = 1 0
    # rates = g1=0.5:1.0 g2=0:0   # ... or arrive at per-group rates
    probes = 100 1000 10000 100000 1000000

    [run]
    seed = 7
    format = csv

Keys may repeat where rows accumulate (``buyer``, ``bulk``, ``prefix``,
``arrival``); ``#`` starts a comment anywhere. Parsing then serializing is
semantically lossless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BuyerPanel,
    CostStructure,
    GroupSet,
    LearningCurve,
    MarketConfig,
    TargetVector,
)
from .growth import DEFAULT_PROBES, BuyerSequence, CycleArrivals, MarketStub, RateArrivals

__all__ = ["ConfigError", "GrowthSpec", "RunConfig", "parse_run_config", "serialize_run_config"]

_SECTIONS = {"market", "buyers", "intervention", "growth", "run"}
_KEYS = {
    "market": {"groups", "sellers", "ceiling", "alpha", "beta", "kappa"},
    "buyers": {"buyer", "bulk"},
    "intervention": {"target"},
    "growth": {"prefix", "arrival", "rates", "probes"},
    "run": {"seed", "format", "output"},
}
_REPEATABLE = {"buyer", "bulk", "prefix", "arrival"}


class ConfigError(ValueError):
    """Malformed run configuration; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True, eq=False)
class GrowthSpec:
    """Buyer sequence plus the probe ladder of a growth sweep."""

    sequence: BuyerSequence
    probes: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Everything one CLI invocation needs."""

    market: MarketConfig
    target: TargetVector | None
    growth: GrowthSpec | None
    seed: int
    out_format: str
    output: str | None

    def stub(self) -> MarketStub:
        return MarketStub(
            groups=self.market.groups,
            curve=self.market.curve,
            sellers=self.market.sellers,
            costs=self.market.costs,
        )


def _entries(text: str) -> list[tuple[int, str, str, str]]:
    """(line, section, key, value) tuples in file order."""
    out: list[tuple[int, str, str, str]] = []
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ConfigError(
                    f"unknown section [{section}]; expected one of {sorted(_SECTIONS)}", lineno
                )
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigError("key outside any [section]", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS[section]:
            raise ConfigError(
                f"unknown key {key!r} in [{section}]; expected one of {sorted(_KEYS[section])}",
                lineno,
            )
        out.append((lineno, section, key, value))
    return out


def _float(value: str, what: str, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{what} must be a number, got {value!r}", line) from None


def _int(value: str, what: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{what} must be an integer, got {value!r}", line) from None


def _floats(value: str, what: str, line: int) -> list[float]:
    return [_float(tok, what, line) for tok in value.split()]


def _pairs(value: str, what: str, line: int) -> dict[str, str]:
    out: dict[str, str] = {}
    for token in value.split():
        if "=" not in token:
            raise ConfigError(f"{what} entries look like group=value, got {token!r}", line)
        label, raw = token.split("=", 1)
        if label in out:
            raise ConfigError(f"{what}: duplicate entry for group {label!r}", line)
        out[label] = raw
    return out


def _row(value: str, groups: GroupSet, what: str, line: int) -> list[float]:
    row = _floats(value, what, line)
    if len(row) != groups.count:
        raise ConfigError(
            f"{what} needs {groups.count} values (one per group), got {len(row)}", line
        )
    return row


def parse_run_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; raises :class:`ConfigError` on defects."""
    entries = _entries(text)
    seen: dict[tuple[str, str], int] = {}
    for lineno, section, key, _ in entries:
        if key in _REPEATABLE:
            continue
        if (section, key) in seen:
            raise ConfigError(
                f"duplicate key {key!r} in [{section}] (first at line {seen[(section, key)]})",
                lineno,
            )
        seen[(section, key)] = lineno

    def pick(section: str, key: str) -> tuple[int, str] | None:
        for lineno, sec, k, value in entries:
            if sec == section and k == key:
                return lineno, value
        return None

    def pick_all(section: str, key: str) -> list[tuple[int, str]]:
        return [(lineno, value) for lineno, sec, k, value in entries if sec == section and k == key]

    # --- market ---
    got = pick("market", "groups")
    if got is None:
        raise ConfigError("missing [market] groups")
    groups_line, groups_raw = got
    labels = groups_raw.split()
    if not labels:
        raise ConfigError("groups needs at least one label", groups_line)
    try:
        groups = GroupSet(tuple(labels))
    except ValueError as exc:
        raise ConfigError(str(exc), groups_line) from None

    curve_params = {}
    for name in ("ceiling", "alpha", "beta"):
        got = pick("market", name)
        if got is None:
            raise ConfigError(f"missing [market] {name}")
        curve_params[name] = _float(got[1], name, got[0])
    try:
        curve = LearningCurve(**curve_params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    got = pick("market", "sellers")
    if got is None:
        raise ConfigError("missing [market] sellers")
    sellers = _int(got[1], "sellers", got[0])
    if sellers < 1:
        raise ConfigError("sellers must be >= 1", got[0])

    got = pick("market", "kappa")
    if got is None:
        raise ConfigError("missing [market] kappa")
    kappa_line, kappa_raw = got
    kappa_pairs = _pairs(kappa_raw, "kappa", kappa_line)
    for label in kappa_pairs:
        if label not in groups.labels:
            raise ConfigError(f"kappa names unknown group {label!r}", kappa_line)
    kappa = []
    for label in groups.labels:
        if label not in kappa_pairs:
            raise ConfigError(f"kappa: missing value for group {label!r}", kappa_line)
        kappa.append(_float(kappa_pairs[label], f"kappa[{label}]", kappa_line))
    try:
        costs = CostStructure(np.array(kappa))
    except ValueError as exc:
        raise ConfigError(str(exc), kappa_line) from None

    # --- buyers ---
    rows: list[list[float]] = []
    for lineno, section, key, value in entries:
        if section != "buyers":
            continue
        if key == "buyer":
            rows.append(_row(value, groups, "buyer", lineno))
        else:  # bulk = <group> <count> <value>
            tokens = value.split()
            if len(tokens) != 3:
                raise ConfigError("bulk looks like: bulk = <group> <count> <value>", lineno)
            g = groups.index(tokens[0]) if tokens[0] in groups.labels else None
            if g is None:
                raise ConfigError(f"bulk names unknown group {tokens[0]!r}", lineno)
            count = _int(tokens[1], "bulk count", lineno)
            if count < 0:
                raise ConfigError("bulk count must be >= 0", lineno)
            val = _float(tokens[2], "bulk value", lineno)
            row = [0.0] * groups.count
            row[g] = val
            rows.extend([list(row) for _ in range(count)])
    buyers = BuyerPanel(np.array(rows) if rows else np.zeros((0, groups.count)))
    try:
        market = MarketConfig(groups=groups, curve=curve, sellers=sellers, costs=costs, buyers=buyers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    # --- intervention ---
    target: TargetVector | None = None
    got = pick("intervention", "target")
    if got is not None:
        target_line, target_raw = got
        if target_raw.strip().lower() == "uniform":
            target = TargetVector.uniform(groups.count)
        else:
            weight_pairs = _pairs(target_raw, "target", target_line)
            for label in weight_pairs:
                if label not in groups.labels:
                    raise ConfigError(f"target names unknown group {label!r}", target_line)
            weights = np.zeros(groups.count)
            for label, raw in weight_pairs.items():
                weights[groups.index(label)] = _float(raw, f"target[{label}]", target_line)
            try:
                target = TargetVector(weights)
            except ValueError as exc:
                raise ConfigError(str(exc), target_line) from None

    # --- growth ---
    growth: GrowthSpec | None = None
    growth_entries = [e for e in entries if e[1] == "growth"]
    if growth_entries:
        prefix_rows = [_row(v, groups, "prefix", ln) for ln, v in pick_all("growth", "prefix")]
        arrival_rows = [_row(v, groups, "arrival", ln) for ln, v in pick_all("growth", "arrival")]
        rates_got = pick("growth", "rates")
        if arrival_rows and rates_got is not None:
            raise ConfigError("give either arrival rows or rates, not both", rates_got[0])
        arrivals: CycleArrivals | RateArrivals | None = None
        if arrival_rows:
            arrivals = CycleArrivals(np.array(arrival_rows))
        elif rates_got is not None:
            rates_line, rates_raw = rates_got
            rate_pairs = _pairs(rates_raw, "rates", rates_line)
            rates = np.zeros(groups.count)
            values = np.zeros(groups.count)
            for label, raw in rate_pairs.items():
                if label not in groups.labels:
                    raise ConfigError(f"rates names unknown group {label!r}", rates_line)
                if ":" not in raw:
                    raise ConfigError("rates entries look like group=rate:value", rates_line)
                rate_raw, value_raw = raw.split(":", 1)
                g = groups.index(label)
                rates[g] = _float(rate_raw, f"rates[{label}]", rates_line)
                values[g] = _float(value_raw, f"rates value[{label}]", rates_line)
            try:
                arrivals = RateArrivals(rates, values)
            except ValueError as exc:
                raise ConfigError(str(exc), rates_line) from None
        probes_got = pick("growth", "probes")
        if probes_got is None:
            probes = DEFAULT_PROBES
        else:
            probes_line, probes_raw = probes_got
            probes = tuple(_int(tok, "probe", probes_line) for tok in probes_raw.split())
            if not probes or any(b <= a for a, b in zip(probes, probes[1:])):
                raise ConfigError("probes must be strictly increasing", probes_line)
        try:
            sequence = BuyerSequence(
                np.array(prefix_rows) if prefix_rows else np.zeros((0, groups.count)),
                arrivals,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        growth = GrowthSpec(sequence=sequence, probes=probes)

    # --- run ---
    seed = 0
    got = pick("run", "seed")
    if got is not None:
        seed = _int(got[1], "seed", got[0])
    out_format = "csv"
    got = pick("run", "format")
    if got is not None:
        out_format = got[1].strip().lower()
        if out_format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {out_format!r}", got[0])
    output = None
    got = pick("run", "output")
    if got is not None:
        output = got[1].strip()

    return RunConfig(
        market=market, target=target, growth=growth, seed=seed, out_format=out_format, output=output
    )


def _num(x: float) -> str:
    return f"{float(x):.12g}"


def serialize_run_config(rc: RunConfig) -> str:
    """Render a configuration back to its text form (semantically lossless)."""
    market = rc.market
    lines = ["[market]"]
    lines.append("groups = " + " ".join(market.groups.labels))
    lines.append(f"sellers = {market.sellers}")
    lines.append(f"ceiling = {_num(market.curve.ceiling)}")
    lines.append(f"alpha = {_num(market.curve.alpha)}")
    lines.append(f"beta = {_num(market.curve.beta)}")
    lines.append(
        "kappa = "
        + " ".join(
            f"{label}={_num(k)}" for label, k in zip(market.groups.labels, market.costs.per_sample)
        )
    )
    if market.buyers.size:
        lines.append("")
        lines.append("[buyers]")
        for row in market.buyers.values:
            lines.append("buyer = " + " ".join(_num(v) for v in row))
    if rc.target is not None:
        lines.append("")
        lines.append("[intervention]")
        lines.append(
            "target = "
            + " ".join(
                f"{label}={_num(w)}" for label, w in zip(market.groups.labels, rc.target.weights)
            )
        )
    if rc.growth is not None:
        lines.append("")
        lines.append("[growth]")
        for row in rc.growth.sequence.prefix:
            lines.append("prefix = " + " ".join(_num(v) for v in row))
        arrivals = rc.growth.sequence.arrivals
        if isinstance(arrivals, CycleArrivals):
            for row in arrivals.rows:
                lines.append("arrival = " + " ".join(_num(v) for v in row))
        elif isinstance(arrivals, RateArrivals):
            lines.append(
                "rates = "
                + " ".join(
                    f"{label}={_num(r)}:{_num(v)}"
                    for label, r, v in zip(market.groups.labels, arrivals.rates, arrivals.values)
                )
            )
        lines.append("probes = " + " ".join(str(n) for n in rc.growth.probes))
    lines.append("")
    lines.append("[run]")
    lines.append(f"seed = {rc.seed}")
    lines.append(f"format = {rc.out_format}")
    if rc.output is not None:
        lines.append(f"output = {rc.output}")
    return "\n".join(lines) + "\n"
