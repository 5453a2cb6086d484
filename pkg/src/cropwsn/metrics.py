"""Per-run metrics, replication aggregates and the points table."""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

log = logging.getLogger(__name__)

# polarity: True when larger is better
METRIC_POLARITY = {"pdr": True, "delay_ms": False, "energy_kj": False}


def end_to_end_delay(records) -> float | None:
    """Mean ``delivered_at - created_at`` over delivered packets, in ms.

    Returns None when nothing was delivered.
    """
    gaps = [r.delivered_at - r.created_at for r in records if r.delivered_at is not None]
    if not gaps:
        return None
    if min(gaps) < 0:
        raise ValueError("a packet was delivered before it was created")
    return 1000.0 * math.fsum(gaps) / len(gaps)


def packet_delivery_ratio(records, flows=None) -> float | None:
    """Unweighted mean over flows of delivered / offered.

    ``flows`` lists flow ids that should be counted; a listed flow that
    offered nothing is skipped with a warning.  Packets still in flight
    count as undelivered.
    """
    offered: Counter = Counter()
    delivered: Counter = Counter()
    for r in records:
        offered[r.flow_id] += 1
        if r.delivered_at is not None:
            delivered[r.flow_id] += 1
    ids = sorted(offered) if flows is None else [getattr(f, "flow_id", f) for f in flows]
    ratios = []
    for fid in ids:
        if offered[fid] == 0:
            log.warning("flow %s offered no packets; excluded from PDR", fid)
            continue
        ratios.append(delivered[fid] / offered[fid])
    if not ratios:
        return None
    return math.fsum(ratios) / len(ratios)


def aggregate_ratio(records) -> float | None:
    """Plain delivered / offered over all packets, for comparison only."""
    n = d = 0
    for r in records:
        n += 1
        d += r.delivered_at is not None
    return d / n if n else None


def energy_consumption(states, sink: int | None = None):
    """``(total_kj, average_kj, sensors_average_kj)`` from per-node energy states.

    Consumption is ``initial - residual`` per node, so nodes with different
    budgets are handled.  The plain average divides by every node including
    the sink; the third value leaves the sink out.
    """
    spent = [s.initial_j - s.residual_j for s in states]
    if not spent:
        return 0.0, 0.0, 0.0
    total = math.fsum(spent) / 1000.0
    avg = total / len(spent)
    others = [e for i, e in enumerate(spent) if i != sink]
    sensors = math.fsum(others) / 1000.0 / len(others) if others else 0.0
    return total, avg, sensors


@dataclass
class RunReport:
    protocol: str
    scenario: int
    seed: int
    pdr: float | None
    delay_ms: float | None
    total_energy_kj: float
    avg_energy_kj: float
    avg_energy_sensors_kj: float
    offered: int = 0
    delivered: int = 0
    drops: dict = field(default_factory=dict)
    control: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.pdr is not None and not 0.0 <= self.pdr <= 1.0:
            raise ValueError(f"pdr out of range: {self.pdr}")
        if self.delay_ms is not None and self.delay_ms < 0:
            raise ValueError("negative delay")
        if self.total_energy_kj < 0:
            raise ValueError("negative energy")


@dataclass
class Interval:
    mean: float | None
    stddev: float | None
    halfwidth: float | None
    n_runs: int
    # runs excluded because the metric was undefined there
    missing: int = 0


def t_interval(values, confidence: float = 0.95) -> Interval:
    xs = np.asarray([v for v in values if v is not None], dtype=float)
    missing = len(values) - len(xs)
    n = len(xs)
    if n == 0:
        return Interval(None, None, None, 0, missing)
    mean = float(xs.mean())
    if n < 2:
        return Interval(mean, None, None, 1, missing)
    s = float(xs.std(ddof=1))
    half = float(stats.t.ppf(0.5 + confidence / 2, n - 1)) * s / math.sqrt(n)
    return Interval(mean, s, half, n, missing)


@dataclass
class AggregateReport:
    protocol: str
    scenario: int
    pdr: Interval
    delay_ms: Interval
    avg_energy_kj: Interval
    avg_energy_sensors_kj: Interval
    total_energy_kj: Interval

    def metric(self, name: str) -> Interval:
        return {"pdr": self.pdr, "delay_ms": self.delay_ms,
                "energy_kj": self.avg_energy_kj}[name]


def aggregate(reports, confidence: float = 0.95) -> list[AggregateReport]:
    """Group runs by (protocol, scenario) and attach t-based confidence intervals."""
    cells = defaultdict(list)
    for r in reports:
        cells[(r.protocol, r.scenario)].append(r)
    out = []
    for (proto, scen), rs in sorted(cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        out.append(AggregateReport(
            proto, scen,
            t_interval([r.pdr for r in rs], confidence),
            t_interval([r.delay_ms for r in rs], confidence),
            t_interval([r.avg_energy_kj for r in rs], confidence),
            t_interval([r.avg_energy_sensors_kj for r in rs], confidence),
            t_interval([r.total_energy_kj for r in rs], confidence),
        ))
    return out


def rank_scores(means: dict, higher_better: bool = True) -> dict:
    """Score each key from ``len(means)`` (best) down to 1; ties share the higher score."""
    n = len(means)
    out = {}
    for k, v in means.items():
        better = sum(1 for w in means.values() if (w > v if higher_better else w < v))
        out[k] = n - better
    return out


def score_summary(table: dict, polarity: dict | None = None):
    """Points per protocol.

    ``table`` maps metric name to ``{protocol: value}``; values are means or
    any ordinal score where the polarity says which direction is better.
    Returns ``(per_metric_scores, totals)``.
    """
    polarity = polarity or METRIC_POLARITY
    per_metric = {}
    totals: dict = defaultdict(int)
    for metric, means in table.items():
        if metric not in polarity:
            raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(polarity)}")
        sc = rank_scores(means, polarity[metric])
        per_metric[metric] = sc
        for k, v in sc.items():
            totals[k] += v
    return per_metric, dict(totals)


def score_from_aggregates(aggs, polarity: dict | None = None):
    """Points table computed from aggregate means pooled across scenarios."""
    pooled: dict = defaultdict(lambda: defaultdict(list))
    for a in aggs:
        for m in METRIC_POLARITY:
            iv = a.metric(m)
            if iv.mean is not None:
                pooled[m][a.protocol].append(iv.mean)
    table = {m: {p: float(np.mean(v)) for p, v in by.items()} for m, by in pooled.items()}
    return score_summary(table, polarity)


def format_summary(per_metric, totals, protocols) -> str:
    metrics = list(per_metric)
    width = max(len(p) for p in protocols) + 2
    lines = ["metric".ljust(12) + "".join(p.rjust(width) for p in protocols)]
    for m in metrics:
        lines.append(m.ljust(12) + "".join(str(per_metric[m].get(p, "-")).rjust(width)
                                           for p in protocols))
    lines.append("total".ljust(12) + "".join(str(totals.get(p, "-")).rjust(width)
                                            for p in protocols))
    return "\n".join(lines) + "\n"
