"""Online discrete-event simulation of VNR arrivals and departures, and the
long-term revenue, acceptance and revenue/cost metrics."""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .bfsn import EmbedResult, bfsn_embed
from .graph_core import Mapping, SubstrateNetwork, VNRequest, allocate, cost, release, revenue
from .hem import bfsn_hem_embed
from .reference import GREEDY_LABEL, greedy_embed

Embedder = Callable[..., EmbedResult]

ALGORITHMS: dict[str, Embedder] = {
    "bfsn": bfsn_embed,
    "bfsn-hem": bfsn_hem_embed,
    "greedy": greedy_embed,
}

ALGORITHM_LABELS = {"bfsn": "BFSN", "bfsn-hem": "BFSN-HEM", "greedy": GREEDY_LABEL}

DECISION_HEADER = ["id", "arrival", "lifetime", "decision", "revenue", "cost", "n_subnets_tried", "backtracks_used"]
METRICS_HEADER = ["time", "accepted", "rejected", "acceptance_ratio", "avg_revenue", "avg_cost", "revenue_cost_ratio"]


@dataclass
class Decision:
    id: int
    arrival: float
    lifetime: float
    accepted: bool
    revenue: float
    cost: float
    n_subnets_tried: int = 0
    backtracks_used: int = 0

    @property
    def departure(self) -> float:
        return self.arrival + self.lifetime


@dataclass
class Sample:
    time: int
    accepted: int
    rejected: int
    acceptance_ratio: float | None
    avg_revenue: float | None
    avg_cost: float | None
    revenue_cost_ratio: float | None


@dataclass
class SimResult:
    timeline: list[Sample]
    decisions: list[Decision]
    mappings: dict[int, Mapping]
    final_sn: SubstrateNetwork
    algorithm: str
    max_hops: int
    horizon: int
    accrual: str = "discrete"

    @property
    def final(self) -> Sample:
        return self.timeline[-1]


# -- metrics ----------------------------------------------------------------


def active_units(arrival: float, lifetime: float, horizon: float, accrual: str = "discrete") -> float:
    """Time units in ``[0, horizon]`` during which a request is active.

    Discrete accrual counts integers ``t`` with ``arrival <= t < arrival +
    lifetime``; continuous accrual measures the overlap length.
    """
    end = arrival + lifetime
    if accrual == "continuous":
        return max(0.0, min(end, horizon) - max(arrival, 0.0))
    first = max(math.ceil(arrival), 0)
    last = min(math.floor(horizon), math.ceil(end) - 1)
    return float(max(0, last - first + 1))


def _time_sums(log: Iterable[Decision], horizon: float, accrual: str) -> tuple[float, float]:
    rev, cst = [], []
    for d in log:
        if d.accepted:
            units = active_units(d.arrival, d.lifetime, horizon, accrual)
            rev.append(d.revenue * units)
            cst.append(d.cost * units)
    return math.fsum(rev), math.fsum(cst)


def long_term_avg_revenue(log: Iterable[Decision], horizon: float, accrual: str = "discrete") -> float:
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    return _time_sums(log, horizon, accrual)[0] / horizon


def long_term_avg_cost(log: Iterable[Decision], horizon: float, accrual: str = "discrete") -> float:
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    return _time_sums(log, horizon, accrual)[1] / horizon


def acceptance_ratio(log: Iterable[Decision]) -> float | None:
    log = list(log)
    if not log:
        return None
    return sum(d.accepted for d in log) / len(log)


def revenue_cost_ratio(log: Iterable[Decision], horizon: float, accrual: str = "discrete") -> float | None:
    rev, cst = _time_sums(log, horizon, accrual)
    if cst == 0:
        return None
    return rev / cst


def sample_times(horizon: int, sample_every: int) -> list[int]:
    times = list(range(0, horizon, sample_every))
    if not times or times[-1] != horizon:
        times.append(horizon)
    return times


def timeline_from_log(
    log: Sequence[Decision], horizon: int, sample_every: int = 100, accrual: str = "discrete"
) -> list[Sample]:
    """Metric samples every ``sample_every`` units and at ``horizon``,
    computed from the decision log alone."""
    out = []
    for t in sample_times(horizon, sample_every):
        seen = [d for d in log if d.arrival <= t]
        acc = sum(d.accepted for d in seen)
        if t > 0:
            rev, cst = _time_sums(seen, t, accrual)
            avg_rev, avg_cost = rev / t, cst / t
            rc = rev / cst if cst else None
        else:
            avg_rev = avg_cost = rc = None
        out.append(Sample(t, acc, len(seen) - acc, acceptance_ratio(seen), avg_rev, avg_cost, rc))
    return out


# -- engine -----------------------------------------------------------------

_DEPART, _ARRIVE = 0, 1


def run_simulation(
    sn: SubstrateNetwork,
    vnrs: Sequence[VNRequest],
    algorithm: str = "bfsn",
    max_hops: int = 2,
    backtrack_factor: float = 3,
    horizon: int = 30000,
    sample_every: int = 100,
    accrual: str = "discrete",
    drain: bool = True,
    progress: Callable[[int, int], None] | None = None,
) -> SimResult:
    """Replay ``vnrs`` against a private copy of ``sn``.

    Arrivals after ``horizon`` are ignored.  Departures at the same instant
    as an arrival are processed first.  With ``drain`` the remaining
    departures are processed after the horizon so the final substrate is
    back to its initial state.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")
    embed = ALGORITHMS[algorithm]
    state = sn.copy()
    events: list[tuple[float, int, int]] = []
    for pos, r in enumerate(vnrs):
        if r.arrival_time <= horizon:
            events.append((r.arrival_time, _ARRIVE, pos))
    heapq.heapify(events)
    by_pos = list(vnrs)
    decisions: list[Decision] = []
    mappings: dict[int, Mapping] = {}
    while events:
        t, kind, pos = heapq.heappop(events)
        r = by_pos[pos]
        if kind == _DEPART:
            if t > horizon and not drain:
                break
            release(state, r.vn, mappings[r.id])
            continue
        res = embed(r.vn, state, max_hops, backtrack_factor * r.vn.num_nodes)
        rev = revenue(r.vn)
        if res.accepted:
            allocate(state, r.vn, res.mapping)
            mappings[r.id] = res.mapping
            heapq.heappush(events, (r.departure_time, _DEPART, pos))
            c = cost(r.vn, res.mapping)
        else:
            c = 0.0
        decisions.append(Decision(r.id, r.arrival_time, r.lifetime, res.accepted, rev, c, res.subnets_tried, res.backtracks_used))
        if progress is not None:
            progress(len(decisions), len(vnrs))
    timeline = timeline_from_log(decisions, horizon, sample_every, accrual)
    return SimResult(timeline, decisions, mappings, state, algorithm, max_hops, horizon, accrual)


# -- CSV ----------------------------------------------------------------------


def _num(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def decisions_csv(log: Iterable[Decision]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DECISION_HEADER)
    for d in log:
        w.writerow([d.id, _num(d.arrival), _num(d.lifetime), "accept" if d.accepted else "reject",
                    _num(d.revenue), _num(d.cost), d.n_subnets_tried, d.backtracks_used])
    return buf.getvalue()


def metrics_csv(timeline: Iterable[Sample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for s in timeline:
        w.writerow([s.time, s.accepted, s.rejected, _num(s.acceptance_ratio), _num(s.avg_revenue),
                    _num(s.avg_cost), _num(s.revenue_cost_ratio)])
    return buf.getvalue()


def parse_decisions(text: str) -> list[Decision]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != DECISION_HEADER:
        raise ValueError(f"decision log header must be {','.join(DECISION_HEADER)}")
    out = []
    for i, row in enumerate(rows[1:], 2):
        try:
            id_, arr, life, dec, rev, cst, tried, bt = row
            if dec not in ("accept", "reject"):
                raise ValueError(dec)
            out.append(Decision(int(id_), float(arr), float(life), dec == "accept", float(rev), float(cst), int(tried), int(bt)))
        except ValueError:
            raise ValueError(f"decision log line {i}: malformed row {row!r}") from None
    return out


def parse_metrics(text: str) -> list[Sample]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != METRICS_HEADER:
        raise ValueError(f"metrics header must be {','.join(METRICS_HEADER)}")
    opt = lambda s: None if s == "" else float(s)  # noqa: E731
    out = []
    for i, row in enumerate(rows[1:], 2):
        try:
            t, a, r, ar, rev, cst, rc = row
            out.append(Sample(int(t), int(a), int(r), opt(ar), opt(rev), opt(cst), opt(rc)))
        except ValueError:
            raise ValueError(f"metrics line {i}: malformed row {row!r}") from None
    return out
