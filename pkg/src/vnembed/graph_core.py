"""Substrate/virtual network types, mappings, resource bookkeeping and the
revenue/cost formulas.

Resource accounting is exact: every substrate node and link keeps the sum of
its active reservations as a ``Fraction`` and exposes a float residual cached
from it.  Releasing exactly what was allocated therefore restores the residual
bit-for-bit, regardless of interleaving.  Feasibility checks compare against
the cached float (it is correctly rounded, so only a tie can be ambiguous) and
fall back to the exact value on ties.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence


class AllocationError(ValueError):
    """An allocation would overcommit substrate resources."""


class AccountingError(RuntimeError):
    """A release does not match anything previously allocated."""


def _as_fraction(x: Real) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _check_edges(n: int, ends: Sequence[tuple[int, int]]) -> None:
    seen = set()
    for lid, (u, v) in enumerate(ends):
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"link {lid} references unknown node ({u}, {v})")
        if u == v:
            raise ValueError(f"link {lid} is a self-loop on node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"duplicate link between {key[0]} and {key[1]}")
        seen.add(key)


def _adjacency(n: int, ends: Sequence[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for lid, (u, v) in enumerate(ends):
        adj[u].append((v, lid))
        adj[v].append((u, lid))
    for row in adj:
        row.sort()
    return adj


class _Graph:
    """Shared shape for both network kinds: dense node/link ids, undirected."""

    link_ends: list[tuple[int, int]]
    adj: list[list[tuple[int, int]]]

    def _init_shape(self, n: int, ends: Iterable[tuple[int, int]]) -> None:
        self.link_ends = [(int(u), int(v)) for u, v in ends]
        _check_edges(n, self.link_ends)
        self.adj = _adjacency(n, self.link_ends)
        self._pair = {}
        for lid, (u, v) in enumerate(self.link_ends):
            self._pair[(u, v)] = lid
            self._pair[(v, u)] = lid

    @property
    def num_nodes(self) -> int:
        return len(self.adj)

    @property
    def num_links(self) -> int:
        return len(self.link_ends)

    def neighbors(self, node: int) -> list[tuple[int, int]]:
        """``(neighbor, link_id)`` pairs sorted by neighbor id."""
        return self.adj[node]

    def link_between(self, u: int, v: int) -> int | None:
        return self._pair.get((u, v))

    def other_end(self, link: int, node: int) -> int:
        u, v = self.link_ends[link]
        return v if node == u else u

    def is_connected(self) -> bool:
        if self.num_nodes == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            for w, _ in self.adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.num_nodes


class SubstrateNetwork(_Graph):
    """Physical network with CPU capacity per node and bandwidth per link.

    Residuals are mutated only through :meth:`reserve_cpu`/:meth:`reserve_bw`
    and their ``release_*`` inverses (or :func:`allocate`/:func:`release`).
    """

    def __init__(
        self,
        cpu_capacity: Sequence[Real],
        link_ends: Iterable[tuple[int, int]],
        bw_capacity: Sequence[Real],
    ):
        self.cpu_capacity = list(cpu_capacity)
        self._init_shape(len(self.cpu_capacity), link_ends)
        self.bw_capacity = list(bw_capacity)
        if len(self.bw_capacity) != len(self.link_ends):
            raise ValueError("bw_capacity length does not match the link list")
        if any(c < 0 for c in self.cpu_capacity) or any(b < 0 for b in self.bw_capacity):
            raise ValueError("capacities must be non-negative")
        self._cpu_used = [Fraction(0)] * len(self.cpu_capacity)
        self._bw_used = [Fraction(0)] * len(self.bw_capacity)
        self._cpu_res = [float(c) for c in self.cpu_capacity]
        self._bw_res = [float(b) for b in self.bw_capacity]

    @classmethod
    def from_edges(
        cls, cpu: Sequence[Real], edges: Iterable[tuple[int, int, Real]]
    ) -> "SubstrateNetwork":
        edges = list(edges)
        return cls(cpu, [(u, v) for u, v, _ in edges], [b for _, _, b in edges])

    def copy(self) -> "SubstrateNetwork":
        new = object.__new__(SubstrateNetwork)
        new.cpu_capacity = self.cpu_capacity
        new.bw_capacity = self.bw_capacity
        new.link_ends = self.link_ends
        new.adj = self.adj
        new._pair = self._pair
        new._cpu_used = list(self._cpu_used)
        new._bw_used = list(self._bw_used)
        new._cpu_res = list(self._cpu_res)
        new._bw_res = list(self._bw_res)
        return new

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubstrateNetwork):
            return NotImplemented
        return (
            self.cpu_capacity == other.cpu_capacity
            and self.bw_capacity == other.bw_capacity
            and self.link_ends == other.link_ends
            and self._cpu_used == other._cpu_used
            and self._bw_used == other._bw_used
            and self._cpu_res == other._cpu_res
            and self._bw_res == other._bw_res
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SubstrateNetwork(nodes={self.num_nodes}, links={self.num_links})"

    # residual views
    def cpu_residual(self, node: int) -> float:
        return self._cpu_res[node]

    def bw_residual(self, link: int) -> float:
        return self._bw_res[link]

    def cpu_residual_exact(self, node: int) -> Fraction:
        return _as_fraction(self.cpu_capacity[node]) - self._cpu_used[node]

    def bw_residual_exact(self, link: int) -> Fraction:
        return _as_fraction(self.bw_capacity[link]) - self._bw_used[link]

    def cpu_fits(self, node: int, demand: Real) -> bool:
        r = self._cpu_res[node]
        if isinstance(demand, (float, int)) and demand != r:
            return demand < r
        return _as_fraction(demand) <= self.cpu_residual_exact(node)

    def bw_fits(self, link: int, demand: Real) -> bool:
        r = self._bw_res[link]
        if isinstance(demand, (float, int)) and demand != r:
            return demand < r
        return _as_fraction(demand) <= self.bw_residual_exact(link)

    # low-level reservations; no feasibility checks beyond sign
    def reserve_cpu(self, node: int, demand: Real) -> None:
        self._cpu_used[node] += _as_fraction(demand)
        self._cpu_res[node] = float(self.cpu_residual_exact(node))

    def release_cpu(self, node: int, demand: Real) -> None:
        used = self._cpu_used[node] - _as_fraction(demand)
        if used < 0:
            raise AccountingError(f"release on node {node} exceeds its capacity")
        self._cpu_used[node] = used
        self._cpu_res[node] = float(self.cpu_residual_exact(node))

    def reserve_bw(self, link: int, demand: Real) -> None:
        self._bw_used[link] += _as_fraction(demand)
        self._bw_res[link] = float(self.bw_residual_exact(link))

    def release_bw(self, link: int, demand: Real) -> None:
        used = self._bw_used[link] - _as_fraction(demand)
        if used < 0:
            raise AccountingError(f"release on link {link} exceeds its capacity")
        self._bw_used[link] = used
        self._bw_res[link] = float(self.bw_residual_exact(link))

    def is_pristine(self) -> bool:
        return not any(self._cpu_used) and not any(self._bw_used)


class VirtualNetwork(_Graph):
    """Requested topology: CPU demand per node, bandwidth demand per link."""

    def __init__(
        self,
        cpu_demand: Sequence[Real],
        link_ends: Iterable[tuple[int, int]],
        bw_demand: Sequence[Real],
    ):
        self.cpu = list(cpu_demand)
        self._init_shape(len(self.cpu), link_ends)
        self.bw = list(bw_demand)
        if len(self.bw) != len(self.link_ends):
            raise ValueError("bw_demand length does not match the link list")
        if any(c <= 0 for c in self.cpu) or any(b <= 0 for b in self.bw):
            raise ValueError("virtual demands must be positive")

    @classmethod
    def from_edges(
        cls, cpu: Sequence[Real], edges: Iterable[tuple[int, int, Real]]
    ) -> "VirtualNetwork":
        edges = list(edges)
        return cls(cpu, [(u, v) for u, v, _ in edges], [b for _, _, b in edges])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VirtualNetwork):
            return NotImplemented
        return self.cpu == other.cpu and self.link_ends == other.link_ends and self.bw == other.bw

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"VirtualNetwork(nodes={self.num_nodes}, links={self.num_links})"

    @property
    def min_cpu(self) -> Real:
        return min(self.cpu)

    @property
    def min_bw(self) -> Real:
        return min(self.bw) if self.bw else 0


@dataclass
class VNRequest:
    vn: VirtualNetwork
    arrival_time: float
    lifetime: float
    id: int = 0

    def __post_init__(self) -> None:
        if self.arrival_time < 0:
            raise ValueError("arrival_time must be >= 0")
        if self.lifetime <= 0:
            raise ValueError("lifetime must be > 0")

    @property
    def departure_time(self) -> float:
        return self.arrival_time + self.lifetime


@dataclass(frozen=True)
class Path:
    """Loop-free substrate path given as its node sequence and link ids.

    A single-node path has no links; it is what co-located virtual links map to.
    """

    nodes: tuple[int, ...]
    links: tuple[int, ...] = ()

    @classmethod
    def empty(cls, node: int) -> "Path":
        return cls((node,), ())

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.nodes[0], self.nodes[-1]

    @property
    def length(self) -> int:
        return len(self.links)

    def __len__(self) -> int:
        return len(self.links)

    def reversed(self) -> "Path":
        return Path(self.nodes[::-1], self.links[::-1])

    def oriented(self, src: int) -> "Path":
        return self if self.nodes[0] == src else self.reversed()


@dataclass
class Mapping:
    node_map: dict[int, int] = field(default_factory=dict)
    link_map: dict[int, Path] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    kind: str  # missing | unknown | endpoint | structure | loop | hops | cpu | bw
    message: str


def mapping_demands(
    vn: VirtualNetwork, m: Mapping
) -> tuple[dict[int, Fraction], dict[int, Fraction]]:
    """Exact aggregated CPU demand per substrate node and bandwidth per link."""
    cpu: dict[int, Fraction] = defaultdict(Fraction)
    bw: dict[int, Fraction] = defaultdict(Fraction)
    for v, host in m.node_map.items():
        cpu[host] += _as_fraction(vn.cpu[v])
    for l, path in m.link_map.items():
        for sl in path.links:
            bw[sl] += _as_fraction(vn.bw[l])
    return cpu, bw


def validate_mapping(
    sn: SubstrateNetwork, vn: VirtualNetwork, m: Mapping, max_hops: int
) -> list[Violation]:
    """Every constraint violation of ``m`` against the current residuals.

    An empty list means the mapping can be allocated as-is.
    """
    out: list[Violation] = []
    for v in range(vn.num_nodes):
        if v not in m.node_map:
            out.append(Violation("missing", f"virtual node {v} is not mapped"))
        elif not 0 <= m.node_map[v] < sn.num_nodes:
            out.append(Violation("unknown", f"virtual node {v} mapped to unknown node {m.node_map[v]}"))
    for v in m.node_map:
        if not 0 <= v < vn.num_nodes:
            out.append(Violation("unknown", f"mapping names unknown virtual node {v}"))
    for l in m.link_map:
        if not 0 <= l < vn.num_links:
            out.append(Violation("unknown", f"mapping names unknown virtual link {l}"))
    if out:
        return out

    for l, (a, b) in enumerate(vn.link_ends):
        path = m.link_map.get(l)
        if path is None:
            out.append(Violation("missing", f"virtual link {l} is not mapped"))
            continue
        ha, hb = m.node_map[a], m.node_map[b]
        if not path.nodes or path.endpoints != (ha, hb):
            out.append(Violation("endpoint", f"link {l} path {path.nodes} does not join {ha} and {hb}"))
            continue
        if len(path.nodes) != len(path.links) + 1:
            out.append(Violation("structure", f"link {l} path has mismatched node/link lists"))
            continue
        ok = True
        for i, sl in enumerate(path.links):
            if not 0 <= sl < sn.num_links or sn.link_between(path.nodes[i], path.nodes[i + 1]) != sl:
                out.append(Violation("structure", f"link {l} path step {i} is not substrate link {sl}"))
                ok = False
                break
        if not ok:
            continue
        if len(set(path.nodes)) != len(path.nodes):
            out.append(Violation("loop", f"link {l} path {path.nodes} repeats a node"))
        if path.length > max_hops:
            out.append(Violation("hops", f"link {l} path has {path.length} hops > {max_hops}"))
    if out:
        return out

    cpu, bw = mapping_demands(vn, m)
    for node in sorted(cpu):
        if cpu[node] > sn.cpu_residual_exact(node):
            out.append(Violation("cpu", f"node {node}: demand {float(cpu[node])} > residual {sn.cpu_residual(node)}"))
    for link in sorted(bw):
        if bw[link] > sn.bw_residual_exact(link):
            out.append(Violation("bw", f"link {link}: demand {float(bw[link])} > residual {sn.bw_residual(link)}"))
    return out


def allocate(sn: SubstrateNetwork, vn: VirtualNetwork, m: Mapping) -> SubstrateNetwork:
    """Reserve the mapping's CPU and bandwidth in place.

    Raises AllocationError, leaving ``sn`` untouched, if any residual would go
    negative or the mapping is structurally broken.
    """
    bad = [v for v in validate_mapping(sn, vn, m, max_hops=sn.num_nodes) if v.kind != "hops"]
    if bad:
        raise AllocationError("; ".join(v.message for v in bad))
    for v, host in m.node_map.items():
        sn.reserve_cpu(host, vn.cpu[v])
    for l, path in m.link_map.items():
        for sl in path.links:
            sn.reserve_bw(sl, vn.bw[l])
    return sn


def release(sn: SubstrateNetwork, vn: VirtualNetwork, m: Mapping) -> SubstrateNetwork:
    """Exact inverse of :func:`allocate`.

    Raises AccountingError, leaving ``sn`` untouched, if the release would push
    any residual above its capacity (e.g. a double release).
    """
    cpu, bw = mapping_demands(vn, m)
    for node, d in cpu.items():
        if sn._cpu_used[node] < d:
            raise AccountingError(f"release on node {node} exceeds its capacity")
    for link, d in bw.items():
        if sn._bw_used[link] < d:
            raise AccountingError(f"release on link {link} exceeds its capacity")
    for v, host in m.node_map.items():
        sn.release_cpu(host, vn.cpu[v])
    for l, path in m.link_map.items():
        for sl in path.links:
            sn.release_bw(sl, vn.bw[l])
    return sn


def revenue(vn: VirtualNetwork) -> float:
    return math.fsum(list(vn.cpu) + list(vn.bw))


def cost(vn: VirtualNetwork, m: Mapping) -> float:
    return math.fsum(list(vn.cpu) + [vn.bw[l] * m.link_map[l].length for l in range(vn.num_links)])


def node_resources(g: SubstrateNetwork | VirtualNetwork, node: int) -> float:
    """CPU plus incident bandwidth: residuals for a substrate, demands for a VN."""
    if not 0 <= node < g.num_nodes:
        raise KeyError(f"unknown node {node}")
    if isinstance(g, SubstrateNetwork):
        return g._cpu_res[node] + sum(g._bw_res[l] for _, l in g.adj[node])
    return float(g.cpu[node]) + sum(float(g.bw[l]) for _, l in g.adj[node])
