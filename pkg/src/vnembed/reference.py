"""Exhaustive oracle for tiny instances and a greedy two-stage baseline.

The oracle enumerates paths and accounts for resources on its own so that it
stays independent of :mod:`vnembed.pathing` and the BFSN machinery it checks.
The greedy baseline is a generic node-then-link heuristic; it is *not*
RW-MaxMatch or RW-BFS.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Literal

from .bfsn import EmbedResult
from .graph_core import Mapping, Path, SubstrateNetwork, VirtualNetwork, node_resources
from .pathing import cheapest_feasible_path

GREEDY_LABEL = "greedy (not RW-MaxMatch)"

MAX_ORACLE_VNODES = 6
MAX_ORACLE_SNODES = 10


class InstanceTooLarge(ValueError):
    pass


def all_simple_paths(sn: SubstrateNetwork, src: int, dst: int, max_hops: int) -> list[Path]:
    """Every loop-free path from ``src`` to ``dst`` with at most ``max_hops``
    links, in lexicographic node-sequence order."""
    if src == dst:
        return [Path.empty(src)]
    out = []

    def walk(nodes: list[int], links: list[int]) -> None:
        u = nodes[-1]
        for w, l in sn.adj[u]:
            if w in nodes:
                continue
            if w == dst:
                out.append(Path(tuple(nodes + [w]), tuple(links + [l])))
            elif len(links) + 1 < max_hops:
                walk(nodes + [w], links + [l])

    if max_hops >= 1:
        walk([src], [])
    out.sort(key=lambda p: (p.length, p.nodes))
    return out


def oracle_embed(
    vn: VirtualNetwork,
    sn: SubstrateNetwork,
    max_hops: int,
    objective: Literal["feasibility", "min_cost"] = "feasibility",
    hosts: Iterable[int] | None = None,
) -> Mapping | None:
    """Brute-force embedding over all host assignments (co-location allowed)
    and all per-link path choices, under joint residual constraints.

    ``hosts`` restricts where virtual nodes may land.  Returns the first
    feasible mapping in lexicographic assignment order, or a cheapest one.
    """
    if vn.num_nodes > MAX_ORACLE_VNODES or sn.num_nodes > MAX_ORACLE_SNODES:
        raise InstanceTooLarge(f"oracle limited to {MAX_ORACLE_VNODES} virtual / {MAX_ORACLE_SNODES} substrate nodes")
    allowed = sorted(set(range(sn.num_nodes)) if hosts is None else set(hosts))
    cpu_left = [sn.cpu_residual_exact(n) for n in range(sn.num_nodes)]
    bw_left = [sn.bw_residual_exact(l) for l in range(sn.num_links)]
    vcpu = [Fraction(c) for c in vn.cpu]
    vbw = [Fraction(b) for b in vn.bw]

    # links become decidable once both endpoints are placed
    ready: list[list[int]] = [[] for _ in range(vn.num_nodes)]
    for l, (a, b) in enumerate(vn.link_ends):
        ready[max(a, b)].append(l)

    paths_cache: dict[tuple[int, int], list[Path]] = {}
    assign: dict[int, int] = {}
    routes: dict[int, Path] = {}
    best: list = [None, math.inf]

    def paths(a: int, b: int) -> list[Path]:
        if (a, b) not in paths_cache:
            paths_cache[(a, b)] = all_simple_paths(sn, a, b, max_hops)
        return paths_cache[(a, b)]

    def route(v: int, k: int, partial_cost: Fraction) -> bool:
        if k == len(ready[v]):
            return place(v + 1, partial_cost)
        l = ready[v][k]
        a, b = vn.link_ends[l]
        for p in paths(assign[a], assign[b]):
            if any(bw_left[sl] < vbw[l] for sl in p.links):
                continue
            for sl in p.links:
                bw_left[sl] -= vbw[l]
            routes[l] = p
            done = route(v, k + 1, partial_cost + vbw[l] * p.length)
            del routes[l]
            for sl in p.links:
                bw_left[sl] += vbw[l]
            if done:
                return True
        return False

    def place(v: int, partial_cost: Fraction) -> bool:
        if partial_cost >= best[1]:
            return False
        if v == vn.num_nodes:
            best[0] = Mapping(dict(assign), dict(routes))
            best[1] = partial_cost
            return objective == "feasibility"
        for h in allowed:
            if cpu_left[h] < vcpu[v]:
                continue
            cpu_left[h] -= vcpu[v]
            assign[v] = h
            done = route(v, 0, partial_cost)
            del assign[v]
            cpu_left[h] += vcpu[v]
            if done:
                return True
        return False

    place(0, sum(vcpu, Fraction(0)))
    if best[0] is None:
        return None
    m = best[0]
    return Mapping(m.node_map, {l: m.link_map[l].oriented(m.node_map[a]) for l, (a, _) in enumerate(vn.link_ends)})


def greedy_embed(vn: VirtualNetwork, sn: SubstrateNetwork, max_hops: int = 2, max_backtrack: float | None = None) -> EmbedResult:
    """Two uncoordinated stages: nodes by descending CPU onto the richest
    free substrate nodes (one virtual node per substrate node), then each
    link on its cheapest feasible path.  ``sn`` is not modified.

    ``max_backtrack`` is accepted for a uniform signature and ignored.
    """
    work = sn.copy()
    node_map: dict[int, int] = {}
    used: set[int] = set()
    for v in sorted(range(vn.num_nodes), key=lambda v: (-vn.cpu[v], v)):
        free = [h for h in range(work.num_nodes) if h not in used and work.cpu_fits(h, vn.cpu[v])]
        if not free:
            return EmbedResult(None, 1, 0)
        h = min(free, key=lambda h: (-node_resources(work, h), h))
        work.reserve_cpu(h, vn.cpu[v])
        node_map[v] = h
        used.add(h)
    link_map: dict[int, Path] = {}
    for l, (a, b) in enumerate(vn.link_ends):
        p = cheapest_feasible_path(work, node_map[a], node_map[b], max_hops, vn.bw[l])
        if p is None:
            return EmbedResult(None, 1, 0)
        for sl in p.links:
            work.reserve_bw(sl, vn.bw[l])
        link_map[l] = p
    return EmbedResult(Mapping(node_map, link_map), 1, 0)
