"""Best-fit sub-substrate embedding with bounded backtracking.

The recursion here is shared with the coarsened variant in :mod:`vnembed.hem`:
every virtual link is treated as a *bundle* of ``(key, bw)`` constituents, each
routed on its own substrate path.  A plain virtual link is a bundle of one,
keyed by its own id.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Iterator, Sequence

from .graph_core import Mapping, Path, SubstrateNetwork, VirtualNetwork, node_resources
from .pathing import cheapest_feasible_path, feasible_paths, reachable_nodes, reachable_paths
from .subgraph_detect import SubSubstrate, candidate_subnetworks

Bundle = list[tuple[int, Real]]


@dataclass
class EmbedOrder:
    sequence: list[int]
    tree_parent: dict[int, int] = field(default_factory=dict)


@dataclass
class EmbedAttempt:
    """Recursion state: a private substrate carrying tentative reservations."""

    working_sn: SubstrateNetwork
    node_map: dict[int, int] = field(default_factory=dict)
    link_map: dict[int, Path] = field(default_factory=dict)
    backtrack_count: int = 0

    @property
    def partial_mapping(self) -> Mapping:
        return Mapping(dict(self.node_map), dict(self.link_map))


@dataclass
class EmbedResult:
    mapping: Mapping | None
    subnets_tried: int = 0
    backtracks_used: int = 0

    @property
    def accepted(self) -> bool:
        return self.mapping is not None


Candidate = tuple[int, dict[int, Path]]


def build_embed_order(vn: VirtualNetwork) -> EmbedOrder:
    """BFS order from the most resource-hungry virtual node, each level sorted
    by descending resources (ties by id)."""
    if vn.num_nodes == 0:
        raise ValueError("virtual network is empty")
    if not vn.is_connected():
        raise ValueError("virtual network is not connected")
    res = [node_resources(vn, v) for v in range(vn.num_nodes)]
    key = lambda v: (-res[v], v)  # noqa: E731
    root = min(range(vn.num_nodes), key=key)
    sequence = [root]
    parent: dict[int, int] = {}
    seen = {root}
    level = [root]
    while level:
        nxt = []
        for u in level:
            for w, _ in vn.adj[u]:
                if w not in seen:
                    seen.add(w)
                    parent[w] = u
                    nxt.append(w)
        nxt.sort(key=key)
        sequence.extend(nxt)
        level = nxt
    return EmbedOrder(sequence, parent)


def plain_bundles(vn: VirtualNetwork) -> list[Bundle]:
    return [[(l, vn.bw[l])] for l in range(vn.num_links)]


def _plan_links(
    sn: SubstrateNetwork,
    host: int,
    node_map: dict[int, int],
    trees: list[tuple[int, int, dict[int, Path]]],
    bundles: Sequence[Bundle],
    max_hops: int,
) -> dict[int, Path] | None:
    """Route every constituent between ``host`` and the mapped neighbors.

    Constituents are committed one at a time in descending bandwidth so that
    links shared between them cannot be jointly overcommitted.
    """
    items = []
    for u, l, tree in trees:
        for key, bw in bundles[l]:
            items.append((-bw, key, node_map[u], l, tree))

    # Common case: one constituent per link and no substrate link shared
    # between the BFS-tree paths, so those paths are jointly feasible.
    if all(len(bundles[l]) == 1 for _, l, _ in trees):
        used: set[int] = set()
        plan = {}
        for _, key, src, _, tree in items:
            path = tree[host]
            if used.intersection(path.links):
                break
            used.update(path.links)
            plan[key] = path
        else:
            return plan

    items.sort(key=lambda it: (it[0], it[1]))
    plan = {}
    reserved: list[tuple[int, Real]] = []
    try:
        for neg_bw, key, src, l, tree in items:
            bw = -neg_bw
            path = None
            if src == host:
                path = Path.empty(host)
            elif bw == bundles[l][0][1] and all(sn.bw_fits(sl, bw) for sl in tree[host].links):
                # still the cheapest: reservations only shrink the feasible set
                path = tree[host]
            else:
                path = cheapest_feasible_path(sn, src, host, max_hops, bw)
                if path is None:
                    return None
            for sl in path.links:
                sn.reserve_bw(sl, bw)
                reserved.append((sl, bw))
            plan[key] = path
        return plan
    finally:
        for sl, bw in reversed(reserved):
            sn.release_bw(sl, bw)


def candidate_hosts(
    vn: VirtualNetwork,
    order: EmbedOrder,
    idx: int,
    sub: SubSubstrate,
    attempt: EmbedAttempt,
    max_hops: int,
    bundles: Sequence[Bundle] | None = None,
) -> list[Candidate]:
    """Ordered ``(host, link_plan)`` candidates for ``order.sequence[idx]``.

    The root's candidates are sorted by descending available resources; the
    others by ascending cost of the links back to already-mapped neighbors,
    with co-location on a neighbor's host allowed at zero link cost.
    """
    if bundles is None:
        bundles = plain_bundles(vn)
    sn = attempt.working_sn
    v = order.sequence[idx]
    demand = vn.cpu[v]

    if idx == 0:
        hosts = [h for h in sorted(sub.host_nodes) if sn.cpu_fits(h, demand)]
        hosts.sort(key=lambda h: (-node_resources(sn, h), h))
        return [(h, {}) for h in hosts]

    trees = []
    common: set[int] | None = None
    for u, l in vn.adj[v]:
        if u not in attempt.node_map:
            continue
        tree = reachable_paths(sn, attempt.node_map[u], max_hops, bundles[l][0][1])
        trees.append((u, l, tree))
        common = set(tree) if common is None else common & tree.keys()
        if not common:
            return []
    if common is None:
        raise ValueError(f"virtual node {v} has no mapped neighbor; order is not a BFS order")

    bw_of = {key: bw for _, l, _ in trees for key, bw in bundles[l]}
    scored = []
    for h in sorted(common):
        if h not in sub.host_nodes or not sn.cpu_fits(h, demand):
            continue
        plan = _plan_links(sn, h, attempt.node_map, trees, bundles, max_hops)
        if plan is None:
            continue
        c = math.fsum(bw_of[key] * p.length for key, p in plan.items())
        scored.append((c, h, plan))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [(h, plan) for _, h, plan in scored]


def alternative_candidates(
    vn: VirtualNetwork,
    order: EmbedOrder,
    idx: int,
    sub: SubSubstrate,
    attempt: EmbedAttempt,
    max_hops: int,
    bundles: Sequence[Bundle],
    primary: Sequence[Candidate],
) -> Iterator[Candidate]:
    """Link plans other than the ones in ``primary``, generated lazily.

    Hosts are visited in the order of ``primary`` and then by id.  For each
    host every jointly feasible combination of per-constituent paths is
    produced in lexicographic order of the path choices.  Nothing is reserved
    in the working substrate between yields, so the caller may add and delete
    a candidate before asking for the next one.
    """
    if idx == 0:
        return
    sn = attempt.working_sn
    v = order.sequence[idx]
    mapped = [(u, l) for u, l in vn.adj[v] if u in attempt.node_map]
    common: set[int] | None = None
    for u, l in mapped:
        reach = reachable_nodes(sn, attempt.node_map[u], max_hops, min(bw for _, bw in bundles[l]))
        common = reach if common is None else common & reach
    hosts = [h for h, _ in primary]
    seen = set(hosts)
    hosts += [h for h in sorted(common or ()) if h not in seen]
    first = dict(primary)
    items = sorted(
        ((bw, key, attempt.node_map[u]) for u, l in mapped for key, bw in bundles[l]),
        key=lambda it: (-it[0], it[1]),
    )
    for h in hosts:
        if h not in sub.host_nodes or not sn.cpu_fits(h, vn.cpu[v]):
            continue
        options = [feasible_paths(sn, src, h, max_hops, bw) for bw, _, src in items]
        extra: dict[int, Fraction] = {}
        chosen: list[Path] = []

        def walk(i: int) -> Iterator[dict[int, Path]]:
            if i == len(items):
                yield {key: p for (_, key, _), p in zip(items, chosen)}
                return
            bw = Fraction(items[i][0])
            for p in options[i]:
                if any(sn.bw_residual_exact(sl) < extra.get(sl, 0) + bw for sl in p.links):
                    continue
                for sl in p.links:
                    extra[sl] = extra.get(sl, 0) + bw
                chosen.append(p)
                yield from walk(i + 1)
                chosen.pop()
                for sl in p.links:
                    extra[sl] -= bw

        for plan in walk(0):
            if plan != first.get(h):
                yield h, plan


def _add(attempt: EmbedAttempt, v: int, host: int, plan: dict[int, Path], demand: Real, bw_of: dict[int, Real]) -> None:
    sn = attempt.working_sn
    sn.reserve_cpu(host, demand)
    attempt.node_map[v] = host
    for key, path in plan.items():
        for sl in path.links:
            sn.reserve_bw(sl, bw_of[key])
        attempt.link_map[key] = path


def _delete(attempt: EmbedAttempt, v: int, host: int, plan: dict[int, Path], demand: Real, bw_of: dict[int, Real]) -> None:
    sn = attempt.working_sn
    for key, path in plan.items():
        for sl in path.links:
            sn.release_bw(sl, bw_of[key])
        del attempt.link_map[key]
    sn.release_cpu(host, demand)
    del attempt.node_map[v]


def embed_recursive(
    vn: VirtualNetwork,
    order: EmbedOrder,
    idx: int,
    sub: SubSubstrate,
    attempt: EmbedAttempt,
    max_hops: int,
    max_backtrack: float,
    bundles: Sequence[Bundle] | None = None,
    count_every_delete: bool = False,
    path_alternatives: bool = True,
) -> bool:
    """Map ``order.sequence[idx:]``; on failure the attempt is left exactly as
    it was on entry.

    ``backtrack_count`` grows each time a node runs out of candidates; once it
    exceeds ``max_backtrack`` the search unwinds.  ``count_every_delete``
    counts every undo instead.  With ``path_alternatives`` a node whose
    cheapest-plan candidates all fail goes on to other link plans before it
    counts as exhausted.
    """
    if idx == len(order.sequence):
        return True
    if bundles is None:
        bundles = plain_bundles(vn)
    bw_of = {key: bw for b in bundles for key, bw in b}
    v = order.sequence[idx]
    candidates = candidate_hosts(vn, order, idx, sub, attempt, max_hops, bundles)
    if path_alternatives:
        alternatives = alternative_candidates(vn, order, idx, sub, attempt, max_hops, bundles, candidates)
        candidates = itertools.chain(candidates, alternatives)
    for host, plan in candidates:
        _add(attempt, v, host, plan, vn.cpu[v], bw_of)
        if embed_recursive(
            vn, order, idx + 1, sub, attempt, max_hops, max_backtrack, bundles, count_every_delete, path_alternatives
        ):
            return True
        _delete(attempt, v, host, plan, vn.cpu[v], bw_of)
        if count_every_delete:
            attempt.backtrack_count += 1
        if attempt.backtrack_count > max_backtrack:
            return False
    if not count_every_delete:
        attempt.backtrack_count += 1
    return False


def search_subnetworks(
    vn: VirtualNetwork,
    sn: SubstrateNetwork,
    subs: Sequence[SubSubstrate],
    max_hops: int,
    max_backtrack: float,
    count_every_delete: bool = False,
    path_alternatives: bool = True,
) -> tuple[EmbedAttempt | None, int, int]:
    """Try each sub-substrate in order with a fresh budget.

    Returns the successful attempt (or None), the number of sub-substrates
    tried and the backtracks spent across all of them.
    """
    order = build_embed_order(vn)
    bundles = plain_bundles(vn)
    working = sn.copy()
    spent = 0
    for i, sub in enumerate(subs):
        attempt = EmbedAttempt(working)
        ok = embed_recursive(
            vn, order, 0, sub, attempt, max_hops, max_backtrack, bundles, count_every_delete, path_alternatives
        )
        spent += attempt.backtrack_count
        if ok:
            return attempt, i + 1, spent
    return None, len(subs), spent


def orient(vn: VirtualNetwork, node_map: dict[int, int], link_map: dict[int, Path]) -> Mapping:
    """Mapping with every path running from its link's first endpoint."""
    out = {}
    for l, (a, _) in enumerate(vn.link_ends):
        out[l] = link_map[l].oriented(node_map[a])
    return Mapping(dict(node_map), out)


def bfsn_embed(
    vn: VirtualNetwork,
    sn: SubstrateNetwork,
    max_hops: int = 2,
    max_backtrack: float | None = None,
    *,
    count_every_delete: bool = False,
    bandwidth_test: bool = False,
    path_alternatives: bool = True,
) -> EmbedResult:
    """Embed ``vn`` on the first sub-substrate (smallest resources first) that
    admits it.  ``sn`` is not modified; allocate the returned mapping to commit.

    ``max_backtrack`` defaults to three times the number of virtual nodes.
    ``path_alternatives=False`` restricts backtracking to hosts, each host
    carrying only its cheapest link plan.
    """
    if max_backtrack is None:
        max_backtrack = 3 * vn.num_nodes
    subs = candidate_subnetworks(sn, vn, max_hops, bandwidth_test)
    attempt, tried, spent = search_subnetworks(
        vn, sn, subs, max_hops, max_backtrack, count_every_delete, path_alternatives
    )
    if attempt is None:
        return EmbedResult(None, tried, spent)
    return EmbedResult(orient(vn, attempt.node_map, attempt.link_map), tried, spent)
