"""Heavy-edge-matching coarsening of virtual networks and the coarsened
embedding built on top of the BFSN recursion."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

from .bfsn import Bundle, EmbedAttempt, EmbedResult, build_embed_order, embed_recursive
from .graph_core import Mapping, Path, SubstrateNetwork, VirtualNetwork
from .subgraph_detect import candidate_subnetworks


@dataclass(frozen=True)
class SuperNode:
    id: int
    members: frozenset[int]
    cpu_demand: Fraction


@dataclass(frozen=True)
class SuperLink:
    id: int
    endpoints: tuple[int, int]
    constituents: frozenset[int]
    bw_demand: Fraction


@dataclass(frozen=True)
class CoarsenedVN:
    """Partition of a VN's nodes into super-nodes.

    Super-node ids are the smallest member id and super-link ids the smallest
    constituent id.  Demands are exact sums.
    """

    super_nodes: tuple[SuperNode, ...]
    super_links: tuple[SuperLink, ...]
    internal_links: frozenset[int]
    cpu_max: Real
    link_counts: tuple[int, ...] = ()  # working-graph links before/after each merge

    @property
    def merges(self) -> int:
        return max(len(self.link_counts) - 1, 0)

    def owner(self) -> dict[int, int]:
        """Original node id -> super-node id."""
        return {m: s.id for s in self.super_nodes for m in s.members}

    def as_virtual_network(self) -> tuple[VirtualNetwork, list[int], list[int]]:
        """Dense-id view: the VN plus the super-node and super-link id of
        each of its nodes and links."""
        node_ids = [s.id for s in self.super_nodes]
        index = {sid: i for i, sid in enumerate(node_ids)}
        vn = VirtualNetwork(
            [s.cpu_demand for s in self.super_nodes],
            [(index[a], index[b]) for a, b in (sl.endpoints for sl in self.super_links)],
            [sl.bw_demand for sl in self.super_links],
        )
        return vn, node_ids, [sl.id for sl in self.super_links]


def coarsen(vn: VirtualNetwork, cpu_max: Real, restart: bool = True) -> CoarsenedVN:
    """Repeatedly merge the endpoints of the heaviest link whose endpoint CPU
    sum stays within ``cpu_max``.

    Links are scanned in descending bandwidth (ties by smaller id); after a
    merge, parallel links collapse into one with summed bandwidth and the scan
    restarts from the top.  ``restart=False`` makes a single pass over the
    initial order instead.
    """
    if cpu_max <= 0:
        raise ValueError("cpu_max must be positive")
    cap = Fraction(cpu_max)
    owner = list(range(vn.num_nodes))
    cpu = {v: Fraction(vn.cpu[v]) for v in range(vn.num_nodes)}

    def current_links() -> dict[tuple[int, int], list]:
        agg: dict[tuple[int, int], list] = {}
        for l, (a, b) in enumerate(vn.link_ends):
            sa, sb = owner[a], owner[b]
            if sa != sb:
                entry = agg.setdefault((min(sa, sb), max(sa, sb)), [set(), Fraction(0)])
                entry[0].add(l)
                entry[1] += Fraction(vn.bw[l])
        return agg

    def by_weight(agg):
        return sorted(agg, key=lambda k: (-agg[k][1], min(agg[k][0])))

    def merge(a: int, b: int) -> None:
        keep, gone = min(a, b), max(a, b)
        for v in range(vn.num_nodes):
            if owner[v] == gone:
                owner[v] = keep
        cpu[keep] += cpu.pop(gone)

    links = current_links()
    counts = [len(links)]
    if restart:
        while True:
            for a, b in by_weight(links):
                if cpu[a] + cpu[b] <= cap:
                    merge(a, b)
                    break
            else:
                break
            links = current_links()
            counts.append(len(links))
    else:
        for a, b in by_weight(links):
            sa, sb = owner[a], owner[b]
            if sa != sb and cpu[sa] + cpu[sb] <= cap:
                merge(sa, sb)
                counts.append(len(current_links()))
        links = current_links()

    groups: dict[int, set[int]] = {}
    for v, s in enumerate(owner):
        groups.setdefault(s, set()).add(v)
    supers = tuple(SuperNode(s, frozenset(groups[s]), cpu[s]) for s in sorted(groups))
    slinks = tuple(
        SuperLink(min(cons), k, frozenset(cons), bw)
        for k, (cons, bw) in sorted(links.items(), key=lambda kv: min(kv[1][0]))
    )
    internal = frozenset(l for l, (a, b) in enumerate(vn.link_ends) if owner[a] == owner[b])
    return CoarsenedVN(supers, slinks, internal, cpu_max, tuple(counts))


def expand_mapping(coarse_map: Mapping, cvn: CoarsenedVN, vn: VirtualNetwork) -> Mapping:
    """Mapping over the original VN from one over the coarsened VN.

    ``coarse_map.node_map`` is keyed by super-node id and
    ``coarse_map.link_map`` by original (constituent) link id.
    """
    owner = cvn.owner()
    if set(owner) != set(range(vn.num_nodes)):
        raise ValueError("coarsened VN does not partition the virtual nodes")
    covered = set(cvn.internal_links).union(*(s.constituents for s in cvn.super_links))
    if covered != set(range(vn.num_links)):
        raise ValueError("coarsened VN does not cover every virtual link")
    node_map = {v: coarse_map.node_map[owner[v]] for v in range(vn.num_nodes)}
    link_map = {}
    for l, (a, b) in enumerate(vn.link_ends):
        ha, hb = node_map[a], node_map[b]
        if l in cvn.internal_links:
            link_map[l] = Path.empty(ha)
            continue
        path = coarse_map.link_map[l].oriented(ha)
        if path.endpoints != (ha, hb):
            raise ValueError(f"path for link {l} does not join its endpoints' hosts")
        link_map[l] = path
    return Mapping(node_map, link_map)


def bundles_for(cvn: CoarsenedVN, vn: VirtualNetwork) -> list[Bundle]:
    """Per super-link constituents, heaviest first (ties by id)."""
    return [
        sorted(((l, vn.bw[l]) for l in s.constituents), key=lambda t: (-t[1], t[0]))
        for s in cvn.super_links
    ]


def bfsn_hem_embed(
    vn: VirtualNetwork,
    sn: SubstrateNetwork,
    max_hops: int = 2,
    max_backtrack: float | None = None,
    *,
    count_every_delete: bool = False,
    bandwidth_test: bool = False,
    restart: bool = True,
    path_alternatives: bool = False,
) -> EmbedResult:
    """Coarsen ``vn`` per candidate sub-substrate and embed the coarse VN.

    The CPU cap is the largest residual CPU among the sub-substrate's hosts.
    ``sn`` is not modified.  Alternative link plans are off by default: for a
    super-link they range over every combination of constituent paths.
    """
    if max_backtrack is None:
        max_backtrack = 3 * vn.num_nodes
    subs = candidate_subnetworks(sn, vn, max_hops, bandwidth_test)
    working = sn.copy()
    spent = 0
    for i, sub in enumerate(subs):
        cpu_max = max(sn.cpu_residual(h) for h in sub.host_nodes)
        cvn = coarsen(vn, cpu_max, restart=restart)
        cvn_net, node_ids, _ = cvn.as_virtual_network()
        order = build_embed_order(cvn_net)
        attempt = EmbedAttempt(working)
        ok = embed_recursive(
            cvn_net, order, 0, sub, attempt, max_hops, max_backtrack,
            bundles_for(cvn, vn), count_every_delete, path_alternatives,
        )
        spent += attempt.backtrack_count
        if ok:
            coarse = Mapping({node_ids[k]: h for k, h in attempt.node_map.items()}, attempt.link_map)
            return EmbedResult(expand_mapping(coarse, cvn, vn), i + 1, spent)
    return EmbedResult(None, len(subs), spent)
