"""Candidate sub-substrate networks: the components of the substrate after
filtering nodes by CPU and joining them through bandwidth-feasible paths."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

from .graph_core import SubstrateNetwork, VirtualNetwork
from .pathing import reachable_nodes


@dataclass(frozen=True)
class SubSubstrate:
    host_nodes: frozenset[int]
    total_resources: float

    @property
    def min_id(self) -> int:
        return min(self.host_nodes)

    def __contains__(self, node: int) -> bool:
        return node in self.host_nodes


def hosting_nodes(sn: SubstrateNetwork, min_cpu: Real) -> list[int]:
    """Substrate nodes able to host the smallest virtual node, ascending."""
    return [n for n in range(sn.num_nodes) if sn.cpu_fits(n, min_cpu)]


def components(sn: SubstrateNetwork, min_cpu: Real, min_bw: Real, max_hops: int) -> list[frozenset[int]]:
    """Partition of the hosting nodes under qualifying-path adjacency.

    Two hosting nodes are adjacent when a path of at most ``max_hops`` links,
    each with ``bw_residual >= min_bw``, joins them.  Relay nodes on such a
    path need not be hosting nodes themselves.
    """
    hosts = hosting_nodes(sn, min_cpu)
    is_host = set(hosts)
    assigned: set[int] = set()
    out = []
    for start in hosts:
        if start in assigned:
            continue
        comp = {start}
        assigned.add(start)
        queue = [start]
        while queue:
            u = queue.pop(0)
            for w in sorted(reachable_nodes(sn, u, max_hops, min_bw)):
                if w in is_host and w not in assigned:
                    assigned.add(w)
                    comp.add(w)
                    queue.append(w)
        out.append(frozenset(comp))
    return out


def total_available_resources(hosts: frozenset[int] | SubSubstrate, sn: SubstrateNetwork) -> float:
    """CPU residual of the hosts plus residual bandwidth of internal links,
    each internal link counted once per endpoint."""
    if isinstance(hosts, SubSubstrate):
        hosts = hosts.host_nodes
    total = 0.0
    for n in sorted(hosts):
        total += sn.cpu_residual(n)
        for w, link in sn.adj[n]:
            if w in hosts:
                total += sn.bw_residual(link)
    return total


def has_enough_resources(
    sub: SubSubstrate | frozenset[int],
    sn: SubstrateNetwork,
    vn: VirtualNetwork,
    bandwidth_test: bool = False,
) -> bool:
    """Aggregate pruning test for a candidate sub-substrate.

    Aggregate residual CPU must cover the VN's total CPU demand.  With
    ``bandwidth_test`` the residual bandwidth of links internal to the hosts
    must also cover the VN's total bandwidth demand; that test is off by
    default because co-located links and relays outside the hosts make it
    stricter than necessary.
    """
    hosts = sub.host_nodes if isinstance(sub, SubSubstrate) else sub
    if not hosts:
        return False
    cpu_have = sum((sn.cpu_residual_exact(n) for n in hosts), Fraction(0))
    if cpu_have < sum((Fraction(c) for c in vn.cpu), Fraction(0)):
        return False
    if bandwidth_test:
        bw_have = sum(
            (sn.bw_residual_exact(l) for l, (u, v) in enumerate(sn.link_ends) if u in hosts and v in hosts),
            Fraction(0),
        )
        if bw_have < sum((Fraction(b) for b in vn.bw), Fraction(0)):
            return False
    return True


def candidate_subnetworks(
    sn: SubstrateNetwork, vn: VirtualNetwork, max_hops: int, bandwidth_test: bool = False
) -> list[SubSubstrate]:
    """Sub-substrates that may host ``vn``, smallest total resources first."""
    if vn.num_nodes == 0:
        raise ValueError("virtual network is empty")
    comps = components(sn, vn.min_cpu, vn.min_bw, max_hops)
    subs = [
        SubSubstrate(c, total_available_resources(c, sn))
        for c in comps
        if has_enough_resources(c, sn, vn, bandwidth_test)
    ]
    subs.sort(key=lambda s: (s.total_resources, s.min_id))
    return subs
