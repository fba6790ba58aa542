"""Bounded-hop, bandwidth-feasible path queries over substrate residuals.

Breadth-first search with neighbors visited in ascending id order assigns
every node the lexicographically smallest node sequence among its
minimum-hop paths, which is the tie-break used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Real

from .graph_core import Path, SubstrateNetwork


@dataclass(frozen=True)
class ReachabilityEntry:
    node: int
    best_path: Path


def _bfs_parents(
    sn: SubstrateNetwork, root: int, max_hops: int, min_bw: Real, target: int | None = None
) -> dict[int, tuple[int, int] | None]:
    parent: dict[int, tuple[int, int] | None] = {root: None}
    if target == root:
        return parent
    frontier = [root]
    res = sn._bw_res
    fast = isinstance(min_bw, (float, int))
    for _ in range(max_hops):
        nxt = []
        for u in frontier:
            for w, link in sn.adj[u]:
                if w in parent:
                    continue
                b = res[link]
                if fast and min_bw != b:
                    if min_bw > b:
                        continue
                elif not sn.bw_fits(link, min_bw):
                    continue
                parent[w] = (u, link)
                if w == target:
                    return parent
                nxt.append(w)
        if not nxt:
            break
        frontier = nxt
    return parent


def _trace(parent: dict[int, tuple[int, int] | None], node: int) -> Path:
    nodes = [node]
    links = []
    step = parent[node]
    while step is not None:
        u, link = step
        nodes.append(u)
        links.append(link)
        step = parent[u]
    return Path(tuple(reversed(nodes)), tuple(reversed(links)))


def reachable_paths(sn: SubstrateNetwork, root: int, max_hops: int, min_bw: Real) -> dict[int, Path]:
    """Map of every node reachable from ``root`` to its best feasible path."""
    if not 0 <= root < sn.num_nodes:
        raise KeyError(f"unknown root {root}")
    parent = _bfs_parents(sn, root, max_hops, min_bw)
    return {n: _trace(parent, n) for n in parent}


def reachable_nodes(sn: SubstrateNetwork, root: int, max_hops: int, min_bw: Real) -> set[int]:
    return set(_bfs_parents(sn, root, max_hops, min_bw))


def bfs_reachable(sn: SubstrateNetwork, root: int, max_hops: int, min_bw: Real) -> list[ReachabilityEntry]:
    """Nodes reachable from ``root`` within ``max_hops`` over links with
    ``bw_residual >= min_bw``, in BFS discovery order (root first)."""
    if max_hops < 0 or min_bw < 0:
        raise ValueError("max_hops and min_bw must be non-negative")
    return [ReachabilityEntry(n, p) for n, p in reachable_paths(sn, root, max_hops, min_bw).items()]


def cheapest_feasible_path(
    sn: SubstrateNetwork, src: int, dst: int, max_hops: int, bw: Real
) -> Path | None:
    """Minimum-hop path from ``src`` to ``dst`` whose every link can carry
    ``bw``; ``None`` when no such path of at most ``max_hops`` links exists."""
    if src == dst:
        return Path.empty(src)
    parent = _bfs_parents(sn, src, max_hops, bw, target=dst)
    if dst not in parent:
        return None
    return _trace(parent, dst)


def feasible_paths(sn: SubstrateNetwork, src: int, dst: int, max_hops: int, bw: Real) -> list[Path]:
    """All loop-free paths of at most ``max_hops`` links whose every link can
    carry ``bw``, shortest first, then by node sequence."""
    if src == dst:
        return [Path.empty(src)]
    out = []
    nodes, links = [src], []

    def walk(u: int) -> None:
        for w, link in sn.adj[u]:
            if w in nodes or not sn.bw_fits(link, bw):
                continue
            if w == dst:
                out.append(Path(tuple(nodes) + (w,), tuple(links) + (link,)))
            elif len(links) + 1 < max_hops:
                nodes.append(w)
                links.append(link)
                walk(w)
                nodes.pop()
                links.pop()

    if max_hops >= 1:
        walk(src)
    out.sort(key=lambda p: (p.length, p.nodes))
    return out


def path_exists(sn: SubstrateNetwork, src: int, dst: int, max_hops: int, bw: Real) -> bool:
    return cheapest_feasible_path(sn, src, dst, max_hops, bw) is not None
