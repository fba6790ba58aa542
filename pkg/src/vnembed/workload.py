"""Waxman substrate/VN generation, VNR streams, and BRITE-dialect files.

All randomness flows from one ``numpy.random.Generator`` seeded from the
config, so ``(seed, config)`` determines every generated byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath

import networkx as nx
import numpy as np

from .graph_core import SubstrateNetwork, VirtualNetwork, VNRequest

SUBSTRATE_FILE = "substrate.brite"
MANIFEST_FILE = "manifest.txt"
CONFIG_FILE = "config.json"
VNR_DIR = "vnr"


@dataclass(frozen=True)
class ServerProfile:
    name: str
    cpu_capacity: float


DEFAULT_PROFILES = (
    ServerProfile("HP ProLiant ML110 G4", 2 * 1860.0),
    ServerProfile("HP ProLiant ML110 G5", 2 * 2660.0),
)


@dataclass
class WorkloadConfig:
    seed: int = 0
    sn_nodes: int = 200
    sn_links: int = 1000
    sn_bw_range: tuple[float, float] = (50.0, 100.0)
    server_profiles: tuple[ServerProfile, ...] = DEFAULT_PROFILES
    vn_count: int = 3000
    vn_size_range: tuple[int, int] = (2, 20)
    vn_connectivity: float = 0.5
    vn_cpu_choices: tuple[float, ...] = (2500.0, 2000.0, 1000.0, 500.0)
    vn_bw_range: tuple[float, float] = (1.0, 50.0)
    arrival_rate: float = 0.1
    lifetime_range: tuple[float, float] = (300.0, 700.0)
    waxman_alpha: float = 0.5
    waxman_beta: float = 0.2
    plane_size: float = 1000.0

    def __post_init__(self) -> None:
        for name in ("sn_bw_range", "vn_size_range", "vn_bw_range", "lifetime_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if self.sn_nodes < 1:
            raise ValueError("sn_nodes must be >= 1")
        if self.sn_links < self.sn_nodes - 1:
            raise ValueError(f"{self.sn_links} links cannot connect {self.sn_nodes} nodes")
        if self.sn_links > self.sn_nodes * (self.sn_nodes - 1) // 2:
            raise ValueError(f"{self.sn_links} links exceed the simple-graph maximum for {self.sn_nodes} nodes")
        if self.vn_size_range[0] < 1:
            raise ValueError("virtual networks need at least one node")
        if not 0 < self.vn_connectivity <= 1:
            raise ValueError("vn_connectivity must lie in (0, 1]")
        if self.arrival_rate <= 0:
            raise ValueError("arrival_rate must be positive")
        if self.lifetime_range[0] <= 0:
            raise ValueError("lifetimes must be positive")
        if not self.server_profiles or not self.vn_cpu_choices:
            raise ValueError("server_profiles and vn_cpu_choices must be nonempty")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "WorkloadConfig":
        d = json.loads(text)
        d["server_profiles"] = tuple(ServerProfile(**p) for p in d["server_profiles"])
        for k in ("sn_bw_range", "vn_size_range", "vn_cpu_choices", "vn_bw_range", "lifetime_range"):
            d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class Topology:
    """Undirected graph with node coordinates, before resources are attached."""

    coords: list[tuple[float, float]]
    edges: list[tuple[int, int]] = field(default_factory=list)


def _distances(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(-1))


def _bridge_components(g: nx.Graph, dist: np.ndarray) -> None:
    """Join components with their shortest inter-component edges."""
    while not nx.is_connected(g):
        comps = [sorted(c) for c in nx.connected_components(g)]
        comps.sort()
        label = {}
        for i, c in enumerate(comps):
            for n in c:
                label[n] = i
        best = None
        for u in comps[0]:
            for v in g.nodes:
                if label[v] != 0:
                    cand = (dist[u, v], min(u, v), max(u, v))
                    if best is None or cand < best:
                        best = cand
        g.add_edge(best[1], best[2])


def waxman_topology(
    rng: np.random.Generator,
    n: int,
    alpha: float,
    beta: float,
    plane: float,
    target_links: int | None = None,
) -> Topology:
    """Waxman graph, connected by shortest bridging edges.

    With ``target_links`` set, edges are then added by Waxman rejection
    sampling or removed at random (never disconnecting) to hit it exactly.
    """
    coords = rng.uniform(0.0, plane, size=(n, 2))
    g = nx.Graph()
    g.add_nodes_from(range(n))
    if n > 1:
        dist = _distances(coords)
        L = dist.max() or 1.0
        prob = alpha * np.exp(-dist / (beta * L))
        draws = rng.random((n, n))
        iu, ju = np.triu_indices(n, k=1)
        for u, v in zip(iu, ju):
            if draws[u, v] < prob[u, v]:
                g.add_edge(int(u), int(v))
        _bridge_components(g, dist)
        if target_links is not None:
            _adjust_links(rng, g, prob, target_links)
    return Topology([(float(x), float(y)) for x, y in coords], sorted(tuple(sorted(e)) for e in g.edges))


def _adjust_links(rng: np.random.Generator, g: nx.Graph, prob: np.ndarray, target: int) -> None:
    n = g.number_of_nodes()
    if target > n * (n - 1) // 2:
        raise ValueError("link target exceeds the simple-graph maximum")
    while g.number_of_edges() < target:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v and not g.has_edge(u, v) and rng.random() < prob[u, v]:
            g.add_edge(u, v)
    if g.number_of_edges() > target:
        # a bridge stays a bridge as other edges go, so one pass suffices
        edges = sorted(tuple(sorted(e)) for e in g.edges)
        for k in rng.permutation(len(edges)):
            if g.number_of_edges() == target:
                break
            u, v = edges[int(k)]
            g.remove_edge(u, v)
            if not nx.has_path(g, u, v):
                g.add_edge(u, v)


def generate_substrate(cfg: WorkloadConfig, rng: np.random.Generator | None = None) -> tuple[SubstrateNetwork, Topology]:
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    topo = waxman_topology(rng, cfg.sn_nodes, cfg.waxman_alpha, cfg.waxman_beta, cfg.plane_size, cfg.sn_links)
    lo, hi = cfg.sn_bw_range
    bw = [float(b) for b in rng.uniform(lo, hi, size=len(topo.edges))]
    caps = [cfg.server_profiles[int(i)].cpu_capacity for i in rng.integers(0, len(cfg.server_profiles), size=cfg.sn_nodes)]
    return SubstrateNetwork(caps, topo.edges, bw), topo


def _waxman_alpha_for_density(weights: np.ndarray, density: float) -> float:
    """Alpha such that the expected fraction of accepted pairs equals
    ``density`` when acceptance is ``min(1, alpha * w)``."""
    target = density * len(weights)
    if target >= len(weights):
        return math.inf
    lo, hi = 0.0, 1.0
    while np.minimum(1.0, hi * weights).sum() < target:
        hi *= 2
    for _ in range(60):
        mid = (lo + hi) / 2
        if np.minimum(1.0, mid * weights).sum() < target:
            lo = mid
        else:
            hi = mid
    return hi


def generate_vn(rng: np.random.Generator, cfg: WorkloadConfig) -> tuple[VirtualNetwork, Topology]:
    n = int(rng.integers(cfg.vn_size_range[0], cfg.vn_size_range[1] + 1))
    coords = rng.uniform(0.0, cfg.plane_size, size=(n, 2))
    g = nx.Graph()
    g.add_nodes_from(range(n))
    if n > 1:
        dist = _distances(coords)
        L = dist.max() or 1.0
        iu, ju = np.triu_indices(n, k=1)
        w = np.exp(-dist[iu, ju] / (cfg.waxman_beta * L))
        alpha = _waxman_alpha_for_density(w, cfg.vn_connectivity)
        draws = rng.random(len(w))
        for k in range(len(w)):
            if draws[k] < min(1.0, alpha * w[k]):
                g.add_edge(int(iu[k]), int(ju[k]))
        _bridge_components(g, dist)
    edges = sorted(tuple(sorted(e)) for e in g.edges)
    cpu = [float(cfg.vn_cpu_choices[int(i)]) for i in rng.integers(0, len(cfg.vn_cpu_choices), size=n)]
    lo, hi = cfg.vn_bw_range
    bw = [float(b) for b in rng.uniform(lo, hi, size=len(edges))]
    topo = Topology([(float(x), float(y)) for x, y in coords], edges)
    return VirtualNetwork(cpu, edges, bw), topo


def generate_vnr_stream(cfg: WorkloadConfig, rng: np.random.Generator | None = None) -> tuple[list[VNRequest], list[Topology]]:
    """``cfg.vn_count`` requests with Poisson arrivals, sorted by arrival."""
    if rng is None:
        rng = np.random.default_rng([cfg.seed, 1])
    t = 0.0
    reqs, topos = [], []
    for i in range(cfg.vn_count):
        t += float(rng.exponential(1.0 / cfg.arrival_rate))
        life = float(rng.uniform(*cfg.lifetime_range))
        vn, topo = generate_vn(rng, cfg)
        reqs.append(VNRequest(vn, t, life, i))
        topos.append(topo)
    return reqs, topos


# -- BRITE dialect ----------------------------------------------------------


class BriteFormatError(ValueError):
    pass


@dataclass
class BriteFile:
    network: SubstrateNetwork | VirtualNetwork
    coords: list[tuple[float, float]]
    arrival: float | None = None
    lifetime: float | None = None


def _fmt(x: float) -> str:
    return repr(float(x))


def write_brite(
    g: SubstrateNetwork | VirtualNetwork,
    path: str | FsPath,
    coords: list[tuple[float, float]] | None = None,
    arrival: float | None = None,
    lifetime: float | None = None,
) -> None:
    """Write ``g`` in the BRITE dialect; capacities for a substrate, demands
    for a virtual network.  ``cpu`` is the node lines' trailing field."""
    if coords is None:
        coords = [(0.0, 0.0)] * g.num_nodes
    if isinstance(g, SubstrateNetwork):
        cpu, bw = g.cpu_capacity, g.bw_capacity
    else:
        cpu, bw = g.cpu, g.bw
    lines = [f"Topology: ( {g.num_nodes} Nodes, {g.num_links} Edges )"]
    if arrival is not None:
        lines.append(f"# arrival {_fmt(arrival)}")
    if lifetime is not None:
        lines.append(f"# lifetime {_fmt(lifetime)}")
    lines.append("")
    lines.append(f"Nodes: ( {g.num_nodes} )")
    for n in range(g.num_nodes):
        deg = len(g.adj[n])
        x, y = coords[n]
        lines.append(f"{n} {_fmt(x)} {_fmt(y)} {deg} {deg} -1 RT_NODE {_fmt(cpu[n])}")
    lines.append("")
    lines.append(f"Edges: ( {g.num_links} )")
    for l, (u, v) in enumerate(g.link_ends):
        (x1, y1), (x2, y2) = coords[u], coords[v]
        length = math.hypot(x1 - x2, y1 - y2)
        lines.append(f"{l} {u} {v} {_fmt(length)} 0.0 {_fmt(bw[l])} -1 -1 E_RT")
    FsPath(path).write_text("\n".join(lines) + "\n")


def read_brite(path: str | FsPath, kind: str | None = None) -> BriteFile:
    """Parse a file written by :func:`write_brite`.

    ``kind`` is ``"substrate"`` or ``"virtual"``; by default a file carrying
    arrival/lifetime headers is read as a virtual network.
    """
    path = FsPath(path)
    text = path.read_text().splitlines()

    def err(lineno: int, msg: str) -> BriteFormatError:
        return BriteFormatError(f"{path}:{lineno}: {msg}")

    arrival = lifetime = None
    nodes: dict[int, tuple[float, float, float]] = {}
    edges: dict[int, tuple[int, int, float]] = {}
    section = None
    expected = {"Nodes": None, "Edges": None}
    for lineno, raw in enumerate(text, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("Topology:"):
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            try:
                if parts and parts[0] == "arrival":
                    arrival = float(parts[1])
                elif parts and parts[0] == "lifetime":
                    lifetime = float(parts[1])
            except (IndexError, ValueError):
                raise err(lineno, f"bad header comment {line!r}") from None
            continue
        if line.startswith("Nodes:") or line.startswith("Edges:"):
            section = line.split(":")[0]
            try:
                expected[section] = int(line.split("(")[1].split(")")[0])
            except (IndexError, ValueError):
                raise err(lineno, f"bad section header {line!r}") from None
            continue
        f = line.split()
        if section == "Nodes":
            if len(f) < 8:
                raise err(lineno, "node line lacks the cpu field" if len(f) == 7 else f"malformed node line {line!r}")
            try:
                nid, x, y, cpu = int(f[0]), float(f[1]), float(f[2]), float(f[7])
            except ValueError:
                raise err(lineno, f"malformed node line {line!r}") from None
            if nid in nodes:
                raise err(lineno, f"duplicate node id {nid}")
            nodes[nid] = (x, y, cpu)
        elif section == "Edges":
            if len(f) < 9:
                raise err(lineno, f"malformed edge line {line!r}")
            try:
                eid, u, v, bw = int(f[0]), int(f[1]), int(f[2]), float(f[5])
            except ValueError:
                raise err(lineno, f"malformed edge line {line!r}") from None
            if eid in edges:
                raise err(lineno, f"duplicate edge id {eid}")
            edges[eid] = (u, v, bw)
        else:
            raise err(lineno, f"unexpected line outside a section: {line!r}")

    if sorted(nodes) != list(range(len(nodes))) or sorted(edges) != list(range(len(edges))):
        raise BriteFormatError(f"{path}: node and edge ids must be dense from 0")
    if expected["Nodes"] not in (None, len(nodes)) or expected["Edges"] not in (None, len(edges)):
        raise BriteFormatError(f"{path}: section counts do not match their contents")
    if kind is None:
        kind = "virtual" if arrival is not None or lifetime is not None else "substrate"
    cpu = [nodes[i][2] for i in range(len(nodes))]
    ends = [(edges[i][0], edges[i][1]) for i in range(len(edges))]
    bw = [edges[i][2] for i in range(len(edges))]
    try:
        net = SubstrateNetwork(cpu, ends, bw) if kind == "substrate" else VirtualNetwork(cpu, ends, bw)
    except ValueError as e:
        raise BriteFormatError(f"{path}: {e}") from None
    return BriteFile(net, [(nodes[i][0], nodes[i][1]) for i in range(len(nodes))], arrival, lifetime)


# -- workload directories ----------------------------------------------------


@dataclass
class Workload:
    substrate: SubstrateNetwork
    requests: list[VNRequest]
    config: WorkloadConfig | None = None


def generate_workload(cfg: WorkloadConfig) -> tuple[Workload, Topology, list[Topology]]:
    rng = np.random.default_rng(cfg.seed)
    sn, sn_topo = generate_substrate(cfg, rng)
    reqs, topos = generate_vnr_stream(cfg, rng)
    return Workload(sn, reqs, cfg), sn_topo, topos


def write_workload(out_dir: str | FsPath, cfg: WorkloadConfig) -> Workload:
    """Generate and store a workload: substrate file, one file per VNR and a
    manifest of ``<relative-path> <arrival> <lifetime>`` lines."""
    out = FsPath(out_dir)
    (out / VNR_DIR).mkdir(parents=True, exist_ok=True)
    wl, sn_topo, topos = generate_workload(cfg)
    write_brite(wl.substrate, out / SUBSTRATE_FILE, sn_topo.coords)
    width = max(4, len(str(len(wl.requests))))
    manifest = []
    for req, topo in zip(wl.requests, topos):
        rel = f"{VNR_DIR}/vnr_{req.id:0{width}d}.brite"
        write_brite(req.vn, out / rel, topo.coords, req.arrival_time, req.lifetime)
        manifest.append(f"{rel} {_fmt(req.arrival_time)} {_fmt(req.lifetime)}")
    (out / MANIFEST_FILE).write_text("\n".join(manifest) + ("\n" if manifest else ""))
    (out / CONFIG_FILE).write_text(cfg.to_json() + "\n")
    return wl


def read_workload(wl_dir: str | FsPath) -> Workload:
    d = FsPath(wl_dir)
    if not (d / MANIFEST_FILE).is_file() or not (d / SUBSTRATE_FILE).is_file():
        raise FileNotFoundError(f"{d} is not a workload directory (missing manifest or substrate)")
    sn = read_brite(d / SUBSTRATE_FILE, kind="substrate").network
    reqs = []
    for i, line in enumerate((d / MANIFEST_FILE).read_text().splitlines()):
        if not line.strip():
            continue
        try:
            rel, arr, life = line.split()
            arrival, lifetime = float(arr), float(life)
        except ValueError:
            raise BriteFormatError(f"{d / MANIFEST_FILE}:{i + 1}: malformed manifest line {line!r}") from None
        bf = read_brite(d / rel, kind="virtual")
        reqs.append(VNRequest(bf.network, arrival, lifetime, len(reqs)))
    cfg = None
    if (d / CONFIG_FILE).is_file():
        cfg = WorkloadConfig.from_json((d / CONFIG_FILE).read_text())
    return Workload(sn, reqs, cfg)
