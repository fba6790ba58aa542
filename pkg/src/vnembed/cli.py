"""Command line: ``vnembed generate | run | validate | report``.

Exit codes: 0 ok, 1 domain failure (invalid replay, unreadable input), 2 usage
error (bad flags or configuration).
"""

from __future__ import annotations

import argparse
import heapq
import json
import sys
from pathlib import Path as FsPath

from .graph_core import Mapping, Path, allocate, cost, release, revenue, validate_mapping
from .sim_engine import (
    ALGORITHM_LABELS,
    ALGORITHMS,
    METRICS_HEADER,
    Sample,
    decisions_csv,
    metrics_csv,
    parse_decisions,
    parse_metrics,
    run_simulation,
)
from .workload import DEFAULT_PROFILES, ServerProfile, WorkloadConfig, read_workload, write_workload

REPORT_METRICS = ("acceptance_ratio", "avg_revenue", "revenue_cost_ratio")

ACCRUAL_NOTE = (
    "revenue and cost accrue per integer time unit t with arrival <= t < arrival + lifetime, "
    "summed over t in [0, T] and divided by T"
)


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


def _pair(kind):
    def parse(text: str):
        try:
            lo, hi = (kind(x) for x in text.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected LO,HI but got {text!r}") from None
        return lo, hi

    return parse


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers but got {text!r}") from None


def _profile(text: str) -> ServerProfile:
    name, _, cpu = text.rpartition("=")
    try:
        return ServerProfile(name, float(cpu))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=CPU but got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vnembed", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = WorkloadConfig()
    g = sub.add_parser("generate", help="generate a workload directory")
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--sn-nodes", type=int, default=d.sn_nodes)
    g.add_argument("--sn-links", type=int, default=d.sn_links)
    g.add_argument("--sn-bw-range", type=_pair(float), default=d.sn_bw_range, metavar="LO,HI")
    g.add_argument("--server-profile", type=_profile, action="append", metavar="NAME=CPU",
                   help="repeatable; defaults to the two HP ProLiant ML110 configurations")
    g.add_argument("--vn-count", type=int, default=d.vn_count)
    g.add_argument("--vn-size-range", type=_pair(int), default=d.vn_size_range, metavar="LO,HI")
    g.add_argument("--vn-connectivity", type=float, default=d.vn_connectivity)
    g.add_argument("--vn-cpu-choices", type=_floats, default=d.vn_cpu_choices, metavar="C1,C2,...")
    g.add_argument("--vn-bw-range", type=_pair(float), default=d.vn_bw_range, metavar="LO,HI")
    g.add_argument("--arrival-rate", type=float, default=d.arrival_rate, help="requests per time unit")
    g.add_argument("--lifetime-range", type=_pair(float), default=d.lifetime_range, metavar="LO,HI")
    g.add_argument("--waxman-alpha", type=float, default=d.waxman_alpha)
    g.add_argument("--waxman-beta", type=float, default=d.waxman_beta)
    g.add_argument("--plane-size", type=float, default=d.plane_size)

    r = sub.add_parser("run", help="simulate one algorithm over a workload")
    r.add_argument("--workload", required=True)
    r.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="bfsn")
    r.add_argument("--max-hops", type=int, default=2)
    r.add_argument("--backtrack-factor", type=float, default=3)
    r.add_argument("--horizon", type=int, default=30000)
    r.add_argument("--sample-every", type=int, default=100)
    r.add_argument("--accrual", choices=("discrete", "continuous"), default="discrete")
    r.add_argument("--out", required=True, metavar="PREFIX")
    r.add_argument("--progress", action="store_true", help="print progress to stderr")

    v = sub.add_parser("validate", help="replay a decision log against its workload")
    v.add_argument("--workload", required=True)
    v.add_argument("--decisions", required=True)
    v.add_argument("--mappings", help="defaults to <PREFIX>.mappings.jsonl next to the decision log")
    v.add_argument("--max-hops", type=int, help="defaults to the value recorded by `run`")

    rep = sub.add_parser("report", help="align metrics from several runs into plot data")
    rep.add_argument("--metrics", nargs="+", required=True)
    rep.add_argument("--out", required=True, metavar="PREFIX")
    return p


# -- generate ---------------------------------------------------------------


def cmd_generate(a: argparse.Namespace) -> int:
    try:
        cfg = WorkloadConfig(
            seed=a.seed, sn_nodes=a.sn_nodes, sn_links=a.sn_links, sn_bw_range=a.sn_bw_range,
            server_profiles=tuple(a.server_profile) if a.server_profile else DEFAULT_PROFILES,
            vn_count=a.vn_count, vn_size_range=a.vn_size_range, vn_connectivity=a.vn_connectivity,
            vn_cpu_choices=a.vn_cpu_choices, vn_bw_range=a.vn_bw_range, arrival_rate=a.arrival_rate,
            lifetime_range=a.lifetime_range, waxman_alpha=a.waxman_alpha, waxman_beta=a.waxman_beta,
            plane_size=a.plane_size,
        )
    except ValueError as e:
        raise CliError(f"invalid configuration: {e}", 2) from None
    wl = write_workload(a.out_dir, cfg)
    last = wl.requests[-1].arrival_time if wl.requests else 0.0
    print(f"wrote {a.out_dir}: substrate {wl.substrate.num_nodes} nodes / {wl.substrate.num_links} links, "
          f"{len(wl.requests)} VNRs arriving until t={last:.1f}")
    return 0


# -- run --------------------------------------------------------------------


def _prefix_paths(prefix: str) -> dict[str, FsPath]:
    return {k: FsPath(f"{prefix}.{k}") for k in ("metrics.csv", "decisions.csv", "mappings.jsonl", "meta.json")}


def _mapping_json(vnr_id: int, m: Mapping) -> str:
    return json.dumps({
        "id": vnr_id,
        "node_map": [[v, h] for v, h in sorted(m.node_map.items())],
        "link_map": [[l, list(p.nodes), list(p.links)] for l, p in sorted(m.link_map.items())],
    })


def _mapping_from_json(d: dict) -> Mapping:
    return Mapping(
        {int(v): int(h) for v, h in d["node_map"]},
        {int(l): Path(tuple(nodes), tuple(links)) for l, nodes, links in d["link_map"]},
    )


def cmd_run(a: argparse.Namespace) -> int:
    try:
        wl = read_workload(a.workload)
    except (OSError, ValueError) as e:
        raise CliError(f"cannot read workload: {e}") from None
    if a.max_hops < 0 or a.horizon <= 0 or a.sample_every <= 0:
        raise CliError("--max-hops must be >= 0, --horizon and --sample-every > 0", 2)

    progress = None
    if a.progress:
        def progress(done: int, total: int) -> None:
            if done % 50 == 0 or done == total:
                print(f"\r{done}/{total} requests", end="", file=sys.stderr, flush=True)

    res = run_simulation(wl.substrate, wl.requests, a.algorithm, a.max_hops, a.backtrack_factor,
                         a.horizon, a.sample_every, a.accrual, progress=progress)
    if a.progress:
        print(file=sys.stderr)
    out = _prefix_paths(a.out)
    out["metrics.csv"].parent.mkdir(parents=True, exist_ok=True)
    out["metrics.csv"].write_text(metrics_csv(res.timeline))
    out["decisions.csv"].write_text(decisions_csv(res.decisions))
    out["mappings.jsonl"].write_text("".join(_mapping_json(i, m) + "\n" for i, m in sorted(res.mappings.items())))
    meta = {
        "algorithm": a.algorithm,
        "algorithm_label": ALGORITHM_LABELS[a.algorithm],
        "max_hops": a.max_hops,
        "backtrack_factor": a.backtrack_factor,
        "horizon": a.horizon,
        "sample_every": a.sample_every,
        "accrual": a.accrual,
        "accrual_note": ACCRUAL_NOTE if a.accrual == "discrete" else "continuous overlap with [0, T], divided by T",
    }
    out["meta.json"].write_text(json.dumps(meta, indent=2) + "\n")
    f = res.final

    def show(x):
        return "n/a" if x is None else f"{x:.4f}"

    print(f"{ALGORITHM_LABELS[a.algorithm]}: acceptance {show(f.acceptance_ratio)}, "
          f"avg revenue {show(f.avg_revenue)}, R/Cost {show(f.revenue_cost_ratio)} at t={f.time}")
    return 0


# -- validate ---------------------------------------------------------------


def replay(workload_dir: str, decisions_path: str, mappings_path: str | None = None, max_hops: int | None = None) -> list[str]:
    """Problems found when replaying a decision log; empty means clean."""
    wl = read_workload(workload_dir)
    dpath = FsPath(decisions_path)
    log = parse_decisions(dpath.read_text())
    stem = str(dpath)[: -len(".decisions.csv")] if str(dpath).endswith(".decisions.csv") else str(dpath)
    mpath = FsPath(mappings_path) if mappings_path else FsPath(stem + ".mappings.jsonl")
    if max_hops is None:
        meta = FsPath(stem + ".meta.json")
        if not meta.is_file():
            return [f"no --max-hops given and {meta} is missing"]
        max_hops = int(json.loads(meta.read_text())["max_hops"])
    mappings: dict[int, Mapping] = {}
    if mpath.is_file():
        for line in mpath.read_text().splitlines():
            if line.strip():
                d = json.loads(line)
                mappings[int(d["id"])] = _mapping_from_json(d)

    reqs = {r.id: r for r in wl.requests}
    seen: set[int] = set()
    for d in log:
        if d.id not in reqs:
            return [f"decision for unknown VNR id {d.id}"]
        if d.id in seen:
            return [f"duplicate decision for VNR {d.id}"]
        seen.add(d.id)
        r = reqs[d.id]
        if d.arrival != r.arrival_time or d.lifetime != r.lifetime:
            return [f"VNR {d.id}: arrival/lifetime differ from the workload"]
        if d.accepted and d.id not in mappings:
            return [f"VNR {d.id}: accepted without a recorded mapping"]
        if not d.accepted and d.id in mappings:
            return [f"VNR {d.id}: rejected but a mapping is recorded"]
    extra = set(mappings) - {d.id for d in log if d.accepted}
    if extra:
        return [f"mappings recorded for VNRs not accepted in the log: {sorted(extra)[:5]}"]

    state = wl.substrate.copy()
    events = [(d.arrival, 1, d.id) for d in log]
    heapq.heapify(events)
    by_id = {d.id: d for d in log}
    while events:
        t, kind, i = heapq.heappop(events)
        r, d = reqs[i], by_id[i]
        if kind == 0:
            release(state, r.vn, mappings[i])
            continue
        if d.revenue != revenue(r.vn):
            return [f"VNR {i}: logged revenue {d.revenue} != {revenue(r.vn)}"]
        if not d.accepted:
            if d.cost != 0:
                return [f"VNR {i}: rejected with nonzero cost"]
            continue
        m = mappings[i]
        problems = validate_mapping(state, r.vn, m, max_hops)
        if problems:
            return [f"VNR {i} at t={t}: {p.message}" for p in problems]
        if d.cost != cost(r.vn, m):
            return [f"VNR {i}: logged cost {d.cost} != {cost(r.vn, m)}"]
        allocate(state, r.vn, m)
        heapq.heappush(events, (r.departure_time, 0, i))
    if state != wl.substrate:
        return ["substrate not restored after the final departure"]
    return []


def cmd_validate(a: argparse.Namespace) -> int:
    try:
        problems = replay(a.workload, a.decisions, a.mappings, a.max_hops)
    except (OSError, ValueError, KeyError) as e:
        raise CliError(f"cannot replay: {e}") from None
    if problems:
        print(f"INVALID: {problems[0]}", file=sys.stderr)
        return 1
    print("OK: decision log replays cleanly")
    return 0


# -- report -----------------------------------------------------------------


def _run_name(path: str) -> str:
    name = FsPath(path).name
    for suffix in (".metrics.csv", ".csv"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return name


def _hold(samples: list[Sample], t: int) -> Sample | None:
    best = None
    for s in samples:
        if s.time <= t:
            best = s
    return best


def cmd_report(a: argparse.Namespace) -> int:
    runs = []
    for path in a.metrics:
        try:
            samples = parse_metrics(FsPath(path).read_text())
        except (OSError, ValueError) as e:
            raise CliError(f"{path}: {e}") from None
        if not samples:
            raise CliError(f"{path}: no samples")
        runs.append((_run_name(path), samples))
    grids = [[s.time for s in samples] for _, samples in runs]
    grid = min(grids, key=lambda g: (len(g), g))
    if any(g != grid for g in grids):
        print("warning: sample grids differ; resampling to the coarsest grid", file=sys.stderr)
    names = [n for n, _ in runs]

    def fmt(x):
        return "nan" if x is None else repr(x)

    out = FsPath(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    for metric in REPORT_METRICS:
        lines = ["# time " + " ".join(names)]
        for t in grid:
            vals = []
            for _, samples in runs:
                s = _hold(samples, t)
                vals.append(fmt(None if s is None else getattr(s, metric)))
            lines.append(f"{t} " + " ".join(vals))
        FsPath(f"{a.out}.{metric}.dat").write_text("\n".join(lines) + "\n")

    width = max(len(n) for n in names + ["run"])
    table = [f"{'run':<{width}}  {'time':>7}  {'acceptance':>10}  {'avg_revenue':>14}  {'R/Cost':>8}"]
    for name, samples in runs:
        s = samples[-1]
        table.append(
            f"{name:<{width}}  {s.time:>7}  "
            + ("n/a" if s.acceptance_ratio is None else f"{s.acceptance_ratio:.4f}").rjust(10) + "  "
            + ("n/a" if s.avg_revenue is None else f"{s.avg_revenue:.2f}").rjust(14) + "  "
            + ("n/a" if s.revenue_cost_ratio is None else f"{s.revenue_cost_ratio:.4f}").rjust(8)
        )
    summary = "\n".join(table) + "\n"
    FsPath(f"{a.out}.summary.txt").write_text(summary)

    titles = {"acceptance_ratio": "VNR acceptance ratio", "avg_revenue": "Long-term average revenue",
              "revenue_cost_ratio": "Long-term R/Cost ratio"}
    gp = ["# gnuplot -persist " + FsPath(f"{a.out}.gnuplot").name, "set key bottom right", "set xlabel 'time'"]
    for metric in REPORT_METRICS:
        data = FsPath(f"{a.out}.{metric}.dat").name
        series = ", ".join(f"'{data}' using 1:{i + 2} with lines title '{n}'" for i, n in enumerate(names))
        gp += [f"set title '{titles[metric]}'", f"plot {series}", "pause -1"]
    FsPath(f"{a.out}.gnuplot").write_text("\n".join(gp) + "\n")
    print(summary, end="")
    return 0


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "validate": cmd_validate, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as e:
        print(f"vnembed {args.command}: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
