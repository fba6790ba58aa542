"""Scaled-down comparison of greedy, BFSN and BFSN-HEM over several seeds.

    python3 scripts/desk_scale.py --seeds 1 2 3 --out runs/desk

Writes one metrics/decision CSV pair per (seed, algorithm) plus aligned
plot data per seed, and prints seed-averaged final metrics.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from vnembed.cli import main as cli
from vnembed.sim_engine import ALGORITHM_LABELS, long_term_avg_revenue, parse_decisions, parse_metrics


def parse_args():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--sn-nodes", type=int, default=100)
    p.add_argument("--sn-links", type=int, default=500)
    p.add_argument("--vn-count", type=int, default=600)
    p.add_argument("--horizon", type=int, default=6000)
    p.add_argument("--max-hops", type=int, default=2)
    p.add_argument("--algorithms", nargs="+", default=["greedy", "bfsn", "bfsn-hem"])
    p.add_argument("--out", default="runs/desk")
    return p.parse_args()


def main():
    a = parse_args()
    out = Path(a.out)
    finals = {alg: [] for alg in a.algorithms}
    for seed in a.seeds:
        wl = out / f"seed{seed}" / "workload"
        cli(["generate", "--seed", str(seed), "--out-dir", str(wl), "--sn-nodes", str(a.sn_nodes),
             "--sn-links", str(a.sn_links), "--vn-count", str(a.vn_count)])
        metrics = []
        for alg in a.algorithms:
            prefix = out / f"seed{seed}" / alg
            t0 = time.perf_counter()
            code = cli(["run", "--workload", str(wl), "--algorithm", alg, "--horizon", str(a.horizon),
                        "--max-hops", str(a.max_hops), "--out", str(prefix)])
            if code:
                raise SystemExit(code)
            print(f"  ({time.perf_counter() - t0:.0f}s)")
            final = parse_metrics(Path(f"{prefix}.metrics.csv").read_text())[-1]
            log = parse_decisions(Path(f"{prefix}.decisions.csv").read_text())
            finals[alg].append((final.acceptance_ratio, long_term_avg_revenue(log, a.horizon), final.revenue_cost_ratio))
            metrics.append(f"{prefix}.metrics.csv")
        cli(["report", "--metrics", *metrics, "--out", str(out / f"seed{seed}" / "compare")])

    print(f"\nmean over seeds {a.seeds}:")
    print(f"{'algorithm':<26} {'acceptance':>10} {'avg revenue':>12} {'R/Cost':>8}")
    for alg, rows in finals.items():
        acc, rev, rc = (float(np.mean([r[i] for r in rows])) for i in range(3))
        print(f"{ALGORITHM_LABELS[alg]:<26} {acc:>10.4f} {rev:>12.1f} {rc:>8.4f}")


if __name__ == "__main__":
    main()
