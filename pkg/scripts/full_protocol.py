"""Full-size protocol: 200-node / 1000-link substrate, 3000 requests,
horizon 30000, Max_hops 2, backtrack budget 3n, for all three algorithms.

    python3 scripts/full_protocol.py --seed 1 --out runs/full

This takes hours on one core; ``--algorithms`` narrows the set.
"""

import argparse
from pathlib import Path

from vnembed.cli import main as cli


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="runs/full")
    p.add_argument("--algorithms", nargs="+", default=["greedy", "bfsn", "bfsn-hem"])
    a = p.parse_args()
    out = Path(a.out)
    wl = out / "workload"
    if not (wl / "manifest.txt").exists():
        cli(["generate", "--seed", str(a.seed), "--out-dir", str(wl)])
    metrics = []
    for alg in a.algorithms:
        prefix = out / alg
        code = cli(["run", "--workload", str(wl), "--algorithm", alg, "--out", str(prefix), "--progress"])
        if code:
            raise SystemExit(code)
        if cli(["validate", "--workload", str(wl), "--decisions", f"{prefix}.decisions.csv"]):
            raise SystemExit(f"{alg}: decision log failed validation")
        metrics.append(f"{prefix}.metrics.csv")
    cli(["report", "--metrics", *metrics, "--out", str(out / "compare")])


if __name__ == "__main__":
    main()
