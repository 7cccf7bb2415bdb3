"""Runtime tables: the CLI benchmark over a grid of (p, T), V1 and V2 stopping.

    python scripts/benchmark.py --grid 50x500 100x1000 --reps 5 --out bench.json
"""
from __future__ import annotations

import argparse
import json

from ggmcp.cli import run


def table(grid, reps: int, variants, algorithms: str, seed: int) -> list[dict]:
    rows = []
    for size in grid:
        p, T = (int(v) for v in size.lower().split("x"))
        for variant in variants:
            rep = run(["benchmark", "--p", str(p), "--t", str(T), "--reps", str(reps),
                       "--variant", variant, "--algorithms", algorithms, "--seed", str(seed)])
            for alg, row in rep["result"]["summary"].items():
                rows.append({"p": p, "T": T, "variant": variant, "algorithm": alg, **row})
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", nargs="+", default=["50x500"])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--variants", nargs="+", default=["v2", "v1"])
    ap.add_argument("--algorithms", default="sa,approx-mm,brute")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    a = ap.parse_args()
    rows = table(a.grid, a.reps, a.variants, a.algorithms, a.seed)
    print(f"{'p':>4} {'T':>5} {'stop':>4} {'algorithm':>10} {'time (s)':>10} {'iters':>9} "
          f"{'success':>7}")
    for r in rows:
        print(f"{r['p']:>4} {r['T']:>5} {r['variant']:>4} {r['algorithm']:>10} "
              f"{r['mean_time']:>10.3f} {r['mean_iterations']:>9.1f} {r['success_rate']:>7.2f}")
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
