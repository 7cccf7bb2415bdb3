"""Change-point recovery of approximate MM and simulated annealing over seeded instances.

    python scripts/recovery.py --p 30 --t 400 --tau-frac 0.5 --seeds 50
"""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from ggmcp.datagen import GeneratorSpec, random_precision, sample_series
from ggmcp.model import PenaltyConfig, SearchWindow
from ggmcp.solvers import StoppingRule, initialize, mm_approx, sa_solve


@dataclass(frozen=True)
class RecoveryConfig:
    p: int = 30
    T: int = 400
    tau_frac: float = 0.5
    seeds: int = 50
    lambda_base: float = 0.01
    alpha: float = 0.97
    gamma: float = 3.5
    n0_frac: float = 0.05
    max_iter: int = 5000
    sa_iters: int = 2000
    tol: float = 0.005
    sa: bool = True


def instance(cfg: RecoveryConfig, seed: int):
    tstar = int(cfg.tau_frac * cfg.T)
    th1 = random_precision(GeneratorSpec(cfg.p, seed=2 * seed))
    th2 = random_precision(GeneratorSpec(cfg.p, seed=2 * seed + 1))
    return sample_series([th1, th2], [tstar], cfg.T, seed), tstar


def run(cfg: RecoveryConfig) -> dict:
    pen = PenaltyConfig(alpha=cfg.alpha, lambda_base=cfg.lambda_base)
    window = SearchWindow.from_fraction(cfg.T, cfg.n0_frac)
    rows = []
    for seed in range(cfg.seeds):
        d, tstar = instance(cfg, seed)
        s0 = initialize(d, pen, window, seed)
        t0 = time.perf_counter()
        mm = mm_approx(d, pen, window, s0, cfg.gamma, StoppingRule(max_iter=cfg.max_iter))
        row = {"seed": seed, "tau_star": tstar, "mm_tau": mm.tau, "mm_iters": mm.k,
               "mm_time": time.perf_counter() - t0}
        if cfg.sa:
            t0 = time.perf_counter()
            sa = sa_solve(d, pen, window, s0, cfg.gamma, M=cfg.sa_iters)
            row.update(sa_tau=sa.tau, sa_time=time.perf_counter() - t0)
        rows.append(row)
        print(json.dumps(row), flush=True)
    err = np.array([abs(r["mm_tau"] - r["tau_star"]) / cfg.T for r in rows])
    summary = {"mm_success": float(np.mean(err < cfg.tol)),
               "mm_mean_abs_error": float(err.mean())}
    if cfg.sa:
        summary["sa_success"] = float(np.mean(
            [abs(r["sa_tau"] - r["tau_star"]) / cfg.T < cfg.tol for r in rows]))
        summary["sa_agrees_with_mm"] = float(np.mean(
            [abs(r["sa_tau"] - r["mm_tau"]) / cfg.T < cfg.tol for r in rows]))
    return {"config": asdict(cfg), "summary": summary, "runs": rows}


def parse(argv=None) -> tuple[RecoveryConfig, str | None]:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=30)
    ap.add_argument("--t", type=int, default=400)
    ap.add_argument("--tau-frac", type=float, default=0.5)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.01)
    ap.add_argument("--gamma", type=float, default=3.5)
    ap.add_argument("--max-iter", type=int, default=5000)
    ap.add_argument("--sa-iters", type=int, default=2000)
    ap.add_argument("--no-sa", action="store_true")
    ap.add_argument("--out", help="write the JSON summary here")
    a = ap.parse_args(argv)
    cfg = RecoveryConfig(p=a.p, T=a.t, tau_frac=a.tau_frac, seeds=a.seeds, lambda_base=a.lam,
                         gamma=a.gamma, max_iter=a.max_iter, sa_iters=a.sa_iters, sa=not a.no_sa)
    return cfg, a.out


if __name__ == "__main__":
    cfg, out = parse()
    res = run(cfg)
    print(json.dumps(res["summary"], indent=2))
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(res, fh, indent=2)
