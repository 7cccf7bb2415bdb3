"""Binary segmentation over a grid of complexity penalties C on two-change data.

    python scripts/c_sweep.py --p 20 --t 600 --seeds 25 --c 0.5 1 2 3 4
"""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from ggmcp.datagen import GeneratorSpec, random_precision, sample_series
from ggmcp.model import PenaltyConfig
from ggmcp.segmentation import SegmentationSettings, binary_segmentation


@dataclass(frozen=True)
class SweepConfig:
    p: int = 20
    T: int = 600
    seeds: int = 25
    C: tuple[float, ...] = (0.5, 1.0, 2.0, 3.0, 4.0)
    tau_fracs: tuple[float, ...] = (1 / 3, 2 / 3)
    lambda_base: float = 0.01
    gamma: float = 3.5
    max_iter: int = 1000
    tol: float = 0.01


def run(cfg: SweepConfig) -> dict:
    pen = PenaltyConfig(lambda_base=cfg.lambda_base)
    settings = SegmentationSettings(gamma=cfg.gamma, max_iter=cfg.max_iter)
    truth = [int(round(f * cfg.T)) for f in cfg.tau_fracs]
    counts = {C: [] for C in cfg.C}
    hits = {C: 0 for C in cfg.C}
    t0 = time.perf_counter()
    for s in range(cfg.seeds):
        th = [random_precision(GeneratorSpec(cfg.p, seed=100 + 3 * s + j))
              for j in range(len(truth) + 1)]
        d = sample_series(th, truth, cfg.T, s)
        cache = {}
        for C in cfg.C:
            taus = binary_segmentation(d, pen, C, settings, seed=s, cache=cache)[1].taus
            counts[C].append(len(taus))
            hits[C] += len(taus) == len(truth) and all(
                abs(a - b) <= cfg.tol * cfg.T for a, b in zip(taus, truth))
        print(json.dumps({"seed": s, "counts": {str(C): counts[C][-1] for C in cfg.C}}),
              flush=True)
    summary = {str(C): {"correct_count": float(np.mean(np.array(counts[C]) == len(truth))),
                        "located_within_tol": hits[C] / cfg.seeds,
                        "mean_count": float(np.mean(counts[C]))} for C in cfg.C}
    return {"config": asdict(cfg), "summary": summary, "seconds": time.perf_counter() - t0}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=20)
    ap.add_argument("--t", type=int, default=600)
    ap.add_argument("--seeds", type=int, default=25)
    ap.add_argument("--c", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.0, 4.0])
    ap.add_argument("--out")
    a = ap.parse_args()
    res = run(SweepConfig(p=a.p, T=a.t, seeds=a.seeds, C=tuple(a.c)))
    print(json.dumps(res["summary"], indent=2))
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            json.dump(res, fh, indent=2)
