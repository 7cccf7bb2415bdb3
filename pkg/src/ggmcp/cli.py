"""Command-line front end: simulate, detect, segment, benchmark, replay.

Exit codes: 0 success, 2 bad flags, 3 unusable data, 4 solver divergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import secrets
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .datagen import GeneratorSpec, random_precision, sample_series, similar_pair
from .errors import (DataError, DegenerateWindow, Diverged, MissingReference,
                     NotPositiveDefinite)
from .ingest import load_dataset, write_csv
from .model import Dataset, PenaltyConfig, SearchWindow, Side, scatter
from .numerics import SpdMatrix
from .prox import GlassoSettings
from .segmentation import SegmentationSettings, SegmentNode, binary_segmentation
from .solvers import (CoolingSchedule, KernelSpec, StoppingRule, brute_force, default_epsilon,
                      initial_thetas, initialize, mm_approx, mm_exact, sa_solve)
from .solvers.state import prox_pair

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
SCHEMA_PATH = Path(__file__).with_name("schemas") / "run_report.v1.json"
EDGE_EPS = 1e-4
REFERENCE_STEPS = 1000

EXIT_OK, EXIT_FLAGS, EXIT_DATA, EXIT_DIVERGED = 0, 2, 3, 4

# tuning table; explicit flags override the chosen preset
PRESETS = {
    "general": {"lambda": 0.13, "gamma": 0.25},
    "t1000": {"lambda": 0.1, "gamma": 3.5},
    "t500": {"lambda": 0.01, "gamma": 3.5},
    "real": {"lambda": 0.002, "gamma": 0.5, "refine_gamma": 350.0, "c_mult": 0.005,
             "epsilon": 1e-4, "algorithm": "sa", "refine_iters": 2000},
}
DEFAULTS = {"algorithm": "approx-mm", "alpha": 0.97, "n0_frac": 0.05, "max_iter": 5000,
            "kernel": "independence", "mix_weight": 0.5, "beta_final": 1e-3,
            "epsilon": None, "c_mult": 2.0, "refine_iters": 500, "refine_gamma": None,
            "guard": 2e3}
KERNELS = {"independence": "independence", "random-walk": "random_walk", "mixture": "mixture"}


class FlagError(ValueError):
    """Invalid combination of command-line flags."""


# ---------------------------------------------------------------- serialization

def edge_list(theta, eps: float = EDGE_EPS) -> list[list]:
    """Upper-triangle entries (diagonal included) with |value| > eps as [i, j, value]."""
    m = theta.mat if isinstance(theta, SpdMatrix) else np.asarray(theta)
    i, j = np.triu_indices(m.shape[0])
    v = m[i, j]
    keep = np.abs(v) > eps
    return [[int(a), int(b), float(c)] for a, b, c in zip(i[keep], j[keep], v[keep])]


def dense_from_edges(edges, p: int) -> np.ndarray:
    m = np.zeros((p, p))
    for i, j, v in edges:
        m[i, j] = m[j, i] = v
    return m


def write_json(path: str | Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, allow_nan=False)
        fh.write("\n")


def write_trace(path: str | Path, taus, objective, beta=None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "tau", "objective", "beta"])
        for k, (t, f) in enumerate(zip(taus, objective)):
            b = repr(float(beta[k])) if beta else ""
            w.writerow([k, int(t), repr(float(f)), b])


def write_edges(path: str | Path, blocks: dict[str, list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["block", "i", "j", "value"])
        for name, edges in blocks.items():
            for i, j, v in edges:
                w.writerow([name, i, j, repr(v)])


def _versions() -> dict:
    return {"ggmcp": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _report(command: str, argv: list[str], seed: int | None, settings: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "argv": list(argv),
            "seed": seed, "settings": settings, "versions": _versions(), "timings": {}}


def load_schema() -> dict:
    """JSON schema that every detect/segment/benchmark report satisfies."""
    with open(SCHEMA_PATH, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------- flag handling

def _resolve(args, keys) -> dict:
    """Flag value if given, else the preset value, else the package default."""
    preset = PRESETS[args.preset]
    out = {}
    for key in keys:
        val = getattr(args, key, None)
        if val is None:
            val = preset.get(key, DEFAULTS.get(key))
        out[key] = val
    return out


def _positive(name, value, *, allow_zero=False):
    if value is not None and (value < 0 or (value == 0 and not allow_zero)):
        kind = "non-negative" if allow_zero else "positive"
        raise FlagError(f"--{name.replace('_', '-')} must be {kind}")


def _solver_settings(args) -> dict:
    s = _resolve(args, ["algorithm", "lambda", "gamma", "alpha", "n0_frac", "max_iter", "kernel",
                        "sigma", "mix_weight", "beta_final", "epsilon"])
    _positive("lambda", s["lambda"], allow_zero=True)
    _positive("gamma", s["gamma"])
    _positive("max_iter", s["max_iter"])
    _positive("sigma", s["sigma"])
    _positive("epsilon", s["epsilon"], allow_zero=True)
    if not 0.0 < s["n0_frac"] < 0.5:
        raise FlagError("--n0-frac must lie in (0, 0.5)")
    if not 0.0 < s["beta_final"] <= 1.0:
        raise FlagError("--beta-final must lie in (0, 1]")
    s["seed"] = args.seed if args.seed is not None else secrets.randbits(32)
    return s


def _penalty(s: dict) -> PenaltyConfig:
    try:
        return PenaltyConfig(alpha=s["alpha"], lambda_base=s["lambda"])
    except ValueError as exc:
        raise FlagError(str(exc)) from exc


def _kernel(s: dict) -> KernelSpec:
    try:
        return KernelSpec(KERNELS[s["kernel"]], s["sigma"], s["mix_weight"])
    except ValueError as exc:
        raise FlagError(str(exc)) from exc


def _replay_argv(argv: list[str], seed: int) -> list[str]:
    return list(argv) if "--seed" in argv else list(argv) + ["--seed", str(seed)]


def reference_estimates(d: Dataset, tau: int, cfg: PenaltyConfig, gamma: float,
                        steps: int = REFERENCE_STEPS, epsilon: float | None = None
                        ) -> tuple[SpdMatrix, SpdMatrix]:
    """Precision estimates after ``steps`` prox-gradient steps at a fixed change-point."""
    eps = default_epsilon(d.p, tau, d.T) if epsilon is None else epsilon
    th1, th2 = initial_thetas(d, tau, eps)
    S1, S2 = scatter(Side.LEFT, tau, d), scatter(Side.RIGHT, tau, d)
    for _ in range(steps):
        th1, th2 = prox_pair(th1, th2, tau, S1, S2, gamma, d, cfg)
    return th1, th2


def _load_reference(path: str, p: int) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    obj = obj.get("result", obj)
    if "theta1" in obj:
        pair = obj["theta1"], obj["theta2"]
    elif len(obj.get("thetas", [])) == 2:
        pair = obj["thetas"]
    else:
        raise FlagError(f"{path} holds no theta1/theta2 edge lists")
    return dense_from_edges(pair[0], p), dense_from_edges(pair[1], p)


# ---------------------------------------------------------------- single change-point

def run_single(d: Dataset, algorithm: str, cfg: PenaltyConfig, window: SearchWindow,
               s: dict, rule: StoppingRule | None, seed: int):
    """Run one solver; returns a dict with tau_hat, thetas, traces and iterations."""
    gamma = s["gamma"]
    if algorithm == "brute":
        res = brute_force(d, cfg, window, GlassoSettings(gamma=gamma), epsilon=s["epsilon"])
        return {"tau_hat": res.tau_hat, "theta1": res.theta1_hat, "theta2": res.theta2_hat,
                "iterations": int(window.size), "tau_trace": window.taus.tolist(),
                "objective_trace": res.G_profile.tolist(), "beta_trace": [],
                "stop_reason": "exhaustive", "gamma": gamma, "restarts": 0}
    state0 = initialize(d, cfg, window, seed, s["epsilon"])
    if algorithm == "mm":
        st = mm_exact(d, cfg, window, state0, GlassoSettings(gamma=gamma),
                      max_outer=s["max_iter"])
    elif algorithm == "sa":
        cooling = CoolingSchedule(M=s["max_iter"], betaM=s["beta_final"])
        st = sa_solve(d, cfg, window, state0, gamma, _kernel(s), cooling, rule=rule)
    else:
        st = mm_approx(d, cfg, window, state0, gamma, rule)
    return {"tau_hat": st.tau, "theta1": st.theta1, "theta2": st.theta2, "iterations": st.k,
            "tau_trace": list(st.tau_trace), "objective_trace": list(st.objective_trace),
            "beta_trace": list(st.beta_trace), "stop_reason": st.stop_reason,
            "gamma": st.gamma, "restarts": st.restarts}


def _stopping_rule(args, s, d, cfg) -> tuple[StoppingRule, dict]:
    if args.stop == "practical":
        return StoppingRule("practical", max_iter=s["max_iter"]), {}
    if args.true_tau is None:
        raise MissingReference(f"--stop {args.stop} needs --true-tau")
    if not 1 <= args.true_tau < d.T:
        raise FlagError("--true-tau must lie in [1, T)")
    refs, timings = None, {}
    if args.stop == "v1":
        t0 = time.perf_counter()
        if args.reference:
            refs = _load_reference(args.reference, d.p)
        else:
            th1, th2 = reference_estimates(d, args.true_tau, cfg, s["gamma"],
                                           args.reference_steps, s["epsilon"])
            refs = (th1.mat, th2.mat)
        timings["reference"] = time.perf_counter() - t0
    rule = StoppingRule(args.stop, max_iter=s["max_iter"], true_tau=args.true_tau,
                        reference_thetas=refs)
    rule.validate()
    return rule, timings


def cmd_detect(args, argv) -> dict:
    s = _solver_settings(args)
    cfg = _penalty(s)
    _kernel(s)
    if args.reference_steps < 0:
        raise FlagError("--reference-steps must be non-negative")
    if args.reference and args.stop != "v1":
        raise FlagError("--reference only applies to --stop v1")
    t0 = time.perf_counter()
    d = load_dataset(args.data, not args.no_header, prices=args.prices)
    t_load = time.perf_counter() - t0
    window = SearchWindow.from_fraction(d.T, s["n0_frac"])
    rule, timings = _stopping_rule(args, s, d, cfg)
    t0 = time.perf_counter()
    res = run_single(d, s["algorithm"], cfg, window, s, rule, s["seed"])
    timings = {"load": t_load, **timings, "solve": time.perf_counter() - t0}
    settings = {**s, "preset": args.preset, "stop": args.stop, "true_tau": args.true_tau,
                "edge_eps": args.edge_eps, "penalty": asdict(cfg)}
    rep = _report("detect", argv, s["seed"], settings)
    rep["replay_argv"] = _replay_argv(argv, s["seed"])
    rep["data"] = {"path": str(args.data), "T": d.T, "p": d.p}
    rep["timings"] = timings
    rep["result"] = {
        "tau_hat": res["tau_hat"], "iterations": res["iterations"],
        "stop_reason": res["stop_reason"], "gamma_used": res["gamma"],
        "restarts": res["restarts"], "window": [window.lo, window.hi],
        "theta1": edge_list(res["theta1"], args.edge_eps),
        "theta2": edge_list(res["theta2"], args.edge_eps),
        "tau_trace": [int(t) for t in res["tau_trace"]],
        "objective_trace": [float(f) for f in res["objective_trace"]],
        "beta_trace": [float(b) for b in res["beta_trace"]],
    }
    if args.trace:
        write_trace(args.trace, res["tau_trace"], res["objective_trace"], res["beta_trace"])
    if args.edges:
        write_edges(args.edges, {"theta1": rep["result"]["theta1"],
                                 "theta2": rep["result"]["theta2"]})
    print(f"tau_hat={res['tau_hat']} iterations={res['iterations']} "
          f"stop={res['stop_reason']}")
    return rep


# ---------------------------------------------------------------- segmentation

def _node_dict(node: SegmentNode, eps: float) -> dict:
    out = {"lo": node.lo, "hi": node.hi, "tau": node.tau, "accepted": node.accepted,
           "reason": node.reason, "seed": node.seed, "ell_tau": node.ell_tau,
           "ell_F": node.ell_F, "refine_trace": [float(v) for v in node.refine_trace]}
    if node.theta_left is not None:
        out["theta_left"] = edge_list(node.theta_left, eps)
        out["theta_right"] = edge_list(node.theta_right, eps)
    out["children"] = ([_node_dict(c, eps) for c in node.children]
                       if node.children is not None else [])
    return out


def cmd_segment(args, argv) -> dict:
    s = _solver_settings(args)
    s.update(_resolve(args, ["c_mult", "refine_iters", "refine_gamma", "guard"]))
    _positive("c_mult", s["c_mult"], allow_zero=True)
    _positive("refine_iters", s["refine_iters"], allow_zero=True)
    _positive("refine_gamma", s["refine_gamma"])
    _positive("guard", s["guard"])
    cfg = _penalty(s)
    try:
        settings = SegmentationSettings(
            solver=s["algorithm"], gamma=s["gamma"], max_iter=s["max_iter"], kernel=_kernel(s),
            inner=GlassoSettings(gamma=s["gamma"]), refine_iters=s["refine_iters"],
            refine_gamma=s["refine_gamma"], window_frac=s["n0_frac"],
            epsilon=0.2 if s["epsilon"] is None else s["epsilon"], guard=s["guard"])
    except ValueError as exc:
        raise FlagError(str(exc)) from exc
    t0 = time.perf_counter()
    d = load_dataset(args.data, not args.no_header, prices=args.prices)
    t_load = time.perf_counter() - t0
    t0 = time.perf_counter()
    root, cps = binary_segmentation(d, cfg, s["c_mult"], settings, s["seed"])
    timings = {"load": t_load, "segment": time.perf_counter() - t0}
    rep = _report("segment", argv, s["seed"],
                  {**s, "preset": args.preset, "edge_eps": args.edge_eps,
                   "penalty": asdict(cfg)})
    rep["replay_argv"] = _replay_argv(argv, s["seed"])
    rep["data"] = {"path": str(args.data), "T": d.T, "p": d.p}
    rep["timings"] = timings
    leaves = [{"lo": lo, "hi": hi, "theta": edge_list(th, args.edge_eps)}
              for (lo, hi), th in cps.segments]
    rep["result"] = {"taus": list(cps.taus), "tree": _node_dict(root, args.edge_eps),
                     "leaves": leaves}
    if args.edges:
        write_edges(args.edges, {f"segment_{k}": leaf["theta"] for k, leaf in enumerate(leaves)})
    print("taus=" + ",".join(map(str, cps.taus)))
    return rep


# ---------------------------------------------------------------- simulate

def _derived_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def simulate(p: int, T: int, tau_fracs, density: float = 0.25, similar=None,
             seed: int = 0) -> tuple[Dataset, list[int], list[SpdMatrix]]:
    """Piecewise-Gaussian data with one regime per interval between change-points."""
    taus = [int(round(f * T)) for f in tau_fracs]
    if any(not 1 <= t < T for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
        raise FlagError("--tau-frac values must give strictly increasing change-points in [1, T)")
    if similar is not None:
        if len(taus) != 1:
            raise FlagError("--similar needs exactly one --tau-frac")
        thetas = list(similar_pair(p, similar[0], similar[1], _derived_seed(seed, 1)))
    else:
        thetas = [random_precision(GeneratorSpec(p, density, seed=_derived_seed(seed, 1, r)))
                  for r in range(len(taus) + 1)]
    return sample_series(thetas, taus, T, _derived_seed(seed, 0)), taus, thetas


def cmd_simulate(args, argv) -> dict:
    if args.p < 1 or args.t < 2:
        raise FlagError("--p must be >= 1 and --t >= 2")
    if not 0.0 <= args.density <= 1.0:
        raise FlagError("--density must lie in [0, 1]")
    similar = None
    if args.similar:
        try:
            similar = tuple(float(v) for v in args.similar.split(","))
        except ValueError:
            similar = ()
        if len(similar) != 2 or min(similar) < 0:
            raise FlagError("--similar takes two non-negative percentages: q,p")
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    d, taus, thetas = simulate(args.p, args.t, args.tau_frac or [], args.density, similar, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "data.csv", d.X)
    truth = {"schema_version": SCHEMA_VERSION, "command": "simulate",
             "argv": _replay_argv(argv, seed), "seed": seed, "p": args.p, "T": args.t,
             "taus": taus, "thetas": [edge_list(th, 0.0) for th in thetas]}
    write_json(out / "truth.json", truth)
    print(f"wrote {out / 'data.csv'} ({args.t} rows) and {out / 'truth.json'}")
    return truth


# ---------------------------------------------------------------- benchmark

def _bench_rep(rep: int, args, s: dict, cfg: PenaltyConfig, algorithms) -> dict:
    seed = _derived_seed(s["seed"], rep)
    d, taus, _ = simulate(args.p, args.t, [args.tau_frac], seed=seed)
    true_tau = taus[0]
    window = SearchWindow.from_fraction(d.T, s["n0_frac"])
    refs = None
    if args.variant == "v1":
        th1, th2 = reference_estimates(d, true_tau, cfg, s["gamma"], args.reference_steps,
                                       s["epsilon"])
        refs = (th1.mat, th2.mat)
    rule = StoppingRule(args.variant, max_iter=s["max_iter"], true_tau=true_tau,
                        reference_thetas=refs)
    out = {"seed": seed, "true_tau": true_tau, "runs": {}}
    for alg in algorithms:
        t0 = time.perf_counter()
        res = run_single(d, alg, cfg, window, s, rule, seed)
        wall = time.perf_counter() - t0
        out["runs"][alg] = {"time": wall, "iterations": res["iterations"],
                            "tau_hat": res["tau_hat"], "stop_reason": res["stop_reason"],
                            "success": abs(res["tau_hat"] - true_tau) / d.T < rule.tau_tol}
    return out


def run_benchmark(args, argv) -> dict:
    if args.preset == "auto":
        args.preset = "t1000" if args.t >= 1000 else "t500"
    s = _solver_settings(args)
    cfg = _penalty(s)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    bad = [a for a in algorithms if a not in ("brute", "mm", "approx-mm", "sa")]
    if bad or not algorithms:
        raise FlagError(f"unknown algorithm(s): {', '.join(bad) or '(none)'}")
    if args.reps < 1 or args.jobs < 1 or args.reference_steps < 0:
        raise FlagError("--reps and --jobs must be at least 1")
    if not 0.0 < args.tau_frac < 1.0:
        raise FlagError("--tau-frac must lie in (0, 1)")
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        reps = list(pool.map(lambda r: _bench_rep(r, args, s, cfg, algorithms),
                             range(args.reps)))
    summary = {}
    for alg in algorithms:
        runs = [r["runs"][alg] for r in reps]
        summary[alg] = {"mean_time": float(np.mean([r["time"] for r in runs])),
                        "mean_iterations": float(np.mean([r["iterations"] for r in runs])),
                        "success_rate": float(np.mean([r["success"] for r in runs])),
                        "samples": len(runs)}
    rep = _report("benchmark", argv, s["seed"],
                  {**s, "preset": args.preset, "p": args.p, "t": args.t, "reps": args.reps,
                   "variant": args.variant, "algorithms": algorithms, "jobs": args.jobs,
                   "tau_frac": args.tau_frac, "penalty": asdict(cfg)})
    rep["replay_argv"] = _replay_argv(argv, s["seed"])
    rep["timings"] = {"total": time.perf_counter() - t0}
    rep["result"] = {"summary": summary, "reps": reps}
    for alg, row in summary.items():
        print(f"{alg:>10}  mean time {row['mean_time']:9.3f} s  "
              f"mean iterations {row['mean_iterations']:9.1f}  success {row['success_rate']:.2f}")
    return rep


# ---------------------------------------------------------------- replay

OUTPUT_FLAGS = ("--report", "--trace", "--edges")


def _strip_outputs(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in OUTPUT_FLAGS:
            skip = True
            continue
        if a.split("=", 1)[0] in OUTPUT_FLAGS:
            continue
        out.append(a)
    return out


def _taus_of(rep: dict):
    res = rep["result"]
    return res["taus"] if rep["command"] == "segment" else [res["tau_hat"]]


def cmd_replay(args, argv) -> dict:
    with open(args.report_file, encoding="utf-8") as fh:
        old = json.load(fh)
    if old.get("command") not in ("detect", "segment"):
        raise FlagError("replay supports detect and segment reports")
    new = run(_strip_outputs(old["replay_argv"]))
    same = _taus_of(new) == _taus_of(old)
    print(f"replayed {old['command']}: taus {'identical' if same else 'DIFFER'}")
    if not same:
        raise SystemExit(1)
    return new


# ---------------------------------------------------------------- parser

def _add_solver_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("data", help="CSV of observations (rows) by variables (columns)")
    sp.add_argument("--prices", action="store_true",
                    help="input holds prices: convert to standardized, clipped log returns")
    sp.add_argument("--no-header", action="store_true", help="first CSV row is data")
    sp.add_argument("--preset", choices=sorted(PRESETS), default="general")
    sp.add_argument("--algorithm", choices=["brute", "mm", "approx-mm", "sa"])
    sp.add_argument("--lambda", type=float, dest="lambda", help="regularization base")
    sp.add_argument("--gamma", type=float, help="prox-gradient step-size")
    sp.add_argument("--alpha", type=float, help="elastic-net mixing in [0, 1)")
    sp.add_argument("--n0-frac", type=float, help="window margin as a fraction of T")
    sp.add_argument("--max-iter", type=int, help="iteration cap (annealing: iteration count)")
    sp.add_argument("--kernel", choices=sorted(KERNELS))
    sp.add_argument("--sigma", type=float, help="random-walk proposal sd")
    sp.add_argument("--mix-weight", type=float, help="mixture: probability of independence")
    sp.add_argument("--beta-final", type=float, help="final annealing temperature")
    sp.add_argument("--epsilon", type=float, help="ridge in the inverse-scatter start")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--report", help="write the JSON run report here")
    sp.add_argument("--edges", help="write precision edge lists (block,i,j,value) here")
    sp.add_argument("--edge-eps", type=float, default=EDGE_EPS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggmcp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate piecewise-Gaussian data")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--t", type=int, required=True)
    sp.add_argument("--tau-frac", type=float, action="append")
    sp.add_argument("--density", type=float, default=0.25)
    sp.add_argument("--similar", help="q,p: shared and idiosyncratic densities in percent")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("detect", help="estimate a single change-point")
    _add_solver_flags(sp)
    sp.add_argument("--stop", choices=["v1", "v2", "practical"], default="practical")
    sp.add_argument("--true-tau", type=int)
    sp.add_argument("--reference", help="JSON with theta1/theta2 edge lists for --stop v1")
    sp.add_argument("--reference-steps", type=int, default=REFERENCE_STEPS,
                    help="prox steps at the true tau for the v1 reference")
    sp.add_argument("--trace", help="write the per-iteration trace CSV here")

    sp = sub.add_parser("segment", help="estimate multiple change-points")
    _add_solver_flags(sp)
    sp.add_argument("--c-mult", type=float, help="complexity penalty C")
    sp.add_argument("--refine-iters", type=int)
    sp.add_argument("--refine-gamma", type=float)
    sp.add_argument("--guard", type=float, help="divergence bound on ||theta||_2^2")

    sp = sub.add_parser("benchmark", help="time the solvers on simulated data")
    sp.add_argument("--p", type=int, default=50)
    sp.add_argument("--t", type=int, default=500)
    sp.add_argument("--reps", type=int, default=5)
    sp.add_argument("--variant", choices=["v1", "v2"], default="v2")
    sp.add_argument("--algorithms", default="sa,approx-mm,brute")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--tau-frac", type=float, default=0.5)
    sp.add_argument("--preset", choices=["auto", *sorted(PRESETS)], default="auto")
    for flag in ("--lambda", "--gamma", "--alpha", "--n0-frac", "--sigma", "--mix-weight",
                 "--beta-final", "--epsilon"):
        sp.add_argument(flag, type=float, dest=flag[2:].replace("-", "_"))
    sp.add_argument("--max-iter", type=int)
    sp.add_argument("--reference-steps", type=int, default=REFERENCE_STEPS)
    sp.add_argument("--kernel", choices=sorted(KERNELS))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--report")

    sp = sub.add_parser("replay", help="re-run a detect/segment report and compare taus")
    sp.add_argument("report_file")
    return parser


COMMANDS = {"simulate": cmd_simulate, "detect": cmd_detect, "segment": cmd_segment,
            "benchmark": run_benchmark, "replay": cmd_replay}


def execute(args: argparse.Namespace, argv: list[str]) -> dict:
    rep = COMMANDS[args.command](args, argv)
    if getattr(args, "report", None):
        write_json(args.report, rep)
    return rep


def run(argv: list[str]) -> dict:
    """Parse ``argv`` and execute; errors propagate as exceptions."""
    return execute(build_parser().parse_args(argv), argv)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    argv = [a for a in argv if a not in ("-v", "-vv", "--verbose")]
    try:
        execute(args, argv)
    except (FlagError, MissingReference, DegenerateWindow) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except (DataError, NotPositiveDefinite) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Diverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except SystemExit as exc:
        return int(exc.code or 0)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
