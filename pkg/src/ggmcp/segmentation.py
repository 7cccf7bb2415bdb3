"""Multiple change-points by recursive binary segmentation."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import Diverged, OutOfWindow
from .model import Dataset, PenaltyConfig, SearchWindow, Side, gaussian_loss, lambdas, objective_H
from .model import penalty, scatter
from .numerics import SpdMatrix, cholesky_logdet, extreme_eigenvalues, fro_norm
from .prox import GlassoSettings, factor_or_diverge, prox_step
from .solvers import (KernelSpec, StoppingRule, brute_force, default_epsilon, initial_thetas,
                      initialize, mm_approx, mm_exact, sa_solve)

log = logging.getLogger(__name__)

SolverName = Literal["approx-mm", "sa", "mm", "brute"]


@dataclass(frozen=True)
class SegmentationSettings:
    """Per-segment solver and stopping-rule configuration.

    ``max_iter`` caps approximate MM (practical stopping) and is the number
    of annealing iterations for ``sa``. ``scale="total"`` multiplies the
    per-observation objective by the segment length, so that l_tau and l_F
    are penalized negative log-likelihoods of the whole segment; ``"mean"``
    keeps the per-observation value.

    ``epsilon`` is the ridge in the (S + eps I)^-1 starting points. A ridge
    start sits below the solution, where prox-gradient moves quickly; an
    unridged inverse scatter of a short side is far above it and shrinks
    slowly. ``None`` uses 0 when p < min(tau, n - tau) and 0.2 otherwise.
    """

    solver: SolverName = "approx-mm"
    gamma: float = 0.25
    max_iter: int = 1000
    kernel: KernelSpec = KernelSpec()
    inner: GlassoSettings = GlassoSettings()
    refine_iters: int = 500
    refine_gamma: float | None = None
    window_frac: float = 0.05
    n0_floor: int = 5
    epsilon: float | None = 0.2
    guard: float = 2e3
    guard_norm: Literal["spectral", "frobenius"] = "spectral"
    null_lambda_frac: float = 0.5
    scale: Literal["total", "mean"] = "total"

    def __post_init__(self):
        if self.solver not in ("approx-mm", "sa", "mm", "brute"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be non-negative")
        if self.guard_norm not in ("spectral", "frobenius"):
            raise ValueError(f"unknown guard norm {self.guard_norm!r}")
        if self.scale not in ("total", "mean"):
            raise ValueError(f"unknown scale {self.scale!r}")
        if not 0.0 < self.null_lambda_frac < 1.0:
            raise ValueError("null_lambda_frac must lie in (0, 1)")

    @property
    def step(self) -> float:
        return self.gamma if self.refine_gamma is None else self.refine_gamma

    def n0(self, length: int) -> int:
        return max(math.ceil(self.window_frac * length - 1e-9), self.n0_floor)


@dataclass
class SegmentNode:
    """One segment of the recursion; rows ``lo..hi`` (1-based, inclusive).

    ``tau`` is the proposed split (global index: left rows ``lo..tau``);
    it is kept even when the split is rejected, with ``accepted`` False.
    """

    lo: int
    hi: int
    tau: int | None = None
    theta_left: SpdMatrix | None = None
    theta_right: SpdMatrix | None = None
    theta_full: SpdMatrix | None = None
    ell_tau: float | None = None
    ell_F: float | None = None
    accepted: bool = False
    reason: str = ""
    seed: int | None = None
    refine_trace: list[float] = field(default_factory=list, repr=False)
    children: tuple["SegmentNode", "SegmentNode"] | None = None

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1

    def leaves(self) -> list["SegmentNode"]:
        if self.children is None:
            return [self]
        return self.children[0].leaves() + self.children[1].leaves()

    def split_points(self) -> list[int]:
        if self.children is None:
            return []
        return self.children[0].split_points() + [self.tau] + self.children[1].split_points()


@dataclass(frozen=True)
class ChangePointSet:
    taus: tuple[int, ...]
    segments: tuple[tuple[tuple[int, int], SpdMatrix], ...] = field(repr=False)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.taus, self.taus[1:])):
            raise ValueError("change-points must be strictly increasing")


def node_seed(seed: int, lo: int, hi: int) -> int:
    """Seed for segment ``lo..hi`` that does not depend on the visiting order."""
    return int(np.random.SeedSequence(seed, spawn_key=(lo, hi)).generate_state(1)[0])


def _guard_value(theta: SpdMatrix, norm: str) -> float:
    if norm == "spectral":
        return extreme_eigenvalues(theta.mat)[1] ** 2
    return fro_norm(theta.mat, "full") ** 2


def _check_guard(thetas, settings: SegmentationSettings, tau: int | None) -> None:
    for th in thetas:
        if _guard_value(th, settings.guard_norm) > settings.guard:
            raise Diverged("precision estimate exceeded the divergence guard", tau=tau)


def _scale(settings: SegmentationSettings, n: int) -> float:
    return float(n) if settings.scale == "total" else 1.0


def fit_unsplit(seg: Dataset, cfg: PenaltyConfig, settings: SegmentationSettings,
                steps: int) -> tuple[SpdMatrix, float]:
    """Glasso fit of a single precision matrix on the whole segment and its l_F."""
    n, p = seg.T, seg.p
    S = seg.total_scatter / n
    eps = (0.0 if p < n else 0.2) if settings.epsilon is None else settings.epsilon
    theta = cholesky_logdet(cholesky_logdet(S + eps * np.eye(p)).inverse())
    lam = float(lambdas(Side.LEFT, settings.null_lambda_frac * n, cfg, n, p))
    for _ in range(steps):
        theta = factor_or_diverge(prox_step(theta, S, 1.0, lam, settings.step, cfg))
    ell = _scale(settings, n) * (0.5 * gaussian_loss(theta, S) + lam * penalty(theta.mat, cfg))
    return theta, ell


def refine_split(seg: Dataset, tau: int, theta1: SpdMatrix, theta2: SpdMatrix,
                 cfg: PenaltyConfig, settings: SegmentationSettings, steps: int,
                 trace: list[float] | None = None) -> tuple[SpdMatrix, SpdMatrix]:
    """``steps`` more prox-gradient steps on both sides at the local change-point ``tau``.

    With ``trace`` given, l_tau after every step (and before the first) is appended.
    """
    n, p = seg.T, seg.p
    S1, S2 = scatter(Side.LEFT, tau, seg), scatter(Side.RIGHT, tau, seg)
    lam1 = float(lambdas(Side.LEFT, tau, cfg, n, p))
    lam2 = float(lambdas(Side.RIGHT, tau, cfg, n, p))
    if trace is not None:
        trace.append(ell_split(seg, tau, theta1, theta2, cfg, settings))
    for _ in range(steps):
        theta1 = factor_or_diverge(prox_step(theta1, S1, tau / n, lam1, settings.step, cfg), tau)
        theta2 = factor_or_diverge(
            prox_step(theta2, S2, (n - tau) / n, lam2, settings.step, cfg), tau)
        if trace is not None:
            trace.append(ell_split(seg, tau, theta1, theta2, cfg, settings))
    return theta1, theta2


def ell_split(seg: Dataset, tau: int, theta1: SpdMatrix, theta2: SpdMatrix,
              cfg: PenaltyConfig, settings: SegmentationSettings) -> float:
    """l_tau: the split-model objective H(tau | theta1, theta2) on the segment."""
    window = SearchWindow(settings.n0(seg.T), seg.T)
    return _scale(settings, seg.T) * objective_H(tau, theta1, theta2, seg, cfg, window).total


def penalized_nll(d: Dataset, lo: int, hi: int, split: int | None, cfg: PenaltyConfig,
                  settings: SegmentationSettings = SegmentationSettings()) -> float:
    """Penalized negative log-likelihood of rows ``lo..hi``, with or without a split.

    Both models start from regularized inverse scatters and take
    ``settings.refine_iters`` prox-gradient steps. ``split`` is a global
    time index (left part ``lo..split``) and must fall in the segment window.
    """
    seg = d.segment(lo, hi)
    if split is None:
        return fit_unsplit(seg, cfg, settings, settings.refine_iters)[1]
    tau = split - lo + 1
    window = SearchWindow(settings.n0(seg.T), seg.T)
    if tau not in window:
        raise OutOfWindow(f"split {split} outside the window of segment [{lo}, {hi}]")
    eps = default_epsilon(seg.p, tau, seg.T) if settings.epsilon is None else settings.epsilon
    theta1, theta2 = initial_thetas(seg, tau, eps)
    theta1, theta2 = refine_split(seg, tau, theta1, theta2, cfg, settings,
                                  settings.refine_iters)
    return ell_split(seg, tau, theta1, theta2, cfg, settings)


def _solve_segment(seg: Dataset, cfg: PenaltyConfig, settings: SegmentationSettings,
                   window: SearchWindow, seed: int) -> tuple[int, SpdMatrix, SpdMatrix, int]:
    """Single change-point on the segment; returns (tau, theta1, theta2, prox steps used)."""

    if settings.solver == "brute":
        res = brute_force(seg, cfg, window, settings.inner, epsilon=settings.epsilon)
        return res.tau_hat, res.theta1_hat, res.theta2_hat, settings.inner.max_iter
    state0 = initialize(seg, cfg, window, seed, settings.epsilon)
    if settings.solver == "mm":
        st = mm_exact(seg, cfg, window, state0, settings.inner)
        return st.tau, st.theta1, st.theta2, settings.inner.max_iter
    if settings.solver == "sa":
        st = sa_solve(seg, cfg, window, state0, settings.gamma, settings.kernel,
                      M=settings.max_iter)
    else:
        st = mm_approx(seg, cfg, window, state0, settings.gamma,
                       StoppingRule(max_iter=settings.max_iter))
    return st.tau, st.theta1, st.theta2, st.k


def _leaf_fit(seg: Dataset, cfg: PenaltyConfig, settings: SegmentationSettings) -> SpdMatrix:
    """Precision estimate reported for a leaf that was never split-tested."""
    try:
        return fit_unsplit(seg, cfg, settings, settings.refine_iters)[0]
    except Diverged:
        return fit_unsplit(seg, cfg, settings, 0)[0]


def _fit_node(lo: int, hi: int, d: Dataset, cfg: PenaltyConfig,
              settings: SegmentationSettings, seed: int) -> SegmentNode:
    """Everything about segment ``lo..hi`` that does not depend on C."""
    node = SegmentNode(lo, hi, seed=node_seed(seed, lo, hi))
    seg = d.segment(lo, hi)
    n0 = settings.n0(seg.T)
    if seg.T < 2 * n0 + 1:
        node.theta_full = _leaf_fit(seg, cfg, settings)
        node.reason = "too_short"
        return node
    window = SearchWindow(n0, seg.T)
    try:
        tau, th1, th2, used = _solve_segment(seg, cfg, settings, window, node.seed)
        node.tau = lo + tau - 1
        th1, th2 = refine_split(seg, tau, th1, th2, cfg, settings, settings.refine_iters,
                                node.refine_trace)
        _check_guard((th1, th2), settings, tau)
        ell_tau = ell_split(seg, tau, th1, th2, cfg, settings)
        theta_full, ell_F = fit_unsplit(seg, cfg, settings, used + settings.refine_iters)
        # both models must exist before the node can take part in the split test
        node.theta_left, node.theta_right = th1, th2
        node.theta_full, node.ell_tau, node.ell_F = theta_full, ell_tau, ell_F
    except Diverged as exc:
        log.info("segment [%d, %d]: %s; not splitting", lo, hi, exc)
        node.reason = "diverged"
        if node.theta_full is None:
            node.theta_full = _leaf_fit(seg, cfg, settings)
    return node


def binary_segmentation(d: Dataset, cfg: PenaltyConfig, C: float,
                        settings: SegmentationSettings = SegmentationSettings(),
                        seed: int = 0, *, cache: dict | None = None
                        ) -> tuple[SegmentNode, ChangePointSet]:
    """Recursively split while l_tau + C p < l_F.

    Each node is computed from its own seed (derived from ``seed`` and the
    segment bounds), so results do not depend on the order of processing.
    A segment shorter than 2 n0 + 1 is a leaf; so is one whose estimates trip
    the divergence guard or fail to stay positive definite.

    Passing the same ``cache`` dict to calls that differ only in ``C``
    reuses the per-segment fits, which do not depend on C.
    """
    if C < 0:
        raise ValueError("C must be non-negative")
    cache = {} if cache is None else cache

    def node_for(lo: int, hi: int) -> SegmentNode:
        if (lo, hi) not in cache:
            cache[(lo, hi)] = _fit_node(lo, hi, d, cfg, settings, seed)
        return replace(cache[(lo, hi)])

    root = node_for(1, d.T)
    stack = [root]
    while stack:
        node = stack.pop()
        if node.ell_tau is None:
            continue
        node.accepted = node.ell_tau + C * d.p < node.ell_F
        node.reason = "split" if node.accepted else "rejected"
        if node.accepted:
            node.children = (node_for(node.lo, node.tau), node_for(node.tau + 1, node.hi))
            stack.extend(reversed(node.children))
    segments = tuple(((leaf.lo, leaf.hi), leaf.theta_full) for leaf in root.leaves())
    return root, ChangePointSet(tuple(root.split_points()), segments)
