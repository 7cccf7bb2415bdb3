"""Solver state, initialization and stopping rules."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal

import numpy as np
from numpy.typing import NDArray

from ..errors import Diverged, MissingReference
from ..model import Dataset, PenaltyConfig, SearchWindow, Side, lambdas, scatter
from ..numerics import SpdMatrix, cholesky_logdet, fro_norm
from ..prox import factor_or_diverge, prox_step

log = logging.getLogger(__name__)

LARGE_P_EPSILON = 0.2


def make_rng(seed: int | None, stream: int) -> np.random.Generator:
    """Independent generator per (seed, stream) pair."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


@dataclass
class SolverState:
    tau: int
    theta1: SpdMatrix
    theta2: SpdMatrix
    k: int = 0
    tau_trace: list[int] = field(default_factory=list)
    objective_trace: list[float] = field(default_factory=list)
    beta_trace: list[float] = field(default_factory=list)
    rng_seed: int | None = None
    gamma: float | None = None
    restarts: int = 0
    stop_reason: str | None = None
    stable_count: int = 0
    last_change: float = math.inf
    # solver-private incremental statistics (annealing keeps its scatter here)
    cache: object | None = field(default=None, repr=False, compare=False)

    def fresh_copy(self) -> "SolverState":
        """Same starting point with independent (empty) traces."""
        return replace(self, tau_trace=list(self.tau_trace),
                       objective_trace=list(self.objective_trace),
                       beta_trace=list(self.beta_trace), cache=None)


@dataclass(frozen=True)
class StoppingRule:
    """When to stop an iterative change-point solver.

    ``v1`` and ``v2`` compare against the true change-point (``v1`` also
    against reference precision estimates); ``practical`` watches the
    relative change of (tau, theta1, theta2) over a run of iterations.
    Every rule also stops at ``max_iter``.
    """

    kind: Literal["v1", "v2", "practical"] = "practical"
    tau_tol: float = 0.005
    theta_tol: float = 0.05
    practical_tol: float = 1e-5
    practical_window: int = 25
    max_iter: int = 1000
    reference_thetas: tuple[NDArray, NDArray] | None = None
    true_tau: int | None = None

    def validate(self) -> None:
        if self.kind not in ("v1", "v2", "practical"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if self.kind in ("v1", "v2") and self.true_tau is None:
            raise MissingReference(f"{self.kind} stopping needs the true change-point")
        if self.kind == "v1" and self.reference_thetas is None:
            raise MissingReference("v1 stopping needs reference precision matrices")


def default_epsilon(p: int, tau: int, T: int) -> float:
    return 0.0 if p < min(tau, T - tau) else LARGE_P_EPSILON


def initial_thetas(d: Dataset, tau: int, epsilon: float) -> tuple[SpdMatrix, SpdMatrix]:
    """(S_j(tau) + eps I)^-1 for both sides."""
    out = []
    for side in (Side.LEFT, Side.RIGHT):
        S = scatter(side, tau, d) + epsilon * np.eye(d.p)
        out.append(cholesky_logdet(cholesky_logdet(S).inverse()))
    return out[0], out[1]


def initialize(d: Dataset, cfg: PenaltyConfig, window: SearchWindow, seed: int | None,
               epsilon: float | None = None) -> SolverState:
    """Uniform random tau in the window and inverse-scatter precision estimates.

    With ``epsilon=None`` the ridge is 0 when p < min(tau, T - tau) and 0.2
    otherwise. An explicit epsilon too small for a singular scatter raises
    NotPositiveDefinite.
    """
    rng = make_rng(seed, 0)
    tau = int(rng.integers(window.lo, window.hi + 1))
    eps = default_epsilon(d.p, tau, d.T) if epsilon is None else epsilon
    if eps < 0:
        raise ValueError("epsilon must be non-negative")
    theta1, theta2 = initial_thetas(d, tau, eps)
    return SolverState(tau=tau, theta1=theta1, theta2=theta2, rng_seed=seed)


def relative_change(state: SolverState, prev_tau: int, prev1: NDArray, prev2: NDArray,
                    T: int) -> float:
    def rel(new, old):
        return fro_norm(new - old, "full") / max(1.0, fro_norm(old, "full"))

    return max(abs(state.tau - prev_tau) / T, rel(state.theta1.mat, prev1),
               rel(state.theta2.mat, prev2))


def _criterion_met(state: SolverState, rule: StoppingRule, d: Dataset) -> bool:
    if rule.kind == "practical":
        return state.stable_count >= rule.practical_window
    if not abs(state.tau - rule.true_tau) / d.T < rule.tau_tol:
        return False
    if rule.kind == "v2":
        return True
    ref1, ref2 = rule.reference_thetas
    dist = (fro_norm(state.theta1.mat - ref1, "full") / fro_norm(ref1, "full")
            + fro_norm(state.theta2.mat - ref2, "full") / fro_norm(ref2, "full"))
    return dist < rule.theta_tol


def check_stop(state: SolverState, rule: StoppingRule, d: Dataset, cfg: PenaltyConfig) -> bool:
    """True when ``rule`` says the solver may stop at ``state``.

    For ``practical`` the caller keeps ``state.stable_count`` up to date.
    """
    rule.validate()
    return state.k >= rule.max_iter or _criterion_met(state, rule, d)


def stop_reason(state: SolverState, rule: StoppingRule, d: Dataset) -> str:
    return rule.kind if _criterion_met(state, rule, d) else "max_iter"


def prox_pair(theta1: SpdMatrix, theta2: SpdMatrix, tau: int, S1: NDArray, S2: NDArray,
              gamma: float, d: Dataset, cfg: PenaltyConfig) -> tuple[SpdMatrix, SpdMatrix]:
    """One proximal-gradient step on each side at change-point ``tau``."""
    T = d.T
    lam1 = float(lambdas(Side.LEFT, tau, cfg, T, d.p))
    lam2 = float(lambdas(Side.RIGHT, tau, cfg, T, d.p))
    new1 = factor_or_diverge(prox_step(theta1, S1, tau / T, lam1, gamma, cfg), tau)
    new2 = factor_or_diverge(prox_step(theta2, S2, (T - tau) / T, lam2, gamma, cfg), tau)
    return new1, new2


def track_stability(state: SolverState, prev_tau: int, prev1: NDArray, prev2: NDArray,
                    T: int, tol: float) -> None:
    state.last_change = relative_change(state, prev_tau, prev1, prev2, T)
    state.stable_count = state.stable_count + 1 if state.last_change < tol else 0


def run_with_restarts(run: Callable[[float], SolverState], gamma: float,
                      max_restarts: int = 10) -> SolverState:
    """Call ``run(gamma)``, halving gamma after each divergence."""
    if gamma <= 0:
        raise ValueError("step-size must be positive")
    last: Diverged | None = None
    for attempt in range(max_restarts + 1):
        try:
            state = run(gamma)
        except Diverged as exc:
            last = exc
            log.info("diverged with gamma=%g (tau=%s); halving", gamma, exc.tau)
            gamma *= 0.5
            continue
        state.gamma = gamma
        state.restarts = attempt
        return state
    raise Diverged(f"still diverging after {max_restarts} step-size halvings",
                   tau=last.tau if last else None)
