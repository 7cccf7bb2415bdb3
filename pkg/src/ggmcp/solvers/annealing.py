"""Simulated annealing over the change-point with Metropolis-Hastings moves."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal

import numpy as np

from ..model import (Dataset, PenaltyConfig, SearchWindow, Side, h_from_parts, lambdas,
                     penalty)
from .state import (SolverState, StoppingRule, check_stop, make_rng, prox_pair,
                    run_with_restarts, stop_reason, track_stability)

# re-proposals allowed before a random-walk move counts as rejected
RW_MAX_TRIES = 100
# rows moved through the running scatter before it is recomputed from scratch
REFRESH_FACTOR = 4


@dataclass(frozen=True)
class CoolingSchedule:
    """Geometric cooling beta_k = beta0 * decay**k with beta_M = betaM."""

    M: int
    beta0: float = 1.0
    betaM: float = 0.001

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if not 0 < self.betaM <= self.beta0:
            raise ValueError("need 0 < betaM <= beta0")

    @property
    def decay(self) -> float:
        return (self.betaM / self.beta0) ** (1.0 / self.M)

    def beta(self, k: int) -> float:
        return self.beta0 * self.decay**k


@dataclass(frozen=True)
class KernelSpec:
    """Proposal for the change-point move.

    ``sigma=None`` means max(2, 0.02 T). For the mixture, ``mix_weight`` is
    the probability of using the independence proposal.
    """

    kind: Literal["independence", "random_walk", "mixture"] = "independence"
    sigma: float | None = None
    mix_weight: float = 0.5

    def __post_init__(self):
        if self.kind not in ("independence", "random_walk", "mixture"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if not 0.0 <= self.mix_weight <= 1.0:
            raise ValueError("mix_weight must lie in [0, 1]")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def scale(self, T: int) -> float:
        return self.sigma if self.sigma is not None else max(2.0, 0.02 * T)


class RunningScatter:
    """Left scatter sum A(tau) = sum_{t<=tau} X^(t) X^(t)' kept up to date by row updates."""

    def __init__(self, d: Dataset, tau: int):
        self.d = d
        self.tau = tau
        self.A = d.left_sum(tau)
        self._moved = 0

    def move_to(self, tau: int) -> None:
        if tau == self.tau:
            return
        lo, hi = sorted((self.tau, tau))
        rows = self.d.X[lo:hi]
        delta = rows.T @ rows
        self.A = self.A + delta if tau > self.tau else self.A - delta
        self._moved += hi - lo
        self.tau = tau
        if self._moved > REFRESH_FACTOR * self.d.T:
            self.A = self.d.left_sum(tau)
            self._moved = 0

    def scatters(self):
        T = self.d.T
        return self.A / self.tau, (self.d.total_scatter - self.A) / (T - self.tau)


def _running_scatter(state: SolverState, d: Dataset) -> RunningScatter:
    rs = state.cache
    if not isinstance(rs, RunningScatter) or rs.d is not d:
        rs = RunningScatter(d, state.tau)
        state.cache = rs
    rs.move_to(state.tau)
    return rs


def acceptance_probability(h_current: float, h_proposed: float, beta: float,
                           log_q_ratio: float = 0.0) -> float:
    """min(1, exp(-(H' - H)/beta) * q(tau|tau')/q(tau'|tau))."""
    log_a = -(h_proposed - h_current) / beta + log_q_ratio
    return 1.0 if log_a >= 0 else math.exp(log_a)


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _rw_mass_inside(tau: int, sigma: float, window: SearchWindow) -> float:
    """P(round(N(tau, sigma^2)) lands in the window)."""
    return (_norm_cdf((window.hi + 0.5 - tau) / sigma)
            - _norm_cdf((window.lo - 0.5 - tau) / sigma))


class _HEvaluator:
    """H(t | theta1, theta2) at the current tau and at nearby t, without a full scan."""

    def __init__(self, state: SolverState, d: Dataset, cfg: PenaltyConfig):
        rs = _running_scatter(state, d)
        self.d, self.cfg, self.tau = d, cfg, state.tau
        self.th1, self.th2 = state.theta1, state.theta2
        self.pen1 = penalty(self.th1.mat, cfg)
        self.pen2 = penalty(self.th2.mat, cfg)
        self.left = float(np.sum(self.th1.mat * rs.A))
        self.right = float(np.sum(self.th2.mat * (d.total_scatter - rs.A)))

    def __call__(self, t: int) -> float:
        d = self.d
        left, right = self.left, self.right
        if t != self.tau:
            lo, hi = sorted((self.tau, t))
            rows = d.X[lo:hi]
            q1 = float(np.einsum("ti,ti->", rows @ self.th1.mat, rows))
            q2 = float(np.einsum("ti,ti->", rows @ self.th2.mat, rows))
            sign = 1.0 if t > self.tau else -1.0
            left += sign * q1
            right -= sign * q2
        lam1 = float(lambdas(Side.LEFT, t, self.cfg, d.T, d.p))
        lam2 = float(lambdas(Side.RIGHT, t, self.cfg, d.T, d.p))
        return float(h_from_parts(t, d.T, self.th1.logdet, self.th2.logdet, left, right,
                                  self.pen1, self.pen2, lam1, lam2))


def mh_step(state: SolverState, beta: float, kernel: KernelSpec, d: Dataset,
            cfg: PenaltyConfig, window: SearchWindow,
            rng: np.random.Generator) -> tuple[int, bool, float]:
    """One Metropolis-Hastings move targeting pi_beta(t) ~ exp(-H(t | theta1, theta2)/beta).

    Returns ``(tau_next, accepted, H(proposal))``. ``state`` is not modified
    apart from its cached running scatter.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    kind = kernel.kind
    if kind == "mixture":
        kind = "independence" if rng.random() < kernel.mix_weight else "random_walk"
    tau = state.tau
    H = _HEvaluator(state, d, cfg)
    log_q_ratio = 0.0
    if kind == "independence":
        prop = int(rng.integers(window.lo, window.hi + 1))
    else:
        sigma = kernel.scale(d.T)
        for _ in range(RW_MAX_TRIES):
            prop = int(np.rint(rng.normal(tau, sigma)))
            if prop in window:
                break
        else:
            h_cur = H(tau)
            return tau, False, h_cur
        log_q_ratio = (math.log(_rw_mass_inside(tau, sigma, window))
                       - math.log(_rw_mass_inside(prop, sigma, window)))
    h_cur = H(tau)
    h_prop = H(prop) if prop != tau else h_cur
    a = acceptance_probability(h_cur, h_prop, beta, log_q_ratio)
    if rng.random() < a:
        return prop, True, h_prop
    return tau, False, h_prop


def _sa_run(d: Dataset, cfg: PenaltyConfig, window: SearchWindow, state: SolverState,
            gamma: float, kernel: KernelSpec, cooling: CoolingSchedule, M: int,
            rule: StoppingRule | None,
            callback: Callable[[SolverState], None] | None) -> SolverState:
    rng = make_rng(state.rng_seed, 1)
    tol = rule.practical_tol if rule is not None else 0.0
    state.tau_trace.append(state.tau)
    state.objective_trace.append(_HEvaluator(state, d, cfg)(state.tau))
    state.beta_trace.append(cooling.beta0)
    state.stop_reason = "max_iter"
    for k in range(1, M + 1):
        prev = (state.tau, state.theta1.mat, state.theta2.mat)
        S1, S2 = _running_scatter(state, d).scatters()
        state.theta1, state.theta2 = prox_pair(state.theta1, state.theta2, state.tau,
                                               S1, S2, gamma, d, cfg)
        beta = cooling.beta(k)
        tau, accepted, h_prop = mh_step(state, beta, kernel, d, cfg, window, rng)
        state.tau = tau
        state.k = k
        state.tau_trace.append(tau)
        state.objective_trace.append(h_prop if accepted else _HEvaluator(state, d, cfg)(tau))
        state.beta_trace.append(beta)
        track_stability(state, *prev, d.T, tol)
        if callback is not None:
            callback(state)
        if rule is not None and check_stop(state, rule, d, cfg):
            state.stop_reason = stop_reason(state, rule, d)
            break
    state.cache = None
    return state


def sa_solve(d: Dataset, cfg: PenaltyConfig, window: SearchWindow, state0: SolverState,
             gamma: float, kernel: KernelSpec = KernelSpec(),
             cooling: CoolingSchedule | None = None, M: int | None = None,
             rule: StoppingRule | None = None, *, max_restarts: int = 10,
             callback: Callable[[SolverState], None] | None = None) -> SolverState:
    """Prox steps on both precision matrices followed by one annealed MH move, M times.

    ``rule`` (optional) may stop the run early; its own ``max_iter`` is
    ignored in favour of ``M``. The seed in ``state0`` fixes the chain.
    """
    if cooling is None and M is None:
        raise ValueError("give a cooling schedule or an iteration count")
    if cooling is None:
        cooling = CoolingSchedule(M=M)
    M = cooling.M if M is None else M
    if M < 1:
        raise ValueError("M must be at least 1")
    if rule is not None:
        rule.validate()
        rule = replace(rule, max_iter=M)
    return run_with_restarts(
        lambda g: _sa_run(d, cfg, window, state0.fresh_copy(), g, kernel, cooling, M, rule,
                          callback),
        gamma, max_restarts)
