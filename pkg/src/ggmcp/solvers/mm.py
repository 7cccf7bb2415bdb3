"""Brute-force search, exact MM and approximate MM change-point solvers."""
from __future__ import annotations

import warnings
from typing import Callable, NamedTuple

import numpy as np
from numpy.typing import NDArray

from ..model import (Dataset, PenaltyConfig, SearchWindow, Side, lambda_at, line_search_H,
                     objective_H, scatter)
from ..numerics import SpdMatrix
from ..prox import GlassoSettings, glasso_core, glasso_solve, stepsize_bounds
from .state import (SolverState, StoppingRule, check_stop, default_epsilon, initial_thetas,
                    prox_pair, run_with_restarts, stop_reason, track_stability)


class BruteForceResult(NamedTuple):
    tau_hat: int
    theta1_hat: SpdMatrix
    theta2_hat: SpdMatrix
    G_profile: NDArray


def brute_force(d: Dataset, cfg: PenaltyConfig, window: SearchWindow,
                inner: GlassoSettings = GlassoSettings(), *,
                epsilon: float | None = None, warm_start: bool = True) -> BruteForceResult:
    """Solve both glasso problems at every tau in the window and take the best.

    Each tau is warm-started from the previous tau's solutions unless
    ``warm_start`` is off, in which case every tau starts from the
    regularized inverse scatter.
    """
    T, p = d.T, d.p
    taus = window.taus
    profile = np.empty(taus.size)
    best: tuple[SpdMatrix, SpdMatrix] | None = None
    A = d.left_sum(window.lo)
    total = d.total_scatter
    theta1 = theta2 = None
    for i, tau in enumerate(taus.tolist()):
        if tau > window.lo:
            x = d.X[tau - 1]
            A += np.outer(x, x)
        if theta1 is None or not warm_start:
            eps = default_epsilon(p, tau, T) if epsilon is None else epsilon
            theta1, theta2 = initial_thetas(d, tau, eps)
        S1, S2 = A / tau, (total - A) / (T - tau)
        lam1 = lambda_at(Side.LEFT, tau, cfg, d)
        lam2 = lambda_at(Side.RIGHT, tau, cfg, d)
        theta1, _, f1 = glasso_core(S1, tau / T, lam1, theta1, inner.gamma, inner.tol,
                                    inner.max_iter, cfg, tau=tau)
        theta2, _, f2 = glasso_core(S2, (T - tau) / T, lam2, theta2, inner.gamma, inner.tol,
                                    inner.max_iter, cfg, tau=tau)
        profile[i] = f1 + f2
        if best is None or profile[i] < profile[:i].min():
            best = (theta1, theta2)
    i_best = int(np.argmin(profile))
    return BruteForceResult(int(taus[i_best]), best[0], best[1], profile)


def mm_exact(d: Dataset, cfg: PenaltyConfig, window: SearchWindow, state0: SolverState,
             inner: GlassoSettings = GlassoSettings(), max_outer: int = 100) -> SolverState:
    """Majorize-minimize with full inner glasso solves.

    Each outer step solves both glasso problems at the current tau
    (warm-started from the previous solutions), records
    G(tau) = H(tau | theta_hat), then moves tau to the minimizer of
    H(. | theta_hat). Stops at a fixed point or after ``max_outer`` steps.
    """
    state = state0.fresh_copy()
    state.gamma = inner.gamma
    theta1, theta2, tau = state.theta1, state.theta2, state.tau
    while True:
        theta1, _, _ = glasso_solve(Side.LEFT, tau, theta1, inner.gamma, inner.tol,
                                    inner.max_iter, d, cfg)
        theta2, _, _ = glasso_solve(Side.RIGHT, tau, theta2, inner.gamma, inner.tol,
                                    inner.max_iter, d, cfg)
        state.theta1, state.theta2 = theta1, theta2
        state.tau_trace.append(tau)
        state.objective_trace.append(objective_H(tau, theta1, theta2, d, cfg, window).total)
        new_tau, _ = line_search_H(theta1, theta2, d, cfg, window)
        state.k += 1
        if new_tau == tau:
            state.stop_reason = "fixed_point"
            break
        if state.k >= max_outer:
            state.stop_reason = "max_iter"
            break
        tau = new_tau
    state.tau = tau
    return state


def _mm_approx_run(d: Dataset, cfg: PenaltyConfig, window: SearchWindow, state: SolverState,
                   gamma: float, rule: StoppingRule,
                   callback: Callable[[SolverState], None] | None) -> SolverState:
    state.tau_trace.append(state.tau)
    state.objective_trace.append(
        objective_H(state.tau, state.theta1, state.theta2, d, cfg, window).total)
    while True:
        prev = (state.tau, state.theta1.mat, state.theta2.mat)
        S1 = scatter(Side.LEFT, state.tau, d)
        S2 = scatter(Side.RIGHT, state.tau, d)
        state.theta1, state.theta2 = prox_pair(state.theta1, state.theta2, state.tau,
                                               S1, S2, gamma, d, cfg)
        tau, values = line_search_H(state.theta1, state.theta2, d, cfg, window)
        state.tau = tau
        state.k += 1
        state.tau_trace.append(tau)
        state.objective_trace.append(float(values[tau - window.lo]))
        track_stability(state, *prev, d.T, rule.practical_tol)
        if callback is not None:
            callback(state)
        if check_stop(state, rule, d, cfg):
            break
    state.stop_reason = stop_reason(state, rule, d)
    return state


def mm_approx(d: Dataset, cfg: PenaltyConfig, window: SearchWindow, state0: SolverState,
              gamma: float, rule: StoppingRule = StoppingRule(), *,
              max_restarts: int = 10, check_gamma: bool = False,
              callback: Callable[[SolverState], None] | None = None) -> SolverState:
    """Approximate MM: one prox step per precision matrix, then an exact line search.

    The objective trace holds F_k = H(tau_k | theta1_k, theta2_k), starting
    with k = 0. On divergence the run restarts from ``state0`` with half the
    step-size, at most ``max_restarts`` times.
    """
    rule.validate()
    if check_gamma:
        gmax = stepsize_bounds(d, cfg, window).gamma_max
        if gamma > gmax:
            warnings.warn(f"step-size {gamma:g} exceeds the stability bound {gmax:.3g}; "
                          "relying on restarts", stacklevel=2)
    return run_with_restarts(
        lambda g: _mm_approx_run(d, cfg, window, state0.fresh_copy(), g, rule, callback),
        gamma, max_restarts)
