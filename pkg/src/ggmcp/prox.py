"""Elastic-net proximal map, proximal-gradient steps and step-size bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import Diverged, NotPositiveDefinite
from .model import (Dataset, PenaltyConfig, SearchWindow, Side, gaussian_loss, lambda_at,
                    lambdas, penalty, scatter, side_weight)
from .numerics import SpdMatrix, cholesky_logdet, extreme_eigenvalues, fro_norm

MU_SAFETY = 1.05
MU_SCAN_POINTS = 256


@dataclass(frozen=True)
class GlassoSettings:
    gamma: float = 0.25
    tol: float = 1e-6
    max_iter: int = 500


@dataclass(frozen=True)
class StepSizeBounds:
    b1: float
    B1: float
    b2: float
    B2: float
    mu1: float
    mu2: float
    lambda_bar: tuple[float, float]
    lambda_underbar: tuple[float, float]

    @property
    def gamma_max(self) -> float:
        return min(self.b1**2, self.b2**2)

    def lower(self, side: Side) -> float:
        return self.b1 if Side(side) is Side.LEFT else self.b2

    def upper(self, side: Side) -> float:
        return self.B1 if Side(side) is Side.LEFT else self.B2


def prox_elastic_net(theta: NDArray, gamma_lambda: float, alpha: float, *,
                     penalize_diagonal: bool = True) -> NDArray:
    """Entrywise soft-threshold at alpha*gamma_lambda, then shrink by 1/(1 + (1-alpha)*gamma_lambda)."""
    theta = np.asarray(theta, dtype=np.float64)
    shrink = 1.0 / (1.0 + (1.0 - alpha) * gamma_lambda)
    out = np.sign(theta) * np.maximum(np.abs(theta) - alpha * gamma_lambda, 0.0) * shrink
    if not penalize_diagonal:
        np.fill_diagonal(out, np.diag(theta) * shrink)
    return out


def prox_step(theta: SpdMatrix, S: NDArray, weight: float, lam: float, gamma: float,
              cfg: PenaltyConfig) -> NDArray:
    """One proximal-gradient step for (weight/2)[-logdet + Tr(theta S)] + lam * penalty."""
    scale = 0.5 * weight if cfg.weighted_gradient else 1.0
    v = theta.mat - gamma * scale * (S - theta.inverse())
    out = prox_elastic_net(v, gamma * lam, cfg.alpha, penalize_diagonal=cfg.penalize_diagonal)
    return 0.5 * (out + out.T)


def prox_gradient_step(side: Side, tau: int, theta: SpdMatrix, gamma: float, d: Dataset,
                       cfg: PenaltyConfig) -> NDArray:
    """Prox_{gamma lambda_{j,tau}}(theta - gamma * grad g_{j,tau}(theta)).

    The result may fail to be positive definite when gamma is too large; the
    caller finds out when it re-factorizes.
    """
    S = scatter(side, tau, d)
    return prox_step(theta, S, side_weight(side, tau, d.T), lambda_at(side, tau, cfg, d),
                     gamma, cfg)


def factor_or_diverge(m: NDArray, tau: int | None = None) -> SpdMatrix:
    try:
        return cholesky_logdet(m)
    except NotPositiveDefinite:
        raise Diverged("iterate left the positive definite cone", tau=tau) from None


def _relative_change(new: NDArray, old: NDArray) -> float:
    return fro_norm(new - old, "full") / max(1.0, fro_norm(old, "full"))


def glasso_core(S: NDArray, weight: float, lam: float, theta0: SpdMatrix, gamma: float,
                tol: float, max_iter: int, cfg: PenaltyConfig, *, tau: int | None = None,
                objective_trace: list | None = None) -> tuple[SpdMatrix, int, float]:
    """Iterate prox steps on a fixed (S, weight, lam) problem."""

    def objective(th: SpdMatrix) -> float:
        return 0.5 * weight * gaussian_loss(th, S) + lam * penalty(th.mat, cfg)

    theta = theta0
    if objective_trace is not None:
        objective_trace.append(objective(theta))
    k = 0
    while k < max_iter:
        new = factor_or_diverge(prox_step(theta, S, weight, lam, gamma, cfg), tau)
        k += 1
        change = _relative_change(new.mat, theta.mat)
        theta = new
        if objective_trace is not None:
            objective_trace.append(objective(theta))
        if change < tol:
            break
    return theta, k, objective(theta)


def glasso_solve(side: Side, tau: int, theta0: SpdMatrix, gamma: float, tol: float,
                 max_iter: int, d: Dataset, cfg: PenaltyConfig, *,
                 objective_trace: list | None = None) -> tuple[SpdMatrix, int, float]:
    """Minimize g_{j,tau} + lambda_{j,tau} * penalty by proximal gradient.

    Stops when the relative Frobenius change drops below ``tol`` or after
    ``max_iter`` steps. Raises Diverged if an iterate is not positive definite.
    """
    S = scatter(side, tau, d)
    return glasso_core(S, side_weight(side, tau, d.T), lambda_at(side, tau, cfg, d), theta0,
                       gamma, tol, max_iter, cfg, tau=tau, objective_trace=objective_trace)


def quadratic_bounds(mu: float, lam_bar: float, lam_under: float, alpha: float,
                     n0_over_T: float) -> tuple[float, float]:
    """Roots b, B of (1-a)lam_bar b^2 + mu b - n0/2T = 0 and (1-a)lam_under B^2 - mu B - 1/2 = 0."""
    # positive root in the cancellation-free form 2k / (mu + sqrt(mu^2 + 4ak))
    a, k = (1.0 - alpha) * lam_bar, 0.5 * n0_over_T
    b = 2.0 * k / (mu + math.sqrt(mu * mu + 4.0 * a * k))
    a = (1.0 - alpha) * lam_under
    B = (mu + math.sqrt(mu * mu + 2.0 * a)) / (2.0 * a) if a > 0 else math.inf
    return b, B


def stepsize_bounds(d: Dataset, cfg: PenaltyConfig, window: SearchWindow, *,
                    exact: bool = False) -> StepSizeBounds:
    """Stability constants b_j, B_j (and gamma_max = min b_j^2).

    ``||S_j(tau)||_2`` is maximized over every tau in the window when ``exact``;
    otherwise over a strided subset, inflated by a 5% safety factor.
    """
    taus = window.taus
    T, p = d.T, d.p
    stride = 1 if exact else max(1, window.size // MU_SCAN_POINTS)
    scan = set(taus[::stride].tolist()) | {window.lo, window.hi}

    norms1, norms2 = [], []
    A = d.left_sum(window.lo)
    total = d.total_scatter
    for t in range(window.lo, window.hi + 1):
        if t > window.lo:
            x = d.X[t - 1]
            A += np.outer(x, x)
        if t in scan:
            norms1.append(extreme_eigenvalues(A / t)[1])
            norms2.append(extreme_eigenvalues((total - A) / (T - t))[1])
    norms1, norms2 = np.array(norms1), np.array(norms2)

    lam1 = lambdas(Side.LEFT, taus, cfg, T, p)
    lam2 = lambdas(Side.RIGHT, taus, cfg, T, p)
    if exact:
        mu1 = float(np.max(0.5 * norms1 + cfg.alpha * p * lam1))
        mu2 = float(np.max(0.5 * norms2 + cfg.alpha * p * lam2))
    else:
        mu1 = 0.5 * MU_SAFETY * float(norms1.max()) + cfg.alpha * p * float(lam1.max())
        mu2 = 0.5 * MU_SAFETY * float(norms2.max()) + cfg.alpha * p * float(lam2.max())
    n0T = window.n0 / T
    b1, B1 = quadratic_bounds(mu1, float(lam1.max()), float(lam1.min()), cfg.alpha, n0T)
    b2, B2 = quadratic_bounds(mu2, float(lam2.max()), float(lam2.min()), cfg.alpha, n0T)
    return StepSizeBounds(b1=b1, B1=B1, b2=b2, B2=B2, mu1=mu1, mu2=mu2,
                          lambda_bar=(float(lam1.max()), float(lam2.max())),
                          lambda_underbar=(float(lam1.min()), float(lam2.min())))
