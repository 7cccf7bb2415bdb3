"""Independent reference computations used by the unit and acceptance tests."""
import math

import numpy as np

from ggmcp.model import Dataset, PenaltyConfig, SearchWindow, Side, gaussian_loss, objective_H
from ggmcp.numerics import cholesky_logdet, extreme_eigenvalues
from ggmcp.prox import stepsize_bounds
from ggmcp.solvers import StoppingRule, initialize, mm_approx

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_prox(x, gl, alpha, iters=200):
    """Golden-section minimizer of u -> (u - x)^2/(2 gl) + alpha|u| + (1 - alpha)u^2/2.

    Vectorized over x. Points are compared through the factored difference
    f(c) - f(d), which keeps full relative precision near the minimum.
    """
    x = np.asarray(x, dtype=float)
    gl = np.broadcast_to(np.asarray(gl, dtype=float), x.shape)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), x.shape)
    a = np.minimum(x, 0.0) - 1.0
    b = np.maximum(x, 0.0) + 1.0

    def diff(c, d):
        s = c + d
        return ((c - d) * ((s - 2 * x) / (2 * gl) + (1 - alpha) * s / 2)
                + alpha * (np.abs(c) - np.abs(d)))

    for _ in range(iters):
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        left = diff(c, d) < 0
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    return 0.5 * (a + b)


def naive_line_search(th1, th2, d, cfg, window):
    values = np.array([objective_H(t, th1, th2, d, cfg).total for t in window.taus])
    return int(window.taus[int(np.argmin(values))]), values


def clip_spectrum(m, lo, hi):
    w, v = np.linalg.eigh(m)
    return cholesky_logdet((v * np.clip(w, lo, hi)) @ v.T)


def stability_margins(seed: int, iters: int = 500):
    """Approximate MM at gamma = gamma_max from a start inside M(b_j, B_j).

    Returns the worst (lambda_min - b_j) and (B_j - lambda_max) over all
    iterates and both sides, plus the instance size.
    """
    rng = np.random.default_rng(seed)
    p = int(rng.integers(2, 21))
    T = int(rng.integers(max(40, 2 * p), 201))
    alpha = float(rng.uniform(0.3, 0.97))
    lam = float(rng.uniform(0.05, 0.5))
    tau_star = int(rng.integers(T // 4, 3 * T // 4))
    a1, a2 = rng.standard_normal((2, p, p))
    X = rng.standard_normal((T, p))
    X[:tau_star] @= np.eye(p) + 0.3 * a1
    X[tau_star:] @= np.eye(p) + 0.3 * a2
    d = Dataset(X)
    cfg = PenaltyConfig(alpha=alpha, lambda_base=lam)
    window = SearchWindow.from_fraction(T, 0.1)
    bounds = stepsize_bounds(d, cfg, window, exact=True)
    state = initialize(d, cfg, window, seed, epsilon=0.2)
    state.theta1 = clip_spectrum(state.theta1.mat, bounds.b1, bounds.B1)
    state.theta2 = clip_spectrum(state.theta2.mat, bounds.b2, bounds.B2)
    worst = [math.inf, math.inf]

    def check(st):
        for side, th in ((Side.LEFT, st.theta1), (Side.RIGHT, st.theta2)):
            lo, hi = extreme_eigenvalues(th.mat)
            worst[0] = min(worst[0], lo - bounds.lower(side))
            worst[1] = min(worst[1], bounds.upper(side) - hi)

    check(state)
    rule = StoppingRule(max_iter=iters, practical_tol=0.0)
    final = mm_approx(d, cfg, window, state, bounds.gamma_max, rule, max_restarts=0,
                      callback=check)
    return worst[0], worst[1], final.k, (p, T)


def strong_convexity_gap(theta, vartheta, S):
    """g(v) - g(t) - <grad g(t), v - t> minus the lower bound, g = -logdet + Tr(. S)."""
    def g(m):
        return gaussian_loss(cholesky_logdet(m), S)

    diff = vartheta - theta
    grad = S - np.linalg.inv(theta)
    lhs = g(vartheta) - g(theta) - np.sum(grad * diff)
    n2 = np.linalg.norm(theta, 2)
    fro = np.linalg.norm(diff)
    return lhs - fro**2 / (4 * n2 * (n2 + 0.5 * fro))


def stationary_law(values, beta):
    w = np.exp(-(values - values.min()) / beta)
    return w / w.sum()


def total_variation(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
