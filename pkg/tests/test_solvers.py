import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import two_regime
from ggmcp.errors import Diverged, MissingReference, NotPositiveDefinite
from ggmcp.model import Dataset, PenaltyConfig, SearchWindow, Side, line_search_H, objective_H
from ggmcp.numerics import cholesky_logdet
from ggmcp.prox import GlassoSettings, glasso_solve, stepsize_bounds
from ggmcp.solvers import (CoolingSchedule, KernelSpec, StoppingRule, acceptance_probability,
                           brute_force, check_stop, initial_thetas, initialize, mh_step,
                           mm_approx, mm_exact, sa_solve)
from ggmcp.solvers.state import SolverState

TIGHT = GlassoSettings(gamma=0.5, tol=1e-12, max_iter=20000)
# stable for the small precision (1/25) of the high-variance regime
SCALAR = GlassoSettings(gamma=0.01, tol=1e-9, max_iter=100000)


def variance_jump(T=200, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((T, 1))
    x[T // 2:] *= 5.0
    return Dataset(x)


# ---------------------------------------------------------------- initialization

def test_initialize_scalar_inverse_second_moment():
    d = Dataset(np.array([[2.0], [-2.0]] * 20))
    st_ = initialize(d, PenaltyConfig(), SearchWindow(4, 40), seed=1, epsilon=0.0)
    assert st_.theta1.mat[0, 0] == pytest.approx(0.25)
    assert st_.theta2.mat[0, 0] == pytest.approx(0.25)


def test_initialize_singular_scatter():
    d = Dataset(np.random.default_rng(0).standard_normal((8, 10)))
    with pytest.raises(NotPositiveDefinite):
        initialize(d, PenaltyConfig(), SearchWindow(2, 8), seed=0, epsilon=0.0)
    st_ = initialize(d, PenaltyConfig(), SearchWindow(2, 8), seed=0)
    assert st_.theta1.dim == 10


def test_initialize_deterministic_and_in_window():
    d = two_regime(4, 100, 50, 0)
    w = SearchWindow.from_fraction(100, 0.1)
    a, b = initialize(d, PenaltyConfig(), w, 7), initialize(d, PenaltyConfig(), w, 7)
    assert a.tau == b.tau and a.tau in w
    np.testing.assert_array_equal(a.theta1.mat, b.theta1.mat)
    taus = {initialize(d, PenaltyConfig(), w, s).tau for s in range(60)}
    assert len(taus) > 20 and all(t in w for t in taus)


# ---------------------------------------------------------------- brute force

def test_brute_force_singleton_window():
    d = two_regime(3, 30, 15, 0)
    res = brute_force(d, PenaltyConfig(), SearchWindow(15, 30))
    assert res.tau_hat == 15 and res.G_profile.size == 1


def test_brute_force_scalar_variance_jump():
    d = variance_jump()
    res = brute_force(d, PenaltyConfig(lambda_base=0.0), SearchWindow.from_fraction(200, 0.05),
                      SCALAR)
    assert abs(res.tau_hat - 100) <= 1
    # closed-form profile of the unpenalized scalar problem
    x2 = d.X[:, 0] ** 2
    taus = np.arange(10, 191)
    c = np.cumsum(x2)
    s1, s2 = c[taus - 1] / taus, (c[-1] - c[taus - 1]) / (200 - taus)
    closed = 0.5 * (taus * (np.log(s1) + 1) + (200 - taus) * (np.log(s2) + 1)) / 200
    np.testing.assert_allclose(res.G_profile, closed, atol=1e-8)


def test_brute_force_profile_matches_cold_solves():
    d = two_regime(5, 60, 30, 3)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(60, 0.1)
    warm = brute_force(d, cfg, w, TIGHT)
    cold = brute_force(d, cfg, w, TIGHT, warm_start=False)
    np.testing.assert_allclose(warm.G_profile, cold.G_profile, atol=1e-6)
    assert warm.tau_hat == cold.tau_hat


# ---------------------------------------------------------------- exact MM

def test_mm_exact_fixed_point_at_brute_force_argmin():
    d = two_regime(4, 60, 30, 1)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(60, 0.1)
    bf = brute_force(d, cfg, w, TIGHT)
    start = SolverState(tau=bf.tau_hat, theta1=bf.theta1_hat, theta2=bf.theta2_hat)
    st_ = mm_exact(d, cfg, w, start, TIGHT)
    assert st_.k == 1 and st_.stop_reason == "fixed_point" and st_.tau == bf.tau_hat
    assert st_.objective_trace[-1] <= bf.G_profile.min() + 1e-6


def test_mm_exact_singleton_window():
    d = two_regime(3, 30, 15, 0)
    w = SearchWindow(15, 30)
    st_ = mm_exact(d, PenaltyConfig(), w, initialize(d, PenaltyConfig(), w, 0))
    assert st_.k == 1 and st_.tau == 15 and st_.stop_reason == "fixed_point"


@pytest.mark.parametrize("seed", range(4))
def test_mm_exact_descent(seed):
    d = two_regime(4, 80, 30, seed)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(80, 0.05)
    gamma = stepsize_bounds(d, cfg, w).gamma_max
    st_ = mm_exact(d, cfg, w, initialize(d, cfg, w, seed), GlassoSettings(gamma, 1e-9, 3000))
    assert np.all(np.diff(st_.objective_trace) <= 1e-8)


# ---------------------------------------------------------------- approximate MM

def test_mm_approx_scalar_variance_jump():
    d = variance_jump()
    cfg = PenaltyConfig(lambda_base=0.0)
    w = SearchWindow.from_fraction(200, 0.05)
    bf = brute_force(d, cfg, w, SCALAR)
    st_ = mm_approx(d, cfg, w, initialize(d, cfg, w, 3), 0.01, StoppingRule(max_iter=20000))
    assert abs(st_.tau - 100) / 200 < 0.005
    assert abs(st_.tau - bf.tau_hat) <= 1


@pytest.mark.parametrize("seed", range(3))
def test_mm_approx_descent_and_traces(seed):
    d = two_regime(4, 80, 40, seed)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(80, 0.05)
    gamma = stepsize_bounds(d, cfg, w).gamma_max
    st_ = mm_approx(d, cfg, w, initialize(d, cfg, w, seed), gamma, StoppingRule(max_iter=300))
    assert len(st_.tau_trace) == len(st_.objective_trace) == st_.k + 1
    assert np.all(np.diff(st_.objective_trace) <= 1e-8)
    h = objective_H(st_.tau, st_.theta1, st_.theta2, d, cfg).total
    assert st_.objective_trace[-1] == pytest.approx(h, rel=1e-10)


def test_mm_approx_tracks_glasso_solution():
    d = two_regime(3, 60, 30, 2)
    cfg = PenaltyConfig(lambda_base=0.3)
    w = SearchWindow.from_fraction(60, 0.1)
    st_ = mm_approx(d, cfg, w, initialize(d, cfg, w, 0), 0.5,
                    StoppingRule(max_iter=2000, practical_tol=0.0))
    assert st_.k == 2000
    for side, th in ((Side.LEFT, st_.theta1), (Side.RIGHT, st_.theta2)):
        ref, _, _ = glasso_solve(side, st_.tau, th, 0.5, 1e-13, 50000, d, cfg)
        assert np.linalg.norm(th.mat - ref.mat) < 1e-3


def test_mm_approx_stationary_start():
    d = two_regime(4, 60, 30, 4)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(60, 0.1)
    bf = brute_force(d, cfg, w, TIGHT)
    start = SolverState(tau=bf.tau_hat, theta1=bf.theta1_hat, theta2=bf.theta2_hat)
    st_ = mm_approx(d, cfg, w, start, 0.5, StoppingRule(max_iter=50))
    assert set(st_.tau_trace) == {bf.tau_hat}


@pytest.mark.slow
def test_mm_approx_agrees_with_brute_force():
    # the t500 preset (lambda 0.01, step 3.5); at lambda 0.13 the penalty dominates these
    # short series and both profiles are nearly flat
    cfg = PenaltyConfig(lambda_base=0.01)
    inner = GlassoSettings(gamma=3.5, tol=1e-6, max_iter=5000)
    hits = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        p, T = int(rng.integers(2, 6)), int(rng.integers(40, 61))
        d = two_regime(p, T, T // 2, seed)
        w = SearchWindow.from_fraction(T, 0.1)
        bf = brute_force(d, cfg, w, inner)
        st_ = mm_approx(d, cfg, w, initialize(d, cfg, w, seed), 3.5, StoppingRule(max_iter=5000))
        hits += abs(st_.tau - bf.tau_hat) <= 2
    assert hits >= 45


def test_restart_halves_step():
    d = two_regime(4, 80, 40, 0)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(80, 0.05)
    st_ = mm_approx(d, cfg, w, initialize(d, cfg, w, 0), 400.0, StoppingRule(max_iter=20))
    assert st_.restarts > 0 and st_.gamma == 400.0 / 2**st_.restarts
    with pytest.raises(Diverged):
        mm_approx(d, cfg, w, initialize(d, cfg, w, 0), 1e6, StoppingRule(max_iter=20),
                  max_restarts=0)


def test_check_gamma_warns():
    d = two_regime(4, 80, 40, 0)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(80, 0.05)
    with pytest.warns(UserWarning):
        mm_approx(d, cfg, w, initialize(d, cfg, w, 0), 10.0, StoppingRule(max_iter=2),
                  check_gamma=True)


# ---------------------------------------------------------------- stopping rules

def _state(tau, th1, th2, k=1):
    return SolverState(tau=tau, theta1=th1, theta2=th2, k=k)


def test_stopping_rules():
    d = Dataset(np.random.default_rng(0).standard_normal((400, 2)))
    cfg = PenaltyConfig()
    th = cholesky_logdet(np.eye(2))
    v1 = StoppingRule("v1", true_tau=200, reference_thetas=(np.eye(2), np.eye(2)))
    assert check_stop(_state(200, th, th), v1, d, cfg)
    v2 = StoppingRule("v2", true_tau=200)
    assert not check_stop(_state(202, th, th), v2, d, cfg)      # exactly 0.005 T
    assert check_stop(_state(201, th, th), v2, d, cfg)
    far = cholesky_logdet(2 * np.eye(2))
    assert not check_stop(_state(200, far, th), v1, d, cfg)
    assert check_stop(_state(100, th, th, k=1000), StoppingRule(), d, cfg)
    practical = StoppingRule(practical_window=25)
    s = _state(100, th, th)
    s.stable_count = 24
    assert not check_stop(s, practical, d, cfg)
    s.stable_count = 25
    assert check_stop(s, practical, d, cfg)
    with pytest.raises(MissingReference):
        check_stop(s, StoppingRule("v1", true_tau=200), d, cfg)
    with pytest.raises(MissingReference):
        check_stop(s, StoppingRule("v2"), d, cfg)


def test_practical_rule_fires_on_stationary_run():
    d = two_regime(3, 60, 30, 0)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(60, 0.1)
    st_ = mm_approx(d, cfg, w, initialize(d, cfg, w, 0), 0.5, StoppingRule(max_iter=100000))
    assert st_.stop_reason == "practical" and st_.k < 100000


# ---------------------------------------------------------------- annealing

def test_cooling_schedule():
    c = CoolingSchedule(M=500)
    assert c.beta(0) == 1.0
    assert c.beta(500) == pytest.approx(1e-3, rel=1e-12)
    b = [c.beta(k) for k in range(501)]
    assert np.all(np.diff(b) < 0)
    with pytest.raises(ValueError):
        CoolingSchedule(M=0)


def test_acceptance_probability_examples():
    assert acceptance_probability(1.0, 0.5, 1e-6) == 1.0
    assert acceptance_probability(1.0, 1.0, 0.3) == 1.0
    assert acceptance_probability(0.0, 0.7 * math.log(2), 0.7) == pytest.approx(0.5)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(1e-3, 10))
def test_acceptance_probability_closed_form(h0, h1, beta):
    a = acceptance_probability(h0, h1, beta)
    assert 0.0 <= a <= 1.0
    if h1 <= h0:
        assert a == 1.0
    else:
        assert a == pytest.approx(math.exp(-(h1 - h0) / beta), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("kind", ["independence", "random_walk", "mixture"])
def test_mh_step_stays_in_window(kind):
    d = two_regime(3, 60, 30, 0)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(60, 0.2)
    s = initialize(d, cfg, w, 0)
    rng = np.random.default_rng(0)
    for _ in range(300):
        tau, accepted, h = mh_step(s, 0.05, KernelSpec(kind, sigma=5.0), d, cfg, w, rng)
        assert tau in w and math.isfinite(h)
        s.tau = tau


def test_mh_step_same_proposal_always_accepted():
    d = two_regime(2, 30, 15, 0)
    cfg = PenaltyConfig()
    w = SearchWindow(15, 30)
    s = initialize(d, cfg, w, 0)
    rng = np.random.default_rng(1)
    assert all(mh_step(s, 1e-9, KernelSpec(), d, cfg, w, rng)[1] for _ in range(50))


def test_mh_step_h_matches_objective():
    d = two_regime(3, 60, 30, 0)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(60, 0.1)
    s = initialize(d, cfg, w, 0)
    _, values = line_search_H(s.theta1, s.theta2, d, cfg, w)
    rng = np.random.default_rng(2)
    for _ in range(100):
        tau, accepted, h = mh_step(s, 1.0, KernelSpec(), d, cfg, w, rng)
        if accepted:
            assert h == pytest.approx(values[tau - w.lo], rel=1e-10)
        s.tau = tau


@pytest.mark.parametrize("kind", ["independence", "random_walk", "mixture"])
def test_sa_reproducible(kind):
    d = two_regime(3, 80, 40, 5)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(80, 0.05)
    s0 = initialize(d, cfg, w, 11)
    a = sa_solve(d, cfg, w, s0, 0.5, KernelSpec(kind), M=200)
    b = sa_solve(d, cfg, w, s0, 0.5, KernelSpec(kind), M=200)
    assert a.tau_trace == b.tau_trace and a.objective_trace == b.objective_trace
    assert a.k == 200 and len(a.beta_trace) == 201
    assert a.beta_trace[-1] == pytest.approx(1e-3)


def test_sa_stops_on_v2():
    d = two_regime(3, 200, 100, 0)
    cfg = PenaltyConfig(lambda_base=0.01)
    w = SearchWindow.from_fraction(200, 0.05)
    st_ = sa_solve(d, cfg, w, initialize(d, cfg, w, 0), 0.5, M=5000,
                   rule=StoppingRule("v2", true_tau=100))
    assert st_.stop_reason == "v2" and st_.k < 5000


def test_mm_approx_reproducible():
    d = two_regime(3, 80, 40, 5)
    cfg = PenaltyConfig()
    w = SearchWindow.from_fraction(80, 0.05)
    a = mm_approx(d, cfg, w, initialize(d, cfg, w, 3), 0.5)
    b = mm_approx(d, cfg, w, initialize(d, cfg, w, 3), 0.5)
    assert a.tau_trace == b.tau_trace and a.objective_trace == b.objective_trace


def test_initial_thetas_are_ridge_inverses():
    d = two_regime(3, 40, 20, 0)
    th1, th2 = initial_thetas(d, 10, 0.2)
    S1 = d.X[:10].T @ d.X[:10] / 10
    np.testing.assert_allclose(th1.mat, np.linalg.inv(S1 + 0.2 * np.eye(3)), rtol=1e-10)
