"""Deterministic solver routines: brackets, projections, subgradient descent."""

import numpy as np
import pytest

from smoothsaa import kernels as K
from smoothsaa import solvers as sv
from smoothsaa.problems import AvarProblem, LassoProblem, PortfolioProblem
from smoothsaa.smoothing import Sample, SmoothingPlan


# ---------------------------------------------------------------------------
# 1-D golden section
# ---------------------------------------------------------------------------


def test_minimize_quadratic():
    x, fx = sv.minimize_convex_1d(lambda x: (x - 2.0) ** 2, 0.0, 5.0, 1e-9)
    assert abs(x - 2.0) <= 1e-9
    assert fx == pytest.approx(0.0, abs=1e-17)


def test_minimize_abs():
    x, fx = sv.minimize_convex_1d(abs, -1.0, 1.0, 1e-9)
    assert abs(x) <= 1e-9


def test_minimize_smoothed_avar_objective():
    problem = AvarProblem(0.2)
    sample = Sample(np.array([1.0, 2, 3, 4, 5]))
    plan = SmoothingPlan(K.uniform(), 0.5)

    def g(z):
        return problem.smoothed_value(np.array([z]), sample, plan)

    x, fx = sv.minimize_convex_1d(g, 1.0 - 0.5, 5.0 + 0.5, 1e-9)
    # the objective is flat to machine precision within ~sqrt(eps) of 4.5
    assert abs(x - 4.5) <= 1e-6
    assert fx == pytest.approx(5.0, abs=1e-12)


def test_minimize_bad_bracket():
    with pytest.raises(ValueError, match="bracket"):
        sv.minimize_convex_1d(abs, 2.0, 1.0)


def test_minimize_nonfinite_aborts_with_location():
    with pytest.raises(sv.SolverError, match="x="):
        sv.minimize_convex_1d(lambda x: float("nan"), 0.0, 1.0)


def test_batch_golden_matches_scalar():
    rng = np.random.default_rng(11)
    centers = rng.uniform(-3, 3, size=20)

    def f(z):
        return (z - centers) ** 2

    x, fx = sv.golden_section_batch(f, np.full(20, -5.0), np.full(20, 5.0), 1e-9)
    assert np.max(np.abs(x - centers)) <= 1e-9
    for i in range(20):
        xi, _ = sv.minimize_convex_1d(lambda z: (z - centers[i]) ** 2, -5.0, 5.0, 1e-9)
        assert x[i] == pytest.approx(xi, abs=1e-9)


def test_batch_golden_rows_are_independent_of_batch_composition():
    centers = np.array([0.3, -1.2, 2.5, 0.0, 1.9])

    def make(idx):
        c = centers[idx]
        lo = np.full(c.size, -4.0) + 0.1 * idx  # distinct per-row brackets
        hi = np.full(c.size, 6.0)
        x, _ = sv.golden_section_batch(lambda z: (z - c) ** 2, lo, hi, 1e-9)
        return x

    full = make(np.arange(5))
    pieces = np.concatenate([make(np.arange(0, 2)), make(np.arange(2, 5))])
    assert np.array_equal(full, pieces)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def test_project_l1_examples():
    assert np.allclose(sv.project_l1_ball(np.array([3.0, 0.0]), 1.0), [1.0, 0.0])
    assert np.allclose(sv.project_l1_ball(np.array([1.0, 1.0]), 1.0), [0.5, 0.5])
    v = np.array([0.2, -0.1])
    assert np.array_equal(sv.project_l1_ball(v, 1.0), v)


def test_project_l1_idempotent_and_feasible():
    rng = np.random.default_rng(12)
    for _ in range(1000):
        v = rng.normal(scale=3.0, size=rng.integers(1, 6))
        t = float(rng.uniform(0.1, 3.0))
        p = sv.project_l1_ball(v, t)
        assert np.abs(p).sum() <= t + 1e-12
        assert np.allclose(sv.project_l1_ball(p, t), p, atol=1e-12)


def test_project_l1_variational_optimality():
    rng = np.random.default_rng(13)
    for _ in range(200):
        v = rng.normal(scale=2.0, size=3)
        t = 1.0
        p = sv.project_l1_ball(v, t)
        for _ in range(20):
            w = rng.normal(size=3)
            w = t * w / np.abs(w).sum() * rng.uniform(0, 1)
            assert np.dot(v - p, w - p) <= 1e-10


def test_project_box_simplex_examples():
    u = np.array([0.3, 0.7])
    assert np.allclose(sv.project_box_simplex(u, 1.0, [0, 0], [1, 1]), u, atol=1e-12)
    assert np.allclose(sv.project_box_simplex(np.array([1.0, 0.0]), 1.0, [0, 0], [1, 1]),
                       [1.0, 0.0], atol=1e-12)
    assert np.allclose(sv.project_box_simplex(np.array([2.0, 2.0]), 1.0, [0, 0], [1, 1]),
                       [0.5, 0.5], atol=1e-12)


def test_project_box_simplex_feasibility_and_idempotence():
    rng = np.random.default_rng(14)
    for _ in range(1000):
        m = int(rng.integers(1, 6))
        l = rng.uniform(-1, 0, size=m)
        b = l + rng.uniform(0.1, 2.0, size=m)
        cap = float(rng.uniform(l.sum(), b.sum()))
        u = rng.normal(scale=2.0, size=m)
        p = sv.project_box_simplex(u, cap, l, b)
        assert abs(p.sum() - cap) <= 1e-12
        assert np.all(p >= l - 1e-12) and np.all(p <= b + 1e-12)
        assert np.allclose(sv.project_box_simplex(p, cap, l, b), p, atol=1e-11)


def test_project_box_simplex_variational_optimality():
    rng = np.random.default_rng(15)
    l, b, cap = np.zeros(3), np.ones(3), 1.0
    for _ in range(200):
        u = rng.normal(scale=2.0, size=3)
        p = sv.project_box_simplex(u, cap, l, b)
        for _ in range(20):
            w = rng.dirichlet([1.0, 1.0, 1.0])
            assert np.dot(u - p, w - p) <= 1e-10


def test_project_box_simplex_rejects_empty_set():
    with pytest.raises(ValueError, match="sum\\(l\\)"):
        sv.project_box_simplex(np.zeros(2), 0.5, [1.0, 1.0], [2.0, 2.0])
    with pytest.raises(ValueError, match="sum\\(b\\)"):
        sv.project_box_simplex(np.zeros(2), 5.0, [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError, match="l\\[0\\]"):
        sv.project_box_simplex(np.zeros(2), 1.0, [2.0, 0.0], [1.0, 1.0])


# ---------------------------------------------------------------------------
# projected subgradient
# ---------------------------------------------------------------------------


def test_subgradient_unconstrained_quadratic():
    rng = np.random.default_rng(16)
    x_data = rng.normal(3.0, 1.0, size=25)

    def fun(u):
        return float(np.mean((u[0] - x_data) ** 2))

    def grad(u):
        return np.array([2.0 * (u[0] - x_data.mean())])

    report = sv.projected_subgradient(fun, grad, lambda u: u, np.zeros(1),
                                      step_a=5.0, max_iter=20000)
    assert abs(report.minimizer[0] - x_data.mean()) <= 1e-6
    assert report.converged


def test_subgradient_lasso_matches_grid_oracle():
    rng = np.random.default_rng(17)
    n, t = 20, 1.0
    x = rng.normal(size=(n, 2))
    y = x @ np.array([0.8, -0.4]) + 0.1 * rng.normal(size=n)
    problem = LassoProblem.from_xy(y, x, t=t)

    def fun(beta):
        return problem.saa_value(beta)

    def grad(beta):
        return problem.saa_subgradient(beta)

    report = sv.projected_subgradient(
        fun, grad, lambda b: sv.project_l1_ball(b, t), np.zeros(2),
        step_a=2.0, max_iter=5000,
    )
    # exhaustive grid over the l1 ball
    g = np.linspace(-t, t, 801)
    bx, by = np.meshgrid(g, g)
    mask = np.abs(bx) + np.abs(by) <= t
    betas = np.column_stack([bx[mask], by[mask]])
    resid = betas @ x.T - y
    grid_best = float(np.min(np.mean(resid**2, axis=1)))
    assert report.value <= grid_best + 1e-3
    assert report.value >= grid_best - 1e-3


def test_subgradient_portfolio_degenerate_returns():
    returns = np.tile([0.02, 0.05, 0.01], (6, 1))
    problem = PortfolioProblem(returns, kappa=0.5, beta=0.2, capital=1.0,
                               lower=np.zeros(3), upper=np.ones(3))

    def fun(u):
        # eta solved exactly: objective reduces to -<u, r>
        return -float(np.dot(u, returns[0]))

    def grad(u):
        return -returns[0]

    report = sv.projected_subgradient(
        fun, grad, lambda u: sv.project_box_simplex(u, 1.0, problem.lower, problem.upper),
        np.full(3, 1 / 3), step_a=20.0,
    )
    assert report.value == pytest.approx(-0.05, abs=1e-6)
    assert report.minimizer[1] == pytest.approx(1.0, abs=1e-5)


def test_subgradient_validity_of_returned_subgradients():
    rng = np.random.default_rng(18)
    problem = AvarProblem(0.3)
    sample = Sample(rng.normal(0, 2, size=30))
    for _ in range(100):
        x = np.array([rng.uniform(-4, 4)])
        y = np.array([rng.uniform(-4, 4)])
        g = problem.saa_subgradient(x, sample)
        fx = problem.saa_value(x, sample)
        fy = problem.saa_value(y, sample)
        assert fy >= fx + g @ (y - x) - 1e-9


def test_subgradient_divergence_aborts():
    with pytest.raises(sv.SolverError, match="diverged"):
        sv.projected_subgradient(
            lambda x: float(np.exp(x[0])) if x[0] < 700 else float("inf"),
            lambda x: np.array([-1.0]),  # ascent direction: pushes x up
            lambda x: x,
            np.array([0.0]),
            step_a=1e6,
        )


def test_solver_determinism():
    rng = np.random.default_rng(19)
    x = rng.normal(size=(15, 2))
    y = x @ np.array([0.5, -0.2])
    problem = LassoProblem.from_xy(y, x, t=0.8)

    def run():
        return sv.projected_subgradient(
            problem.saa_value, problem.saa_subgradient,
            lambda b: sv.project_l1_ball(b, 0.8), np.zeros(2), step_a=2.0,
        )

    r1, r2 = run(), run()
    assert r1.value == r2.value
    assert np.array_equal(r1.minimizer, r2.minimizer)
    assert r1.iterations == r2.iterations


# ---------------------------------------------------------------------------
# sphere search
# ---------------------------------------------------------------------------


def test_sphere_search_separable():
    from smoothsaa.problems import SvmProblem, svm_values

    problem = SvmProblem([[1.0, 0.0]], [[-1.0, 0.0]])
    report = svm_values(problem)
    assert report.value == pytest.approx(0.0, abs=1e-12)
    assert abs(np.linalg.norm(report.minimizer[:2]) - 1.0) <= 1e-10


def test_sphere_search_symmetric_gamma_zero():
    # classes symmetric about the origin: gamma* = 0 by symmetry
    pts = np.array([[1.0, 0.2], [0.8, -0.1], [1.2, 0.05]])
    from smoothsaa.problems import SvmProblem, svm_values

    problem = SvmProblem(pts, -pts)
    report = svm_values(problem)
    assert abs(report.minimizer[-1]) <= 0.05


def test_sphere_search_matches_finer_grid():
    rng = np.random.default_rng(20)
    c1 = rng.normal([1.0, 0.5], 0.8, size=(10, 2))
    c2 = rng.normal([-1.0, -0.5], 0.8, size=(10, 2))
    from smoothsaa.problems import SvmProblem

    problem = SvmProblem(c1, c2)
    g_lo, g_hi = problem.gamma_interval()
    coarse = sv.sphere_search_2d(
        lambda v, gm: problem.saa_value(np.append(v, gm)), g_lo, g_hi,
        n_angles=90, n_gammas=31, refine_rounds=3,
    )
    fine = sv.sphere_search_2d(
        lambda v, gm: problem.saa_value(np.append(v, gm)), g_lo, g_hi,
        n_angles=360, n_gammas=91, refine_rounds=2,
    )
    spacing_bound = 2 * np.pi / 90 + (g_hi - g_lo) / 30
    assert coarse.value <= fine.value + spacing_bound
