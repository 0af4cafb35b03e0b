"""Smoothed objective assembly, quadrature rules, and the bias-bound constant."""

import numpy as np
import pytest

from smoothsaa import kernels as K
from smoothsaa import smoothing as sm
from smoothsaa.problems import (
    AvarProblem,
    LassoProblem,
    PortfolioProblem,
    QuadraticLocationProblem,
    SvmProblem,
)

ALL_KERNELS = [K.uniform(), K.epanechnikov(), K.gaussian()]


# ---------------------------------------------------------------------------
# plans, samples, moduli
# ---------------------------------------------------------------------------


def test_plan_validation():
    with pytest.raises(ValueError, match="h"):
        sm.SmoothingPlan(K.uniform(), -0.1)
    with pytest.raises(ValueError, match="strategy"):
        sm.SmoothingPlan(K.uniform(), 0.1, strategy="exact")
    with pytest.raises(ValueError, match="nodes"):
        sm.SmoothingPlan(K.uniform(), 0.1, nodes=1)
    assert sm.SmoothingPlan(K.uniform(), 0.0).h == 0.0


def test_plan_dispatch_order():
    plan = sm.SmoothingPlan(K.uniform(), 0.2)
    assert plan.resolve(analytic_registered=True) == sm.ANALYTIC
    assert plan.resolve(analytic_registered=False) == sm.QUADRATURE
    plan_g = sm.SmoothingPlan(K.gaussian(np.eye(3)), 0.2)
    assert plan_g.resolve(analytic_registered=False) == sm.MONTE_CARLO
    forced = sm.SmoothingPlan(K.uniform(), 0.2, strategy=sm.MONTE_CARLO)
    assert forced.resolve(analytic_registered=True) == sm.MONTE_CARLO


def test_sample_validation():
    s = sm.Sample(np.array([1.0, 2.0, 3.0]))
    assert s.n == 3 and s.dim == 1
    assert np.array_equal(s.column(), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="finite"):
        sm.Sample(np.array([1.0, np.nan]))
    with pytest.raises(ValueError, match="non-empty"):
        sm.Sample(np.empty((0, 2)))
    with pytest.raises(ValueError, match="one-dimensional"):
        sm.Sample(np.ones((3, 2))).column()


def test_modulus_validation():
    spec = sm.ModulusSpec(((2.0, 1.0), (3.0, 2.0)))
    assert spec.value(2.0) == pytest.approx(2 * 2 + 3 * 4)
    with pytest.raises(ValueError, match="term"):
        sm.ModulusSpec(())
    with pytest.raises(ValueError, match="exponent"):
        sm.ModulusSpec(((1.0, 2.5),))
    with pytest.raises(ValueError, match="coefficient"):
        sm.ModulusSpec(((-1.0, 1.0),))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kernel", ALL_KERNELS)
@pytest.mark.parametrize("n", [2, 8, 64])
def test_quadrature_weights_sum_to_one(kernel, n):
    _, w = sm.quadrature_nodes(kernel, n)
    assert np.sum(w) == pytest.approx(1.0, abs=1e-12)


def test_quadrature_nodes_symmetric_pair():
    z, w = sm.quadrature_nodes(K.uniform(), 2)
    assert z[0] == pytest.approx(-z[1], abs=1e-15)
    assert w[0] == pytest.approx(w[1], abs=1e-15)


def test_quadrature_nodes_within_support():
    for kernel in (K.uniform(), K.epanechnikov()):
        z, _ = sm.quadrature_nodes(kernel, 64)
        assert np.all(np.abs(z) <= 1.0)


def test_quadrature_second_moment():
    z, w = sm.quadrature_nodes(K.epanechnikov(), 64)
    assert np.sum(w * z * z) == pytest.approx(0.2, abs=1e-10)


def test_quadrature_node_count_validation():
    with pytest.raises(ValueError, match="nodes"):
        sm.quadrature_nodes(K.uniform(), 1)


@pytest.mark.parametrize("kernel", ALL_KERNELS)
def test_hinge_quadrature_matches_closed_form(kernel):
    s = np.linspace(-5.0, 5.0, 201)
    for h in (0.05, 0.35, 1.0):
        analytic = K.smoothed_hinge(kernel, s, h)
        quad = sm.smoothed_hinge_quadrature(kernel, s, h)
        assert np.max(np.abs(analytic - quad)) <= 1e-8


@pytest.mark.parametrize("kernel", ALL_KERNELS)
def test_square_quadrature_matches_closed_form(kernel):
    for s in (-2.0, 0.0, 0.7):
        for h in (0.05, 0.5, 1.0):
            analytic = K.smoothed_square(kernel, s, h)
            quad = sm.smoothed_square_quadrature(kernel, s, h)
            assert quad == pytest.approx(analytic, abs=1e-10)


def test_monte_carlo_strategy_close_but_not_exact():
    plan = sm.SmoothingPlan(K.uniform(), 0.5, strategy=sm.MONTE_CARLO, seed=5)
    v_mc = sm.hinge_conv(K.uniform(), 0.1, 0.5, plan)
    v_an = K.smoothed_hinge(K.uniform(), 0.1, 0.5)
    assert v_mc == pytest.approx(v_an, abs=0.02)
    # deterministic given the seed
    assert v_mc == sm.hinge_conv(K.uniform(), 0.1, 0.5, plan)


# ---------------------------------------------------------------------------
# objective assembly
# ---------------------------------------------------------------------------


def _random_avar_instance(rng):
    n = rng.integers(3, 30)
    sample = sm.Sample(rng.normal(rng.uniform(-5, 5), rng.uniform(0.5, 3), size=n))
    problem = AvarProblem(alpha=float(rng.uniform(0.05, 0.9)))
    u = np.array([rng.uniform(-5, 5)])
    return problem, u, sample


def test_h_zero_is_exact_saa():
    rng = np.random.default_rng(42)
    for _ in range(100):
        problem, u, sample = _random_avar_instance(rng)
        plan = sm.SmoothingPlan(K.uniform(), 0.0)
        assert sm.smooth_objective_value(problem, u, sample, plan) == problem.saa_value(u, sample)


def test_avar_smoothed_value_example():
    problem = AvarProblem(0.2)
    sample = sm.Sample(np.array([1.0, 2, 3, 4, 5]))
    plan = sm.SmoothingPlan(K.uniform(), 0.5)
    assert sm.smooth_objective_value(problem, [4.5], sample, plan) == pytest.approx(5.0, abs=1e-12)
    grad = sm.smooth_subgradient(problem, [4.5], sample, plan)
    assert grad[0] == pytest.approx(0.0, abs=1e-12)


def test_quadratic_smoothed_value_example():
    problem = QuadraticLocationProblem()
    sample = sm.Sample(np.array([0.0]))
    plan = sm.SmoothingPlan(K.uniform(), 1.0)
    val = sm.smooth_objective_value(problem, [0.0], sample, plan)
    assert val == pytest.approx(1.0 / 3.0, abs=1e-15)


def _zoo_cases(seed=7):
    rng = np.random.default_rng(seed)
    avar = AvarProblem(0.2)
    avar_s = sm.Sample(rng.normal(0, 2, size=15))
    quad = QuadraticLocationProblem()
    quad_s = sm.Sample(rng.normal(1, 1, size=12))
    lasso = LassoProblem.from_xy(rng.normal(size=10), rng.normal(size=(10, 2)), t=1.5)
    svm = SvmProblem(rng.normal(1, 1, size=(6, 2)), rng.normal(-1, 1, size=(5, 2)))
    port = PortfolioProblem(rng.normal(0.05, 0.1, size=(12, 3)), kappa=0.4, beta=0.3,
                            capital=1.0, lower=np.zeros(3), upper=np.full(3, 0.9))
    v = rng.normal(size=2)
    v /= np.linalg.norm(v)
    u_port = np.array([0.4, 0.3, 0.3, 0.02])
    cases = [
        ("avar", avar, np.array([0.7]), avar_s, K.uniform()),
        ("quadratic", quad, np.array([0.4]), quad_s, K.epanechnikov()),
        ("lasso", lasso, np.array([0.3, -0.6]), sm.as_sample(lasso.data), K.gaussian(np.eye(3))),
        ("svm", svm, np.append(v, 0.2), svm.sample(), K.uniform()),
        ("portfolio", port, u_port, port.sample(), K.gaussian()),
    ]
    return cases


@pytest.mark.parametrize("name, problem, u, sample, kernel", _zoo_cases())
def test_jensen_ordering_all_problems(name, problem, u, sample, kernel):
    saa = problem.saa_value(u, sample)
    for h in (0.05, 0.2, 0.5):
        plan = sm.SmoothingPlan(kernel, h)
        smoothed = sm.smooth_objective_value(problem, u, sample, plan)
        assert smoothed >= saa - 1e-15, f"{name}: Jensen ordering violated at h={h}"


@pytest.mark.parametrize("name, problem, u, sample, kernel", _zoo_cases())
def test_sandwich_bound_all_problems(name, problem, u, sample, kernel):
    if name == "quadratic":
        x = sample.column()
        modulus = problem.modulus(float(np.max(np.abs(u[0] - x))) + 1.0)
    else:
        modulus = problem.modulus()
    saa = problem.saa_value(u, sample)
    for h in (0.05, 0.2, 0.5):
        L, alpha = sm.bias_bound_constant(modulus, kernel, h)
        plan = sm.SmoothingPlan(kernel, h)
        smoothed = sm.smooth_objective_value(problem, u, sample, plan)
        assert 0.0 - 1e-12 <= smoothed - saa <= L * h**alpha + 1e-12, name


@pytest.mark.parametrize("name, problem, u, sample, kernel", _zoo_cases())
def test_bandwidth_monotonicity(name, problem, u, sample, kernel):
    values = [
        sm.smooth_objective_value(problem, u, sample, sm.SmoothingPlan(kernel, h))
        for h in (0.01, 0.05, 0.1, 0.3, 0.6)
    ]
    assert np.all(np.diff(values) >= -1e-14), name


@pytest.mark.parametrize("name, problem, u, sample, kernel", _zoo_cases())
def test_analytic_matches_quadrature(name, problem, u, sample, kernel):
    for h in (0.05, 0.35):
        v_an = sm.smooth_objective_value(problem, u, sample, sm.SmoothingPlan(kernel, h))
        v_q = sm.smooth_objective_value(
            problem, u, sample, sm.SmoothingPlan(kernel, h, strategy=sm.QUADRATURE)
        )
        assert v_q == pytest.approx(v_an, abs=1e-8), name


@pytest.mark.parametrize("name, problem, u, sample, kernel", _zoo_cases())
def test_smoothed_gradient_matches_central_differences(name, problem, u, sample, kernel):
    rng = np.random.default_rng(sum(map(ord, name)))
    plan = sm.SmoothingPlan(kernel, 0.25)
    for _ in range(20):
        probe = u + rng.uniform(-0.05, 0.05, size=u.size)
        if name == "portfolio":
            probe[:-1] = np.abs(probe[:-1]) + 0.05
        g = sm.smooth_subgradient(problem, probe, sample, plan)
        fd = np.empty_like(g)
        eps = 1e-6
        for j in range(probe.size):
            e = np.zeros_like(probe)
            e[j] = eps
            fd[j] = (
                sm.smooth_objective_value(problem, probe + e, sample, plan)
                - sm.smooth_objective_value(problem, probe - e, sample, plan)
            ) / (2 * eps)
        scale = max(float(np.linalg.norm(fd)), 1.0)
        assert np.linalg.norm(g - fd) / scale <= 1e-5, name


def test_evaluation_error_on_nonfinite():
    class Exploding:
        def saa_value(self, u, sample):
            return float("inf")

    with pytest.raises(sm.EvaluationError, match="non-finite"):
        sm.smooth_objective_value(Exploding(), [0.0], np.array([1.0]), sm.SmoothingPlan(K.uniform(), 0.0))


# ---------------------------------------------------------------------------
# bias bound constant
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "terms, kernel, h, expected_L, expected_alpha",
    [
        (((1.0, 1.0),), K.uniform(), 0.5, 0.5, 1.0),
        (((1.0, 2.0),), K.epanechnikov(), 0.5, 0.2, 2.0),
        (((2.0, 1.0), (3.0, 2.0)), K.uniform(), 0.9, 2.0 * 0.5 + 3.0 / 3.0, 1.0),
    ],
)
def test_bias_bound_constant_values(terms, kernel, h, expected_L, expected_alpha):
    L, alpha = sm.bias_bound_constant(sm.ModulusSpec(terms), kernel, h)
    assert L == pytest.approx(expected_L, abs=1e-12)
    assert alpha == expected_alpha


def test_bias_bound_requires_small_bandwidth():
    spec = sm.ModulusSpec(((1.0, 1.0),))
    for bad in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(ValueError, match="h"):
            sm.bias_bound_constant(spec, K.uniform(), bad)
