import numpy as np
import pytest
from hypothesis import given, strategies as st

from ttextra.problems import (
    DimensionError, LeastSquaresAgent, QuadraticAgent, WelschAgent, estimate_smoothness,
    make_convex_quadratic, make_problem, make_regularized_ls, make_welsch_regression, quadratic_from_agents,
)

from conftest import central_diff_grad

FAMILIES = ["regularized_ls", "welsch", "quadratic"]


@pytest.fixture(scope="module", params=FAMILIES)
def problem(request):
    return make_problem(request.param, 4, p=3, seed=3)


def test_pure_quadratic_ls():
    f = LeastSquaresAgent(np.array([[1.0]]), np.array([0.0]), 0.0)
    for x in (-2.0, 0.5, 3.0):
        assert f.value(np.array([x])) == pytest.approx(x * x / 2)
        assert f.grad(np.array([x]))[0] == pytest.approx(x)
    assert f.smoothness() == pytest.approx(1.0)


def test_regularizer_at_zero():
    f = LeastSquaresAgent(np.zeros((1, 2)), np.zeros(1), 3.0)
    assert f.value(np.zeros(2)) == 0.0
    np.testing.assert_array_equal(f.grad(np.zeros(2)), [0.0, 0.0])


def test_regularizer_derivative_at_one():
    f = LeastSquaresAgent(np.zeros((1, 1)), np.zeros(1), 1.0)
    assert f.grad(np.array([1.0]))[0] == pytest.approx(0.5, rel=1e-15)
    fd = central_diff_grad(lambda z: f.value(z), np.array([1.0]))
    assert fd[0] == pytest.approx(0.5, rel=1e-8)


def test_ls_analytic_l():
    pb = make_regularized_ls(3, 2, 5, 0.7, seed=1)
    expect = max(np.linalg.norm(f.a.T @ f.a, 2) for f in pb.agents) + 1.4
    assert pb.l == pytest.approx(expect)
    assert pb.l_is_analytic


def test_ls_nonconvex_with_default_mu():
    pb = make_problem("regularized_ls", 5, p=3, seed=0)
    # Hessian at x_d = 1 adds mu * (-1/2) along that coordinate
    f = pb.agents[0]
    x = np.ones(3)
    h = np.array([central_diff_grad(lambda z, k=k: f.grad(z)[k], x) for k in range(3)])
    assert np.linalg.eigvalsh(0.5 * (h + h.T))[0] < 0


def test_welsch_zero_residual_and_range():
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    f = WelschAgent(a, np.array([1.0, 2.0]), 0.5)
    assert f.value(np.array([1.0, 2.0])) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = f.value(rng.normal(scale=10, size=2))
        assert 0 <= v <= 2  # saturates in floating point


def test_welsch_l_is_estimate():
    pb = make_welsch_regression(3, 2, 30, 1.5, seed=2)
    assert not pb.l_is_analytic
    assert 0 < pb.l <= 1.2 * max(f.hessian_bound() for f in pb.agents)


def test_quadratic_two_agents_minimizer():
    pb = quadratic_from_agents([QuadraticAgent(np.eye(1), np.array([1.0])), QuadraticAgent(np.eye(1), np.array([3.0]))])
    assert pb.minimizer[0] == pytest.approx(2.0)
    x = np.array([[2.0], [2.0]])
    assert pb.gradient(x).sum() == pytest.approx(0.0, abs=1e-15)


def test_quadratic_value_at_own_minimizer():
    pb = make_convex_quadratic(4, 3, seed=5)
    for f in pb.agents:
        assert f.value(f.m) == 0.0
    stacked = np.stack([f.m for f in pb.agents])
    assert pb.evaluate(stacked)[1] == 0.0


def test_quadratic_stationary_at_minimizer():
    pb = make_convex_quadratic(4, 3, seed=5)
    x = np.tile(pb.minimizer, (4, 1))
    assert np.linalg.norm(pb.gradient(x).sum(axis=0)) <= 1e-12


def test_evaluate_ls_at_zero():
    pb = make_regularized_ls(3, 2, 4, 0.0, seed=8)
    assert pb.evaluate(np.zeros((3, 2)))[1] == pytest.approx(0.5 * sum(f.b @ f.b for f in pb.agents))


def test_evaluate_matches_per_agent(problem, rng):
    x = rng.standard_normal((problem.n, problem.p))
    vals, total = problem.evaluate(x)
    manual = [problem.agents[i].value(x[i]) for i in range(problem.n)]
    np.testing.assert_array_equal(vals, manual)
    assert total == pytest.approx(sum(manual), rel=1e-15)


def test_dimension_mismatch(problem):
    with pytest.raises(DimensionError):
        problem.evaluate(np.zeros((problem.n + 1, problem.p)))
    with pytest.raises(DimensionError):
        problem.gradient(np.zeros((problem.n, problem.p + 1)))


def test_positivity(problem, rng):
    for _ in range(1000):
        x = rng.normal(scale=3.0, size=(problem.n, problem.p))
        assert problem.evaluate(x)[1] >= 0


def test_gradient_finite_differences(problem, rng):
    for _ in range(20):
        x = rng.normal(scale=1.5, size=(problem.n, problem.p))
        g = problem.gradient(x)
        for i, f in enumerate(problem.agents):
            fd = central_diff_grad(f.value, x[i])
            assert np.linalg.norm(fd - g[i]) <= 1e-6 * np.linalg.norm(g[i])


def test_sampled_lipschitz_below_l(problem, rng):
    slack = 1e-6 if problem.l_is_analytic else 0.0
    center = np.zeros(problem.p) if problem.center is None else problem.center
    for _ in range(100):
        x = center + rng.normal(scale=2.0, size=(problem.n, problem.p))
        y = x + rng.normal(scale=rng.choice([1e-3, 1.0]), size=x.shape)
        ratio = np.linalg.norm(problem.gradient(x) - problem.gradient(y)) / np.linalg.norm(x - y)
        assert ratio <= problem.l * (1 + slack)


def test_estimate_smoothness_quadratic_identity():
    pb = quadratic_from_agents([QuadraticAgent(np.eye(3), np.zeros(3)) for _ in range(2)])
    est = estimate_smoothness(pb, trials=50, radius=1.0, seed=0)
    assert 1.0 <= est <= 1.2 + 1e-12


def test_estimate_smoothness_ls_below_analytic():
    pb = make_regularized_ls(3, 2, 6, 1.0, seed=4)
    assert estimate_smoothness(pb, 200, 2.0, seed=1) <= 1.2 * pb.l


def test_estimate_smoothness_deterministic():
    pb = make_regularized_ls(3, 2, 6, 1.0, seed=4)
    assert estimate_smoothness(pb, 50, 2.0, 9) == estimate_smoothness(pb, 50, 2.0, 9)


@given(st.floats(-50, 50), st.floats(0.0, 10.0))
def test_regularizer_curvature_bounded(x, mu):
    # second derivative of mu * x^2/(1+x^2) lies in [-mu/2, 2 mu]
    d2 = mu * (2 - 6 * x * x) / (1 + x * x) ** 3
    assert -mu / 2 - 1e-12 <= d2 <= 2 * mu + 1e-12


def test_unknown_family():
    with pytest.raises(ValueError):
        make_problem("quartic", 3)
