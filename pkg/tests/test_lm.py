import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magsense import calibration as cal
from magsense.lm import LMOptions, levenberg_marquardt, numeric_jacobian


def test_linear_matches_normal_equations():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(60, 4))
    y = a @ np.array([1.5, -2.0, 0.3, 4.0]) + 0.01 * rng.normal(size=60)
    res = levenberg_marquardt(lambda th: a @ th - y, np.zeros(4), jacobian_fn=lambda th: a)
    ref, *_ = np.linalg.lstsq(a, y, rcond=None)
    assert res.converged
    assert np.linalg.norm(res.theta - ref) / np.linalg.norm(ref) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_linear_random_problems(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    res = levenberg_marquardt(lambda th: a @ th - y, rng.normal(size=3), jacobian_fn=lambda th: a)
    ref = np.linalg.solve(a.T @ a, a.T @ y)
    assert np.linalg.norm(res.theta - ref) <= 1e-10 * max(np.linalg.norm(ref), 1e-300)


def test_zero_residual_at_start():
    theta0 = np.array([2.0, 0.5])
    x = np.linspace(0, 5, 20)
    y = 2.0 * np.exp(-0.5 * x)
    res = levenberg_marquardt(lambda th: th[0] * np.exp(-th[1] * x) - y, theta0)
    assert res.iterations == 0 and res.converged
    assert np.array_equal(res.theta, theta0)


def test_exponential_decay_recovery():
    x = np.linspace(0, 10, 50)
    y = 2.0 * np.exp(-0.5 * x)
    fn = lambda th: th[0] * np.exp(-th[1] * x) - y
    res = levenberg_marquardt(fn, np.array([1.0, 1.0]))
    assert res.converged
    assert res.theta == pytest.approx([2.0, 0.5], rel=1e-8)


def test_max_iterations_reports_partial():
    x = np.linspace(0, 10, 50)
    y = 2.0 * np.exp(-0.5 * x)
    res = levenberg_marquardt(lambda th: th[0] * np.exp(-th[1] * x) - y, np.array([1.0, 1.0]),
                              options=LMOptions(max_iter=2))
    assert not res.converged and res.iterations == 2
    assert res.message == "maximum iterations reached"
    assert res.cost > 0


def test_numeric_vs_analytic_jacobian_exponential():
    x = np.linspace(0, 4, 30)
    fn = lambda th: th[0] * np.exp(-th[1] * x)
    th = np.array([1.7, 0.8])
    analytic = np.column_stack([np.exp(-th[1] * x), -th[0] * x * np.exp(-th[1] * x)])
    num = numeric_jacobian(fn, th)
    assert np.max(np.abs(num - analytic)) <= 1e-5 * np.max(np.abs(analytic))


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.2, 2.0), st.floats(-0.5, 0.5), st.floats(0.1, 2.0))
def test_numeric_vs_analytic_jacobian_atanh_law(a, b, d, k):
    x = np.linspace(-1, 1, 41)
    th = np.array([a, b, d, k])
    analytic = cal._atanh_jacobian(th, x)
    num = numeric_jacobian(lambda t: cal._atanh_forward(t, x), th)
    assert np.allclose(num, analytic, rtol=1e-5, atol=1e-5 * np.max(np.abs(analytic)))
