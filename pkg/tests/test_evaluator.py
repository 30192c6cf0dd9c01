"""
Floating-point cost evaluation against closed forms, finite differences and
the polynomial oracle.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from kolmo.cost_kernel import CostEvaluator, comparability_constant, kramers_comparison
from kolmo.cost_kernel.evaluator import BoundaryState

from oracles import oracle_cost, time_reversed


def random_pair(rng, n, d=1, scale=1.0):
    return rng.normal(0.0, scale, n * d), rng.normal(0.0, scale, n * d)


def test_order_one_is_squared_distance(rng):
    ev = CostEvaluator(1, 3)
    for _ in range(20):
        x, y = random_pair(rng, 1, 3)
        t = rng.uniform(0.01, 10.0)
        assert_allclose(ev.cost(t, x, y), np.sum((y - x) ** 2), rtol=1e-13)
        assert ev.cost_dt(t, x, y) == pytest.approx(0.0, abs=1e-12)
        assert_allclose(ev.cost_grad_x(t, x, y), 2.0 * (x - y), rtol=1e-12)
        assert_allclose(ev.cost_grad_y(t, x, y), 2.0 * (y - x), rtol=1e-12)


def test_assemble_b_free_flow_example():
    ev = CostEvaluator(2)
    assert_allclose(ev.assemble_b(1.0, [0.0, 1.0], [1.0, 1.0]), np.zeros((2, 1)), atol=1e-15)


def test_assemble_b_matches_dense_product(rng):
    n = 3
    ev = CostEvaluator(n)
    x, y = random_pair(rng, n)
    t = 0.7
    H1 = np.diag([1.0, t, t ** 2])
    H2 = np.array([[1.0, t, t ** 2 / 2.0], [0.0, t, t ** 2], [0.0, 0.0, t ** 2]])
    assert_allclose(ev.assemble_b(t, x, y).reshape(-1), H1 @ y - H2 @ x, rtol=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_free_flow_has_zero_cost(rng, n):
    ev = CostEvaluator(n, 2)
    x = rng.normal(size=2 * n)
    t = 0.8
    y = ev.free_flow(t, x)
    assert ev.cost(t, x, y) == pytest.approx(0.0, abs=1e-10)
    assert_allclose(ev.cost_grad_y(t, x, y), 0.0, atol=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cost_matches_polynomial_oracle(rng, n):
    ev = CostEvaluator(n)
    for _ in range(200):
        x, y = random_pair(rng, n)
        t = rng.uniform(0.1, 5.0)
        assert_allclose(ev.cost(t, x, y), oracle_cost(t, x, y, n), rtol=1e-9)


def test_oracle_with_block_dimension(rng):
    ev = CostEvaluator(3, 2)
    x, y = random_pair(rng, 3, 2)
    assert_allclose(ev.cost(1.3, x, y), oracle_cost(1.3, x, y, 3, 2), rtol=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_time_reversal_symmetry(rng, n):
    ev = CostEvaluator(n)
    for _ in range(20):
        x, y = random_pair(rng, n)
        t = rng.uniform(0.2, 3.0)
        reversed_cost = ev.cost(t, time_reversed(y, n), time_reversed(x, n))
        assert_allclose(reversed_cost, ev.cost(t, x, y), rtol=1e-9)


def central_gradient(f, z, step):
    grad = np.zeros_like(z)
    for k in range(z.size):
        e = np.zeros_like(z)
        e[k] = step
        grad[k] = (f(z + e) - f(z - e)) / (2.0 * step)
    return grad


def test_gradients_match_finite_differences(rng):
    n = 3
    ev = CostEvaluator(n)
    x, y = random_pair(rng, n)
    t = 0.9
    scale = 1.0 + np.linalg.norm(x) + np.linalg.norm(y)
    step = 1e-5 * scale
    gx = central_gradient(lambda z: ev.cost(t, z, y), x, step)
    gy = central_gradient(lambda z: ev.cost(t, x, z), y, step)
    tol = 1e-6 * (1.0 + ev.cost(t, x, y))
    assert_allclose(ev.cost_grad_x(t, x, y), gx, rtol=1e-6, atol=tol)
    assert_allclose(ev.cost_grad_y(t, x, y), gy, rtol=1e-6, atol=tol)


def test_time_derivative_matches_finite_difference(rng):
    ev = CostEvaluator(2)
    x, y = random_pair(rng, 2)
    t = 1.1
    tau = 1e-5 * t
    fd = (ev.cost(t + tau, x, y) - ev.cost(t - tau, x, y)) / (2.0 * tau)
    assert_allclose(ev.cost_dt(t, x, y), fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("n, d", [(1, 1), (2, 1), (3, 2), (5, 3)])
def test_laplacian_is_constant(n, d):
    ev = CostEvaluator(n, d)
    for t in (0.3, 1.0, 4.0):
        assert_allclose(ev.cost_laplacian_xn(t), 2.0 * d * n * n, rtol=1e-10)


def test_laplacian_matches_second_differences(rng):
    n, d = 2, 2
    ev = CostEvaluator(n, d)
    x, y = random_pair(rng, n, d)
    t = 0.6
    step = 1e-3
    total = 0.0
    for k in range((n - 1) * d, n * d):
        e = np.zeros(n * d)
        e[k] = step
        total += (ev.cost(t, x + e, y) - 2.0 * ev.cost(t, x, y) + ev.cost(t, x - e, y)) / step ** 2
    assert_allclose(total, ev.cost_laplacian_xn(t), rtol=1e-5)


def test_cost_pde_example_point():
    ev = CostEvaluator(2)
    assert abs(ev.verify_cost_pde(1.0, [0.0, 1.0], [1.0, 0.0])) < 1e-8


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cost_pde_sweep(rng, n):
    ev = CostEvaluator(n)
    worst = 0.0
    for _ in range(1000):
        x, y = random_pair(rng, n)
        t = rng.uniform(0.2, 3.0)
        worst = max(worst, abs(ev.verify_cost_pde(t, x, y)) / ev.pde_tolerance(t, x, y, rel=1.0))
    assert worst < 1e-8


def test_cost_pde_order_one_vanishes(rng):
    ev = CostEvaluator(1)
    x, y = random_pair(rng, 1)
    assert ev.verify_cost_pde(0.5, x, y) == pytest.approx(0.0, abs=1e-12)


def test_pairwise_matches_pointwise(rng):
    ev = CostEvaluator(2, 1)
    X = rng.normal(size=(6, 2))
    Y = rng.normal(size=(4, 2))
    C = ev.pairwise(0.4, X, Y)
    expected = np.array([[ev.cost(0.4, x, y) for y in Y] for x in X])
    assert_allclose(C, expected, rtol=1e-10, atol=1e-12)


def test_cost_is_not_symmetric_for_n2():
    ev = CostEvaluator(2)
    x, y = [0.0, 1.0], [1.0, 0.0]
    assert ev.cost(1.0, x, y) == pytest.approx(4.0)
    assert ev.cost(1.0, y, x) == pytest.approx(28.0)


def test_comparability_order_one():
    assert comparability_constant(1) >= 1.0


def test_comparability_holds_on_samples(rng):
    ev = CostEvaluator(2, 1, t_max=1.0)
    assert ev.K_bound > 0
    for _ in range(10_000):
        x, y = random_pair(rng, 2, scale=2.0)
        t = rng.uniform(1e-3, 1.0)
        assert ev.comparability_holds(t, x, y)
    assert ev.comparability_holds(1.0, [0.0, 0.0], [0.0, 0.0])


def test_comparability_rejects_bad_horizon():
    with pytest.raises(ValueError):
        comparability_constant(2, 1, 0.0)


def test_kramers_form_agrees():
    report = kramers_comparison(0.7, [0.2, -0.4], [1.0, 0.3])
    assert report["relative_difference"] < 1e-12


def test_boundary_state_blocks():
    state = BoundaryState.from_vector([1, 2, 3, 4, 5, 6], n=3, d=2)
    assert (state.n, state.d) == (3, 2)
    assert_allclose(state.flat(), [1, 2, 3, 4, 5, 6])


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_nonpositive_time_rejected(t):
    with pytest.raises(ValueError):
        CostEvaluator(2).cost(t, [0, 0], [0, 0])


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        CostEvaluator(2).cost(1.0, [0, 0, 0], [0, 0])


def test_non_finite_state_rejected():
    with pytest.raises(ValueError):
        CostEvaluator(1).cost(1.0, [np.nan], [0.0])
