"""
The Gaussian kernel Phi: constants, PDE residuals, normalisation, the Dirac
limit, the semigroup property and forward evolution on grids.
"""
from math import pi, sqrt

import numpy as np
import pytest

from kolmo.fundamental_solution import (
    Kernel, beta_constant, evolve_by_kernel, heat_kernel, moment_curve,
)
from kolmo.grid import GridError, GridMeasure, TensorGrid
from kolmo.observables import Bump, Constant, Gaussian


@pytest.mark.parametrize("d", [1, 2, 3])
def test_beta_order_one(d):
    assert beta_constant(1, d) == pytest.approx((4.0 * pi) ** (-d / 2.0), rel=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_beta_order_two(d):
    assert beta_constant(2, d) == pytest.approx((sqrt(3.0) / (2.0 * pi)) ** d, rel=1e-12)


def test_beta_rejects_bad_dimension():
    with pytest.raises(ValueError):
        beta_constant(2, 0)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_normalization(n, t):
    kernel = Kernel(n)
    for y in (np.zeros(n), np.full(n, 0.7), np.linspace(-1.0, 1.0, n)):
        assert kernel.normalization_check(t, y) == pytest.approx(1.0, abs=1e-6)


def test_normalization_evaluates_the_kernel(monkeypatch):
    original = Kernel.phi_matrix
    monkeypatch.setattr(Kernel, "phi_matrix", lambda self, t, X, Y: 0.5 * original(self, t, X, Y))
    assert Kernel(3).normalization_check(1.0, np.zeros(3)) == pytest.approx(0.5, abs=1e-6)


def test_normalization_node_counts_and_dimension_cap():
    kernel = Kernel(2)
    for nodes in (2, 5, 8):
        assert kernel.normalization_check(1.0, [0.3, -0.2], nodes=nodes) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        Kernel(4).normalization_check(1.0, np.zeros(4))


def test_order_one_is_heat_kernel(rng):
    kernel = Kernel(1)
    for _ in range(20):
        x, y = rng.normal(size=2)
        t = rng.uniform(0.1, 3.0)
        assert kernel.phi(t, [x], [y]) == pytest.approx(heat_kernel(t, [x], [y]), rel=1e-12)


def test_order_two_on_free_flow():
    kernel = Kernel(2)
    assert kernel.phi(1.0, [0.7, 0.0], [0.7, 0.0]) == pytest.approx(sqrt(3.0) / (2.0 * pi), rel=1e-12)


def test_phi_bounded_by_peak(rng):
    kernel = Kernel(2)
    for _ in range(50):
        x, y = rng.normal(size=(2, 2))
        t = rng.uniform(0.05, 2.0)
        assert kernel.phi(t, x, y) <= kernel.peak(t) * (1.0 + 1e-12)


def test_far_points_underflow_to_zero():
    value = Kernel(2).phi(0.01, [0.0, 0.0], [50.0, 50.0])
    assert value == 0.0
    assert not np.isnan(value)


def test_phi_matrix_matches_pointwise(rng):
    kernel = Kernel(2)
    X = rng.normal(size=(5, 2))
    Y = rng.normal(size=(3, 2))
    expected = np.array([[kernel.phi(0.4, x, y) for y in Y] for x in X])
    np.testing.assert_allclose(kernel.phi_matrix(0.4, X, Y), expected, rtol=1e-12)


def test_pde_residual_order_one():
    assert abs(Kernel(1).pde_residual(1.0, [0.3], [-0.2])) < 1e-5


def test_pde_residual_order_two_example():
    assert abs(Kernel(2).pde_residual(1.0, [0.3, -0.2], [0.0, 0.0])) < 1e-4


@pytest.mark.parametrize("n", [2, 3])
def test_pde_residual_sweep(rng, n):
    kernel = Kernel(n)
    worst = 0.0
    for _ in range(100):
        x = rng.normal(0.0, 0.5, n)
        y = rng.normal(0.0, 0.5, n)
        t = rng.uniform(0.5, 2.0)
        worst = max(worst, abs(kernel.pde_residual(t, x, y)))
    assert worst < 1e-3


def test_residual_refinement_is_second_order():
    result = Kernel(2).residual_refinement(1.0, [0.3, -0.2], [0.0, 0.0])
    assert len(result["residuals"]) == len(result["steps"])
    assert 1.7 < result["slope"] < 2.3


def test_pde_residual_rejects_small_time():
    with pytest.raises(ValueError):
        Kernel(2).pde_residual(1e-4, [0.0, 0.0], [0.0, 0.0])


@pytest.mark.parametrize("t", [0.0, -0.5])
def test_nonpositive_time_rejected(t):
    with pytest.raises(ValueError):
        Kernel(1).phi(t, [0.0], [0.0])


def test_quadrature_dimension_cap():
    with pytest.raises(ValueError):
        Kernel(2, 2).integrate_against(1.0, np.zeros(4), Constant(1.0))


def test_dirac_limit_constant_function():
    result = Kernel(2).dirac_limit_check([0.2, -0.1])
    assert result["all_converged"]
    assert all(row["error"] < 1e-9 for row in result["rows"])


def test_dirac_limit_gaussian_closed_form():
    # int heat(t, x, 0) exp(-x^2) dx = (1 + 4t)^{-1/2}
    result = Kernel(1).dirac_limit_check([0.0], (0.5, 0.1, 0.01), Gaussian([0.0], [1.0]))
    for row in result["rows"]:
        assert row["value"] == pytest.approx((1.0 + 4.0 * row["t"]) ** -0.5, rel=1e-8)
    assert result["monotone"]


def test_dirac_limit_bump_order_two():
    result = Kernel(2).dirac_limit_check([0.0, 0.0], test_function=Bump([0.0, 0.0], [1.5, 1.5]))
    assert result["monotone"]
    assert result["final_error"] < 1e-3
    assert result["all_converged"]
    # rows come back from the largest time down
    times = [row["t"] for row in result["rows"]]
    assert times == sorted(times, reverse=True)


def test_bump_outside_reach_integrates_to_zero():
    result = Kernel(1).integrate_against(0.01, [0.0], Bump([20.0], [1.0]))
    assert result == {"value": 0.0, "converged": True, "nodes": 0}


@pytest.mark.parametrize("n, x, y", [
    (1, [0.2], [-0.4]),
    (2, [0.1, 0.2], [0.3, -0.1]),
])
def test_semigroup(n, x, y):
    result = Kernel(n).semigroup_check(0.3, 0.5, x, y)
    assert result["relative_error"] < 1e-3


def test_evolve_dirac_matches_heat_kernel(line_grid):
    rho0 = GridMeasure.dirac(line_grid, [0.0])
    atom = rho0.points[int(np.argmax(rho0.weights))]
    evolved = evolve_by_kernel(rho0, 1.0, Kernel(1))
    expected = np.array([heat_kernel(1.0, atom, p) for p in line_grid.points])
    expected = expected / expected.sum()
    assert np.abs(evolved.measure.weights - expected).sum() < 1e-3
    assert evolved.mass_error < 1e-3


def test_evolved_weights_are_a_probability(line_grid):
    rho0 = GridMeasure.from_density(line_grid, lambda p: np.exp(-(p[:, 0] - 0.5) ** 2))
    evolved = evolve_by_kernel(rho0, 0.5)
    assert np.all(evolved.measure.weights >= 0)
    assert evolved.measure.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_evolve_on_small_grid_fails():
    grid = TensorGrid.from_bounds([(-1.0, 1.0)], [40])
    with pytest.raises(GridError):
        evolve_by_kernel(GridMeasure.dirac(grid, [0.0]), 1.0, Kernel(1))


def test_evolve_dimension_mismatch(line_grid):
    with pytest.raises(ValueError):
        evolve_by_kernel(GridMeasure.dirac(line_grid, [0.0]), 1.0, Kernel(2))


def test_second_moment_grows_for_order_two():
    grid = TensorGrid.from_bounds([(-8.0, 8.0), (-8.0, 8.0)], [64, 64])
    rho0 = GridMeasure.from_density(grid, lambda p: np.exp(-np.sum(p ** 2, axis=1)))
    moments = moment_curve(Kernel(2), rho0, [0.5, 1.0, 1.5])
    assert moments[0] > rho0.second_moment()
    assert moments[0] < moments[1] < moments[2]
