"""
Minimizing-movement steps, runs and their diagnostics.

Runs marked slow take minutes at desk scale; deselect with -m "not slow".
"""
import numpy as np
import pytest

from kolmo.config import TransportConfig
from kolmo.cost_kernel import CostEvaluator
from kolmo.fundamental_solution import Kernel, evolve_by_kernel
from kolmo.grid import GridError, TensorGrid
from kolmo.jko_scheme import (
    MissingReferenceError,
    MonitorError,
    PotentialSpec,
    StepRecord,
    convergence_report,
    energy_dissipation_table,
    equicontinuity_monitor,
    euler_lagrange_residual,
    euler_lagrange_terms,
    gaussian_measure,
    interpolate,
    jko_step,
    reference_solution,
    run_scheme,
    weak_form_residual,
)
from kolmo.jko_scheme.diagnostics import has_reference, ou_gaussian_marginal, ou_reference
from kolmo.jko_scheme.energy import FreeEnergy
from kolmo.jko_scheme.scheme import EDI_TOLERANCE, SparseCost, _guard
from kolmo.observables import Bump, Constant, Gaussian
from kolmo.optimal_transport import ConvergenceError

HEAT = PotentialSpec("zero")
OU = PotentialSpec("quadratic")


@pytest.fixture
def short_run(line_grid):
    """Three heat steps of size 0.1 from a Gaussian."""
    rho0 = gaussian_measure(line_grid, [0.5], [0.5])
    return run_scheme(rho0, 0.1, 0.3, HEAT)


def test_single_step_is_a_probability(line_grid):
    rho0 = gaussian_measure(line_grid, [0.0], [1.0])
    rho1, plan = jko_step(rho0, 0.1, HEAT)
    assert rho1.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(rho1.weights > 0)
    assert plan.matrix.shape == (line_grid.size, line_grid.size)
    np.testing.assert_allclose(plan.matrix.sum(axis=1), rho0.weights, atol=1e-9)


def test_step_spreads_like_heat():
    grid = TensorGrid.from_bounds([(-6.0, 6.0)], [240])
    rho0 = gaussian_measure(grid, [0.0], [1.0])
    rho1, _ = jko_step(rho0, 0.1, HEAT)
    exact = evolve_by_kernel(rho0, 0.1, Kernel(1)).measure
    assert rho1.l1_distance(exact) < 0.05
    # variance grows by about 2h
    assert 0.1 < rho1.second_moment() - rho0.second_moment() < 0.4


def test_run_records_energy_inequality(short_run):
    assert short_run.steps == 3
    for record in short_run.records:
        assert record.edi_slack >= -EDI_TOLERANCE
        assert record.entropic_slack >= -EDI_TOLERANCE
        assert record.transport_exact <= record.transport_cost * (1.0 + 1e-12)
        assert record.competitor_cost == 0.0
        assert record.iterations > 0
        assert record.epsilon == pytest.approx(1e-3)
    assert all(m.weights.sum() == pytest.approx(1.0) for m in short_run.measures)


def test_free_energy_decreases_for_heat(short_run):
    energies = [short_run.initial_energy.total] + [r.free_energy.total for r in short_run.records]
    assert all(b < a for a, b in zip(energies, energies[1:]))


def test_interpolation_is_piecewise_constant(short_run):
    h = short_run.h
    assert interpolate(short_run, 0.0) is short_run.measures[0]
    assert interpolate(short_run, h / 2) is short_run.measures[1]
    assert interpolate(short_run, h) is short_run.measures[1]
    assert interpolate(short_run, 1.5 * h) is short_run.measures[2]
    assert interpolate(short_run, 3 * h) is short_run.measures[3]
    with pytest.raises(ValueError):
        interpolate(short_run, 3 * h + 0.01)
    with pytest.raises(ValueError):
        interpolate(short_run, -0.1)


def test_horizon_shorter_than_step(line_grid):
    state = run_scheme(gaussian_measure(line_grid, [0.0], [1.0]), 0.1, 0.05, HEAT)
    assert state.steps == 1


def test_rejects_bad_step(line_grid):
    rho0 = gaussian_measure(line_grid, [0.0], [1.0])
    with pytest.raises(ValueError):
        run_scheme(rho0, 0.0, 1.0, HEAT)
    with pytest.raises(ValueError):
        jko_step(rho0, -0.1, HEAT)


def test_non_convergence_names_the_step(line_grid):
    rho0 = gaussian_measure(line_grid, [0.0], [1.0])
    with pytest.raises(ConvergenceError) as info:
        run_scheme(rho0, 0.1, 0.3, HEAT, TransportConfig(max_iters=1))
    assert info.value.step == 1


def test_order_two_step_keeps_mass():
    grid = TensorGrid.from_bounds([(-3.0, 3.0), (-3.0, 3.0)], [16, 16])
    V = PotentialSpec("quadratic", n=2)
    rho0 = gaussian_measure(grid, [0.0, 0.5], [0.5, 0.5])
    rho1, plan = jko_step(rho0, 0.1, V, evaluator=CostEvaluator(2))
    assert rho1.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert plan.cost_value >= 0.0


def make_record(step, second_moment=1.0, positive_entropy=0.5, transport=0.01):
    return StepRecord(
        step=step, time=0.1 * step,
        free_energy=FreeEnergy(0.0, 0.0, positive_entropy),
        second_moment=second_moment, transport_cost=transport, transport_exact=transport,
        entropic_term=0.0,
        competitor_cost=0.0, competitor_entropic=0.0, boundary_mass=0.0,
        iterations=1, epsilon=0.01, objective=0.0, edi_slack=0.0, entropic_slack=0.0,
    )


def test_guard_trips_after_warmup():
    history = {}
    for k in range(1, 4):
        _guard(history, make_record(k), 0.1)
    with pytest.raises(MonitorError) as info:
        _guard(history, make_record(4, second_moment=50.0), 0.1)
    assert info.value.monitor == "second_moment"
    assert info.value.step == 4


def test_guard_ignores_warmup_outliers():
    history = {}
    _guard(history, make_record(1, second_moment=1e6), 0.1)
    _guard(history, make_record(2), 0.1)


def test_euler_lagrange_constant_function(short_run):
    plan = short_run.last_plan
    terms = euler_lagrange_terms(short_run.measures[-2], short_run.measures[-1], plan,
                                 short_run.h, Constant(1.0))
    assert all(value == 0.0 for value in terms.values())


def test_euler_lagrange_rejects_boundary_support(short_run):
    with pytest.raises(GridError):
        euler_lagrange_residual(short_run.measures[-2], short_run.measures[-1],
                                short_run.last_plan, short_run.h, Bump([5.9], [0.5]))


def test_euler_lagrange_terms_balance(short_run):
    terms = euler_lagrange_terms(short_run.measures[-2], short_run.measures[-1],
                                 short_run.last_plan, short_run.h, Bump([0.5], [3.0]))
    assert terms["residual"] == pytest.approx(
        terms["plan"] - terms["transport"] + terms["drift"] - terms["laplacian"])
    assert abs(terms["residual"]) < 0.5 * abs(terms["laplacian"])


def test_energy_dissipation_table(short_run):
    table = energy_dissipation_table(short_run)
    assert len(table["rows"]) == 3
    assert table["min_edi_slack"] >= -EDI_TOLERANCE
    assert table["edi_holds"]
    assert table["transport_over_h"] == pytest.approx(table["total_transport"] / short_run.h)
    assert table["fitted_constant"] >= 0.0
    first = table["rows"][0]
    assert first["free_energy_prev"] == pytest.approx(short_run.initial_energy.total)


def test_equicontinuity_monitor(short_run):
    result = equicontinuity_monitor(short_run)
    assert result["bounded"]
    assert all(row["w2_squared"] >= 0.0 for row in result["rows"])
    same = equicontinuity_monitor(short_run, pairs=[(0.1, 0.1)])
    assert same["rows"][0]["ratio"] == 0.0


def test_weak_form_residual(short_run):
    result = weak_form_residual(short_run, Gaussian([0.5], [1.0]))
    assert result["residual"] == pytest.approx(result["change"] - result["generator"])
    # heat lowers the value of a Gaussian bump at the centre of mass
    assert result["change"] < 0.0


def test_missing_reference_for_order_two():
    V = PotentialSpec("quadratic", n=2)
    grid = TensorGrid.from_bounds([(-3.0, 3.0), (-3.0, 3.0)], [8, 8])
    assert not has_reference(V)
    with pytest.raises(MissingReferenceError):
        reference_solution(gaussian_measure(grid, [0.0, 0.0], [1.0, 1.0]), V, 0.5)


def test_ou_reference_matches_gaussian_marginal():
    grid = TensorGrid.from_bounds([(-6.0, 6.0)], [480])
    rho0 = gaussian_measure(grid, [1.0], [0.25])
    mean, variance = ou_gaussian_marginal(1.0, 0.25, 0.5)
    ref = ou_reference(rho0, 0.5)
    assert ref.mean()[0] == pytest.approx(mean, abs=1e-3)
    assert ref.second_moment() - ref.mean()[0] ** 2 == pytest.approx(variance, abs=1e-3)
    assert has_reference(OU) and has_reference(HEAT)


def test_ou_marginal_keeps_stationary_variance():
    mean, variance = ou_gaussian_marginal(2.0, 1.0, 0.7)
    assert mean == pytest.approx(2.0 * np.exp(-0.7))
    assert variance == pytest.approx(1.0)


def test_state_summary(short_run):
    summary = short_run.summary()
    assert summary["steps"] == 3
    assert len(summary["records"]) == 3
    assert summary["min_edi_slack"] == pytest.approx(min(r.edi_slack for r in short_run.records))
    assert summary["total_transport"] == pytest.approx(sum(r.transport_exact for r in short_run.records))


def test_sparse_cost_reductions():
    C = np.array([[0.0, 1.0, 9.0],
                  [4.0, 0.0, 1.0],
                  [9.0, 1.0, 0.0]])
    cost = SparseCost(C, 2.0)
    assert cost.size == 6
    np.testing.assert_array_equal(cost.active, [0, 1, 2])
    values = -cost.values
    np.testing.assert_allclose(cost.row_logsumexp(values),
                               np.full(3, np.log(1.0 + np.exp(-1.0))))
    np.testing.assert_allclose(cost.col_sum(np.ones(cost.size)), [1.0, 3.0, 2.0])
    np.testing.assert_allclose(cost.col_logsumexp(np.zeros(cost.size)), np.log([1.0, 3.0, 2.0]))


def test_sparse_cost_drops_unreachable_columns():
    cost = SparseCost(np.array([[0.0, 50.0, 1.0]]), 2.0)
    np.testing.assert_array_equal(cost.active, [0, 2])
    assert cost.size == 2


def test_truncated_step_keeps_row_marginal():
    grid = TensorGrid.from_bounds([(-8.0, 8.0)], [320])
    rho0 = gaussian_measure(grid, [0.0], [0.5])
    _, plan = jko_step(rho0, 0.05, HEAT)
    assert np.count_nonzero(plan.matrix) < grid.size ** 2
    np.testing.assert_allclose(plan.matrix.sum(axis=1), rho0.weights, atol=1e-12)


def test_step_plans_carry_zero_competitor_cost_on_the_line(short_run):
    table = energy_dissipation_table(short_run)
    assert all(row["self_transport_over_2h"] == 0.0 for row in table["rows"])


@pytest.mark.slow
def test_gibbs_measure_is_stationary(line_grid):
    gibbs = gaussian_measure(line_grid, [0.0], [1.0])
    state = run_scheme(gibbs, 0.1, 0.3, OU)
    for previous, current in zip(state.measures, state.measures[1:]):
        assert current.l1_distance(previous) < 1e-4
    assert energy_dissipation_table(state)["edi_holds"]


@pytest.mark.slow
@pytest.mark.parametrize("V, mean, variance", [(HEAT, 0.5, 0.5), (OU, 1.0, 0.25)])
def test_order_one_convergence(V, mean, variance):
    grid = TensorGrid.from_bounds([(-6.0, 6.0)], [480])
    rho0 = gaussian_measure(grid, [mean], [variance])
    report = convergence_report(rho0, V, 0.5, (0.1, 0.05, 0.025))
    assert report["monotone"]
    assert report["transport_rate_spread"] < 5.0
    assert all(row["min_edi_slack"] >= -EDI_TOLERANCE for row in report["rows"])


def kinetic_grid():
    # positions spread by t * velocity, so the first axis is the narrow one
    return TensorGrid.from_bounds([(-1.2, 1.2), (-4.5, 4.5)], [48, 48])


@pytest.mark.slow
def test_order_two_run_keeps_energy_inequality():
    grid = TensorGrid.from_bounds([(-3.0, 3.0), (-3.0, 3.0)], [24, 24])
    V = PotentialSpec("quadratic", n=2)
    rho0 = gaussian_measure(grid, [0.0, 0.5], [0.5, 0.5])
    state = run_scheme(rho0, 0.05, 0.1, V)
    assert state.steps == 2
    assert state.measures[-1].weights.sum() == pytest.approx(1.0, abs=1e-12)
    table = energy_dissipation_table(state)
    assert table["min_edi_slack"] >= -EDI_TOLERANCE
    assert all(row["self_transport_over_2h"] > 0.0 for row in table["rows"])


@pytest.mark.slow
def test_order_two_convergence():
    rho0 = gaussian_measure(kinetic_grid(), [0.0, 0.0], [0.01, 0.5])
    report = convergence_report(rho0, PotentialSpec("zero", n=2), 0.25, (0.05, 0.025), threads=2)
    assert report["monotone"]
    assert all(row["min_edi_slack"] >= -EDI_TOLERANCE for row in report["rows"])


LINE_BUMPS = [Bump([0.0], [2.0]), Bump([0.5], [1.5]), Bump([-1.0], [2.5])]
# centred in position so the free-transport term vanishes by symmetry
PLANE_BUMPS = [Bump([0.0, 0.0], [1.5, 1.5]), Bump([0.0, 0.5], [2.0, 1.5]),
               Bump([0.0, -0.5], [1.5, 2.0])]


@pytest.mark.slow
@pytest.mark.parametrize("phi", LINE_BUMPS)
def test_euler_lagrange_residual_shrinks_with_step(phi):
    grid = TensorGrid.from_bounds([(-6.0, 6.0)], [240])
    rho0 = gaussian_measure(grid, [0.0], [1.0])
    residuals = []
    for h in (0.1, 0.05):
        rho1, plan = jko_step(rho0, h, HEAT)
        residuals.append(abs(euler_lagrange_residual(rho0, rho1, plan, h, phi)))
    assert residuals[0] > residuals[1]


@pytest.mark.slow
@pytest.mark.parametrize("phi", PLANE_BUMPS)
def test_euler_lagrange_residual_shrinks_with_step_order_two(phi):
    grid = TensorGrid.from_bounds([(-3.0, 3.0), (-3.0, 3.0)], [24, 24])
    V = PotentialSpec("zero", n=2)
    rho0 = gaussian_measure(grid, [0.0, 0.0], [0.5, 0.5])
    evaluator = CostEvaluator(2)
    residuals = []
    for h in (0.1, 0.05):
        rho1, plan = jko_step(rho0, h, V, evaluator=evaluator)
        residuals.append(abs(euler_lagrange_residual(rho0, rho1, plan, h, phi, V)))
    assert residuals[0] > residuals[1]


@pytest.mark.slow
def test_weak_form_residual_shrinks_with_step():
    grid = TensorGrid.from_bounds([(-6.0, 6.0)], [240])
    rho0 = gaussian_measure(grid, [0.5], [0.5])
    phi = Bump([0.5], [3.0])
    residuals = [abs(weak_form_residual(run_scheme(rho0, h, 0.4, HEAT), phi)["residual"])
                 for h in (0.1, 0.05)]
    assert residuals[0] > residuals[1]
