"""
Minimizing-movement scheme on a fixed tensor grid.

Each step minimises

    J(rho) = W_h(rho_prev, rho) / (2h) + F(rho)

over grid measures. The transport term is replaced by its entropic version
(<C, P> + eps sum P (log P - 1)) / (2h) over plans P with first marginal
rho_prev; the second marginal of the optimal P is the new density. With
F(q) = sum q_j (log q_j - log vol_j + V_j) the optimality conditions give
closed-form log-domain updates for both dual potentials:

    f_i = eps (log a_i - LSE_j((g_j - C_ij)/eps))
    g_j = (2h eps / (eps + 2h)) (c_j - LSE_i((f_i - C_ij)/eps)),
    c_j = log vol_j - V_j - 1.

The plan is invariant under (f, g) -> (f - s, g + s), so convergence is
measured on the second marginal: at the optimum q is proportional to
exp(c - g / (2h)). Plan entries that cannot carry mass above
exp(-TRUNCATION) of their row are dropped before iterating.
"""
# built-in imports
import logging
from dataclasses import asdict, dataclass, field
from math import ceil
from typing import Dict, List, Optional, Tuple

# third party imports
import numpy as np
from scipy.special import logsumexp, xlogy

# kolmo imports
from kolmo.config import TransportConfig
from kolmo.cost_kernel import CostEvaluator
from kolmo.grid import GridError, GridMeasure, TensorGrid
from kolmo.jko_scheme.energy import FreeEnergy, free_energy
from kolmo.jko_scheme.potentials import PotentialSpec
from kolmo.optimal_transport import (
    MAX_EXACT_ENTRIES, ConvergenceError, TransportPlan, epsilon_schedule, solve_exact,
    wasserstein2_euclidean,
)

logger = logging.getLogger(__name__)

GUARD_FACTOR = 10.0
GUARD_WARMUP = 3
# monitor name -> floor under the running median
GUARD_FLOORS = {"second_moment": 1.0, "positive_entropy": 1.0, "step_cost_rate": 1.0}
EDI_TOLERANCE = 1e-7
TRUNCATION = 40.0
# marginal residual is evaluated every CHECK_EVERY iterations
CHECK_EVERY = 5


class MonitorError(RuntimeError):
    """A run monitor exceeded GUARD_FACTOR times its running median."""

    def __init__(self, message: str, monitor: str, step: int):
        """
        Keep the offending monitor and step.
        """
        super().__init__(message)
        self.monitor = monitor
        self.step = step


@dataclass
class StepRecord:
    """
    Monitors of one scheme step.

    ``edi_slack`` is F(rho_prev) + W_h(rho_prev, rho_prev)/(2h) - F(rho_k)
    - W_h(rho_prev, rho_k)/(2h) with unregularised transport costs; the
    self-transport term vanishes for n = 1. ``transport_exact`` is the value
    of W_h(rho_prev, rho_k) used there: exact when the instance is small
    enough, otherwise the cost of the step's plan, which bounds it from above.
    ``entropic_slack`` is the same comparison for the regularised objective
    the optimiser actually minimises.
    """
    step: int
    time: float
    free_energy: FreeEnergy
    second_moment: float
    transport_cost: float
    transport_exact: float
    entropic_term: float
    competitor_cost: float
    competitor_entropic: float
    boundary_mass: float
    iterations: int
    epsilon: float
    objective: float
    edi_slack: float
    entropic_slack: float
    plan_entries: int = 0

    def to_dict(self) -> Dict[str, object]:
        """Flat dictionary for reports."""
        data = asdict(self)
        data["free_energy"] = self.free_energy.to_dict()
        return data


@dataclass
class StepResult:
    """Everything one step produces; jko_step exposes (measure, plan)."""
    measure: GridMeasure
    plan: TransportPlan
    record: StepRecord
    potentials: np.ndarray


@dataclass
class SchemeState:
    """
    Iterates rho_0..rho_K of a run and the per-step records.
    """
    h: float
    T: float
    potential: PotentialSpec
    grid: TensorGrid
    measures: List[GridMeasure]
    records: List[StepRecord] = field(default_factory=list)
    initial_energy: Optional[FreeEnergy] = None
    last_plan: Optional[TransportPlan] = field(default=None, repr=False)
    plans: List[TransportPlan] = field(default_factory=list, repr=False)

    @property
    def steps(self) -> int:
        """Number of completed steps K."""
        return len(self.measures) - 1

    @property
    def final_time(self) -> float:
        """K h."""
        return self.steps * self.h

    def times(self) -> List[float]:
        """Grid times 0, h, ..., K h."""
        return [k * self.h for k in range(self.steps + 1)]

    def summary(self) -> Dict[str, object]:
        """Report-friendly digest of the run."""
        return {
            "h": self.h,
            "T": self.T,
            "steps": self.steps,
            "potential": self.potential.to_dict(),
            "grid_shape": list(self.grid.shape),
            "initial_energy": self.initial_energy.to_dict() if self.initial_energy else None,
            "records": [r.to_dict() for r in self.records],
            "total_transport": float(sum(r.transport_exact for r in self.records)),
            "min_edi_slack": float(min((r.edi_slack for r in self.records), default=0.0)),
            "min_entropic_slack": float(min((r.entropic_slack for r in self.records), default=0.0)),
        }


def _segment_logsumexp(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    # segments are contiguous, non-empty and begin at ``starts``
    peak = np.maximum.reduceat(values, starts)
    counts = np.diff(np.append(starts, values.size))
    total = np.add.reduceat(np.exp(values - np.repeat(peak, counts)), starts)
    return peak + np.log(total)


class SparseCost:
    """
    Entries of a cost matrix within ``window`` of their row minimum, kept in
    row-major order with a column grouping for the column reductions. Rows
    are never empty; columns that keep no entry are left out of ``active``.
    """

    def __init__(self, C: np.ndarray, window: float):
        keep = C <= C.min(axis=1, keepdims=True) + window
        self.shape = C.shape
        self.rows, self.cols = np.nonzero(keep)
        self.values = C[self.rows, self.cols]
        self.row_starts = np.flatnonzero(np.r_[True, np.diff(self.rows) != 0])
        self.active, self.col_index = np.unique(self.cols, return_inverse=True)
        self.by_col = np.argsort(self.col_index, kind="stable")
        self.col_starts = np.flatnonzero(np.r_[True, np.diff(self.col_index[self.by_col]) != 0])

    @property
    def size(self) -> int:
        """Number of kept entries."""
        return int(self.values.size)

    def row_logsumexp(self, values: np.ndarray) -> np.ndarray:
        """LSE of per-entry values over each row."""
        return _segment_logsumexp(values, self.row_starts)

    def col_logsumexp(self, values: np.ndarray) -> np.ndarray:
        """LSE of per-entry values over each active column."""
        return _segment_logsumexp(values[self.by_col], self.col_starts)

    def col_sum(self, values: np.ndarray) -> np.ndarray:
        """Sum of per-entry values over each active column."""
        return np.add.reduceat(values[self.by_col], self.col_starts)


def _marginal_residual(cost: SparseCost, log_plan: np.ndarray, g: np.ndarray,
                       c: np.ndarray, h: float) -> float:
    q = cost.col_sum(np.exp(log_plan))
    log_target = c - g / (2.0 * h)
    target = np.exp(log_target - logsumexp(log_target))
    return float(np.abs(q - target).sum())


def generalized_sinkhorn(cost: SparseCost, a: np.ndarray, c: np.ndarray, h: float,
                         epsilon: float, max_iters: int, tol: float,
                         g: Optional[np.ndarray] = None):
    """
    Alternating dual updates for the entropic step on the kept entries.
    ``c`` and ``g`` live on the active columns. Returns (log plan entries,
    f, g, iterations, L1 residual of the second marginal).
    """
    C = cost.values
    loga = np.log(a)
    kappa = 2.0 * h * epsilon / (epsilon + 2.0 * h)
    g = np.zeros(cost.active.size) if g is None else g.copy()
    f = epsilon * (loga - cost.row_logsumexp((g[cost.col_index] - C) / epsilon))

    residual = float("inf")
    it = 0
    for it in range(1, max_iters + 1):
        g = kappa * (c - cost.col_logsumexp((f[cost.rows] - C) / epsilon))
        f = epsilon * (loga - cost.row_logsumexp((g[cost.col_index] - C) / epsilon))
        if it % CHECK_EVERY == 0 or it == max_iters:
            log_plan = (f[cost.rows] + g[cost.col_index] - C) / epsilon
            residual = _marginal_residual(cost, log_plan, g, c, h)
            if residual < tol:
                break

    log_plan = (f[cost.rows] + g[cost.col_index] - C) / epsilon
    return log_plan, f, g, it, residual


def _exact_transport(h: float, rho_prev: GridMeasure, rho_next: GridMeasure,
                     evaluator: CostEvaluator, plan_cost: float) -> float:
    entries = rho_prev.size * rho_next.size
    if evaluator.n == 1 and (rho_prev.dim == 1 or entries <= MAX_EXACT_ENTRIES):
        # C_h(x, y) = |y - x|^2 for n = 1
        exact = wasserstein2_euclidean(rho_prev, rho_next)
    elif entries <= MAX_EXACT_ENTRIES:
        exact = solve_exact(h, rho_prev, rho_next, evaluator).cost_value
    else:
        return plan_cost
    return min(exact, plan_cost)


def _step(rho_prev: GridMeasure, h: float, V: PotentialSpec, ot_config: TransportConfig,
          evaluator: CostEvaluator, warm_start: Optional[np.ndarray] = None,
          step: int = 1) -> StepResult:
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    grid = rho_prev.grid
    if grid is None:
        raise GridError("The scheme needs a measure on a tensor grid")

    epsilon = ot_config.epsilon_for(h)
    stages = [epsilon] if warm_start is not None else epsilon_schedule(epsilon)
    support = np.flatnonzero(rho_prev.weights > 0)
    a = rho_prev.weights[support]
    targets = grid.points
    C = evaluator.pairwise(h, rho_prev.points[support], targets)
    c_full = np.log(np.full(grid.size, grid.cell_volume)) - V.value(targets) - 1.0

    # g_j - g_k stays below 2h (range of c + log of the smallest relevant mass ratio)
    window = TRUNCATION * stages[0] + 2.0 * h * (float(np.ptp(c_full)) + TRUNCATION)
    cost = SparseCost(C, window)
    c = c_full[cost.active]
    g = None if warm_start is None else warm_start[cost.active]

    iterations = 0
    for eps in stages[:-1]:
        _, _, g, used, _ = generalized_sinkhorn(
            cost, a, c, h, eps, max(ot_config.max_iters // 10, 1), 10.0 * ot_config.tol, g)
        iterations += used
    log_plan, _, g, used, residual = generalized_sinkhorn(
        cost, a, c, h, epsilon, ot_config.max_iters, ot_config.tol, g)
    iterations += used
    values = np.exp(log_plan)
    if residual >= ot_config.tol or not np.all(np.isfinite(values)):
        raise ConvergenceError(
            f"Scheme step did not converge after {iterations} iterations "
            f"(marginal residual {residual:.3e})", violation=residual, step=step)

    full = np.zeros((rho_prev.size, grid.size))
    full[support[cost.rows], cost.cols] = values
    rho_next = GridMeasure.from_weights(grid, full.sum(axis=0))

    transport = float(values @ cost.values)
    entropic = float(epsilon * np.sum(xlogy(values, values) - values))
    F_prev = free_energy(rho_prev, V)
    F_next = free_energy(rho_next, V)
    diag = C[np.arange(support.size), support]
    competitor_cost = float(a @ diag)
    competitor_entropic = float(epsilon * np.sum(xlogy(a, a) - a))
    objective = (transport + entropic) / (2.0 * h) + F_next.total
    competitor = (competitor_cost + competitor_entropic) / (2.0 * h) + F_prev.total
    transport_exact = _exact_transport(h, rho_prev, rho_next, evaluator, transport)

    plan = TransportPlan(rho_prev, rho_next, full, transport, "entropic",
                         epsilon=epsilon, iterations=iterations, converged=True)
    plan.violation = plan.marginal_violation()

    record = StepRecord(
        step=step,
        time=step * h,
        free_energy=F_next,
        second_moment=rho_next.second_moment(),
        transport_cost=transport,
        transport_exact=transport_exact,
        entropic_term=entropic,
        competitor_cost=competitor_cost,
        competitor_entropic=competitor_entropic,
        boundary_mass=rho_next.boundary_mass(),
        iterations=iterations,
        epsilon=epsilon,
        objective=objective,
        edi_slack=(F_prev.total + competitor_cost / (2.0 * h)
                   - F_next.total - transport_exact / (2.0 * h)),
        entropic_slack=competitor - objective,
        plan_entries=cost.size,
    )
    potentials = np.zeros(grid.size)
    potentials[cost.active] = g
    return StepResult(rho_next, plan, record, potentials)


def jko_step(rho_prev: GridMeasure, h: float, V: PotentialSpec,
             ot_config: Optional[TransportConfig] = None,
             evaluator: Optional[CostEvaluator] = None) -> Tuple[GridMeasure, TransportPlan]:
    """
    One step of the scheme from rho_prev; returns the new measure and the plan.
    """
    ot_config = ot_config or TransportConfig()
    evaluator = evaluator or CostEvaluator(V.n, V.d)
    result = _step(rho_prev, h, V, ot_config, evaluator)
    return result.measure, result.plan


def _guard(history: Dict[str, List[float]], record: StepRecord, h: float) -> None:
    values = {
        "second_moment": record.second_moment,
        "positive_entropy": record.free_energy.positive_entropy,
        "step_cost_rate": record.transport_cost / h,
    }
    for name, value in values.items():
        past = history.setdefault(name, [])
        if len(past) >= GUARD_WARMUP:
            bound = GUARD_FACTOR * max(float(np.median(past)), GUARD_FLOORS[name])
            if value > bound:
                raise MonitorError(
                    f"Monitor {name}={value:.6g} exceeds {GUARD_FACTOR:g}x its running median "
                    f"at step {record.step}", name, record.step)
        past.append(value)


def run_scheme(rho0: GridMeasure, h: float, T: float, V: PotentialSpec,
               ot_config: Optional[TransportConfig] = None,
               evaluator: Optional[CostEvaluator] = None,
               keep_plans: bool = False) -> SchemeState:
    """
    K = ceil(T/h) steps from rho0 with monitors recorded every step.
    """
    if not h > 0 or not T > 0:
        raise ValueError(f"h and T must be positive, got h={h}, T={T}")
    if rho0.grid is None:
        raise GridError("The scheme needs a measure on a tensor grid")
    ot_config = ot_config or TransportConfig()
    evaluator = evaluator or CostEvaluator(V.n, V.d)

    initial = free_energy(rho0, V)
    if not np.isfinite(initial.total):
        raise ValueError("Initial free energy is not finite")

    K = max(1, ceil(T / h - 1e-12))
    state = SchemeState(h, T, V, rho0.grid, [rho0], initial_energy=initial)
    logger.info("Running %d steps with h=%g (T=%g) on a %s grid", K, h, T,
                "x".join(str(m) for m in rho0.grid.shape))

    history: Dict[str, List[float]] = {}
    warm = None
    current = rho0
    for k in range(1, K + 1):
        result = _step(current, h, V, ot_config, evaluator, warm, step=k)
        record = result.record
        logger.info("step %d/%d F=%.8g W=%.4g slack=%.2e iterations=%d",
                    k, K, record.free_energy.total, record.transport_exact,
                    record.edi_slack, record.iterations)
        if record.boundary_mass > 1e-6:
            logger.warning("Boundary mass %.2e at step %d; the grid may be too small",
                           record.boundary_mass, k)
        _guard(history, record, h)
        state.measures.append(result.measure)
        state.records.append(record)
        state.last_plan = result.plan
        if keep_plans:
            state.plans.append(result.plan)
        warm = result.potentials
        current = result.measure
    return state


def interpolate(state: SchemeState, t: float) -> GridMeasure:
    """
    Piecewise-constant interpolant: rho_0 at t = 0, rho_k for (k-1)h < t <= kh.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t > state.final_time * (1 + 1e-12):
        raise ValueError(f"t={t} is beyond the last step time {state.final_time}")
    if t == 0:
        return state.measures[0]
    k = max(1, ceil(t / state.h - 1e-9))
    return state.measures[min(k, state.steps)]
