"""
Run diagnostics for the scheme: Euler-Lagrange and weak-form residuals,
energy-dissipation and equicontinuity tables, reference solutions and the
convergence report.
"""
# built-in imports
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

# third party imports
import numpy as np

# kolmo imports
from kolmo.config import TransportConfig
from kolmo.fundamental_solution import Kernel, evolve_by_kernel
from kolmo.grid import GridError, GridMeasure, TensorGrid
from kolmo.jko_scheme.potentials import PotentialSpec
from kolmo.jko_scheme.scheme import EDI_TOLERANCE, SchemeState, interpolate, run_scheme
from kolmo.observables import Observable
from kolmo.optimal_transport import MAX_EXACT_ENTRIES, TransportPlan, wasserstein2_euclidean
from kolmo.utils.parallel import thread_map

logger = logging.getLogger(__name__)

EQUICONTINUITY_SPREAD = 20.0


class MissingReferenceError(LookupError):
    """No reference solution exists for the requested order and potential."""


# Initial data

def gaussian_density(mean: Sequence[float], variances: Sequence[float]) -> Callable[[np.ndarray], np.ndarray]:
    """Product Gaussian density with the given mean and per-coordinate variances."""
    mean = np.asarray(mean, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if mean.shape != variances.shape or np.any(variances <= 0):
        raise ValueError("Gaussian needs matching mean/variances with positive variances")
    norm = float(np.prod(np.sqrt(2.0 * np.pi * variances)))

    def density(points: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(points) - mean
        return np.exp(-0.5 * np.sum(z ** 2 / variances, axis=1)) / norm

    return density


def gaussian_measure(grid: TensorGrid, mean: Sequence[float],
                     variances: Sequence[float]) -> GridMeasure:
    """Gaussian sampled at cell centres and renormalised."""
    return GridMeasure.from_density(grid, gaussian_density(mean, variances))


# Reference solutions

def _is_standard_quadratic(V: PotentialSpec) -> bool:
    c = V.coefficients
    return c.size == 3 and np.allclose(c, [0.0, 0.0, 0.5], rtol=0, atol=1e-15)


def ou_reference(rho0: GridMeasure, t: float) -> GridMeasure:
    """
    Ornstein-Uhlenbeck evolution (V = x^2/2, n = 1): each atom x spreads to
    N(x e^{-t}, 1 - e^{-2t}).
    """
    if rho0.grid is None or rho0.dim != 1:
        raise GridError("The Ornstein-Uhlenbeck reference needs a one-dimensional grid measure")
    grid = rho0.grid
    decay = np.exp(-t)
    var = 1.0 - np.exp(-2.0 * t)
    support = rho0.weights > 0
    x = rho0.points[support, 0]
    y = grid.points[:, 0]
    kernel = np.exp(-(y[None, :] - decay * x[:, None]) ** 2 / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    weights = (rho0.weights[support] @ kernel) * grid.cell_volume
    return GridMeasure.from_weights(grid, weights)


def ou_gaussian_marginal(mean: float, variance: float, t: float) -> Tuple[float, float]:
    """Mean and variance at time t of the OU flow started from N(mean, variance)."""
    return mean * np.exp(-t), 1.0 + (variance - 1.0) * np.exp(-2.0 * t)


def reference_solution(rho0: GridMeasure, V: PotentialSpec, t: float,
                       kernel: Optional[Kernel] = None) -> GridMeasure:
    """
    Kernel evolution for V = 0, the OU flow for n = 1 and V = x^2/2. Other
    combinations have no reference.
    """
    if V.is_zero:
        kernel = kernel or Kernel(V.n, V.d)
        return evolve_by_kernel(rho0, t, kernel).measure
    if V.n == 1 and V.d == 1 and _is_standard_quadratic(V):
        return ou_reference(rho0, t)
    raise MissingReferenceError(
        f"No reference solution for n={V.n} with a {V.kind} potential {V.coefficients.tolist()}")


def has_reference(V: PotentialSpec) -> bool:
    """Whether reference_solution supports V."""
    return V.is_zero or (V.n == 1 and V.d == 1 and _is_standard_quadratic(V))


# Residuals

def _check_interior(grid: Optional[TensorGrid], phi: Observable) -> None:
    box = phi.support_box()
    if box is None or grid is None:
        return
    spacing = grid.spacings
    lows = np.array([axis[0] for axis in grid.axes])
    highs = np.array([axis[-1] for axis in grid.axes])
    if np.any(box[:, 0] <= lows + 0.5 * spacing) or np.any(box[:, 1] >= highs - 0.5 * spacing):
        raise GridError("Test function support touches the grid boundary")


def generator_action(points: np.ndarray, phi: Observable, V: PotentialSpec) -> np.ndarray:
    """
    (L phi)(x) = sum_{i>=2} x_i . grad_{x_{i-1}} phi - grad V . grad_{x_n} phi + Lap_{x_n} phi.
    """
    n, d = V.n, V.d
    blocks = np.atleast_2d(points).reshape(-1, n, d)
    grad = phi.grad(points).reshape(-1, n, d)
    transport = np.sum(blocks[:, 1:] * grad[:, :-1], axis=(1, 2))
    drift = np.sum(V.grad(points) * grad[:, -1], axis=1)
    laplacian = phi.hessian_diag(points)[:, (n - 1) * d:].sum(axis=1)
    return transport - drift + laplacian


def euler_lagrange_terms(rho_prev: GridMeasure, rho_next: GridMeasure, plan: TransportPlan,
                         h: float, phi: Observable,
                         V: Optional[PotentialSpec] = None) -> Dict[str, float]:
    """
    The four integrals of the discrete Euler-Lagrange equation of one step
    and their signed sum.
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    V = V or PotentialSpec("zero", n=rho_next.dim, d=1)
    _check_interior(rho_next.grid, phi)
    if plan.matrix.shape != (rho_prev.size, rho_next.size):
        raise ValueError("Plan does not couple the given measures")

    X = rho_prev.points
    Y = rho_next.points
    P = plan.matrix
    G = phi.grad(Y)
    displacement = P.sum(axis=0)[:, None] * Y - P.T @ X
    plan_term = float(np.sum(displacement * G)) / h

    n, d = V.n, V.d
    w = rho_next.weights
    blocks = Y.reshape(-1, n, d)
    grad_blocks = G.reshape(-1, n, d)
    transport_term = float(w @ np.sum(blocks[:, 1:] * grad_blocks[:, :-1], axis=(1, 2)))
    drift_term = float(w @ np.sum(V.grad(Y) * grad_blocks[:, -1], axis=1))
    laplacian_term = float(w @ phi.hessian_diag(Y)[:, (n - 1) * d:].sum(axis=1))
    return {
        "plan": plan_term,
        "transport": transport_term,
        "drift": drift_term,
        "laplacian": laplacian_term,
        "residual": plan_term - transport_term + drift_term - laplacian_term,
    }


def euler_lagrange_residual(rho_prev: GridMeasure, rho_next: GridMeasure, plan: TransportPlan,
                            h: float, phi: Observable, V: Optional[PotentialSpec] = None) -> float:
    """Signed Euler-Lagrange residual of one step; zero for constant phi."""
    return euler_lagrange_terms(rho_prev, rho_next, plan, h, phi, V)["residual"]


def weak_form_residual(state: SchemeState, phi: Observable) -> Dict[str, float]:
    """
    int phi rho_K - int phi rho_0 - h sum_k int (L phi) rho_k for a
    time-independent phi.
    """
    _check_interior(state.grid, phi)
    first, last = state.measures[0], state.measures[-1]
    change = float(last.weights @ phi(last.points) - first.weights @ phi(first.points))
    generator = state.h * sum(
        float(rho.weights @ generator_action(rho.points, phi, state.potential))
        for rho in state.measures[1:])
    return {"change": change, "generator": generator, "residual": change - generator}


# Run tables

def energy_dissipation_table(state: SchemeState) -> Dict[str, object]:
    """
    Per-step energy inequality slacks and the telescoped transport bound
    sum W <= 2h (F_0 - F_K) + C h^2 (sum M_2 + K) with fitted C.
    """
    h = state.h
    rows = []
    previous = state.initial_energy.total if state.initial_energy else float("nan")
    for record in state.records:
        rows.append({
            "step": record.step,
            "free_energy_prev": previous,
            "free_energy": record.free_energy.total,
            "transport_over_2h": record.transport_exact / (2.0 * h),
            "self_transport_over_2h": record.competitor_cost / (2.0 * h),
            "edi_slack": record.edi_slack,
            "entropic_slack": record.entropic_slack,
        })
        previous = record.free_energy.total

    K = len(state.records)
    total = float(sum(r.transport_exact for r in state.records))
    drop = 2.0 * h * (state.initial_energy.total - state.records[-1].free_energy.total) if K else 0.0
    moments = float(sum(r.second_moment for r in state.records))
    excess = max(0.0, total - drop)
    fitted = excess / (h * h * (moments + K)) if K else 0.0
    return {
        "rows": rows,
        "total_transport": total,
        "transport_over_h": total / h,
        "energy_drop_2h": drop,
        "fitted_constant": fitted,
        "min_edi_slack": min((r["edi_slack"] for r in rows), default=0.0),
        "min_entropic_slack": min((r["entropic_slack"] for r in rows), default=0.0),
        "edi_holds": all(r["edi_slack"] >= -EDI_TOLERANCE for r in rows),
    }


def default_pairs(state: SchemeState) -> List[Tuple[float, float]]:
    """
    Adjacent step pairs, plus every step against t = 0 on the line and only
    the final step against t = 0 in higher dimensions.
    """
    times = state.times()
    pairs = [(times[k], times[k + 1]) for k in range(len(times) - 1)]
    if state.grid.dim == 1:
        pairs += [(0.0, t) for t in times[2:]]
    elif len(times) > 2:
        pairs.append((0.0, times[-1]))
    return pairs


def equicontinuity_monitor(state: SchemeState,
                           pairs: Optional[Sequence[Tuple[float, float]]] = None,
                           max_entries: int = MAX_EXACT_ENTRIES,
                           threads: Optional[int] = None) -> Dict[str, object]:
    """
    W2^2 between interpolants at sampled time pairs and the ratio
    W2^2 / (|t2 - t1| + h), bounded when max/median stays below EQUICONTINUITY_SPREAD.
    """
    pairs = list(pairs) if pairs is not None else default_pairs(state)
    fallback = float(np.min(state.grid.spacings)) ** 2

    def row(pair):
        t1, t2 = pair
        if t1 == t2:
            w2 = 0.0
        else:
            w2 = wasserstein2_euclidean(interpolate(state, t1), interpolate(state, t2),
                                        max_entries, fallback_epsilon=fallback)
        return {"t1": t1, "t2": t2, "w2_squared": w2, "ratio": w2 / (abs(t2 - t1) + state.h)}

    rows = thread_map(row, pairs, threads)
    ratios = np.array([r["ratio"] for r in rows if r["t1"] != r["t2"]])
    if ratios.size:
        max_ratio = float(ratios.max())
        median_ratio = float(np.median(ratios))
        bounded = median_ratio == 0.0 or max_ratio / median_ratio < EQUICONTINUITY_SPREAD
    else:
        max_ratio = median_ratio = 0.0
        bounded = True
    return {"rows": rows, "max_ratio": max_ratio, "median_ratio": median_ratio, "bounded": bounded}


def convergence_report(rho0: GridMeasure, V: PotentialSpec, T: float, h_list: Sequence[float],
                       ot_config: Optional[TransportConfig] = None,
                       kernel: Optional[Kernel] = None,
                       threads: Optional[int] = None) -> Dict[str, object]:
    """
    L1 grid error at time T against the reference solution for each h, with
    empirical orders.
    """
    if not h_list:
        raise ValueError("h_list is empty")
    reference = reference_solution(rho0, V, T, kernel)
    ot_config = ot_config or TransportConfig()
    steps = sorted(h_list, reverse=True)

    def row(h):
        state = run_scheme(rho0, h, T, V, ot_config)
        approx = interpolate(state, min(T, state.final_time))
        table = energy_dissipation_table(state)
        return {
            "h": h,
            "steps": state.steps,
            "epsilon": ot_config.epsilon_for(h),
            "l1_error": approx.l1_distance(reference),
            "transport_over_h": table["transport_over_h"],
            "min_edi_slack": table["min_edi_slack"],
            "boundary_mass": approx.boundary_mass(),
        }

    rows = thread_map(row, steps, threads)
    errors = [r["l1_error"] for r in rows]
    orders = [
        float(np.log(errors[i] / errors[i + 1]) / np.log(steps[i] / steps[i + 1]))
        if errors[i + 1] > 0 and errors[i] > 0 else float("nan")
        for i in range(len(rows) - 1)
    ]
    rates = [r["transport_over_h"] for r in rows]
    spread = max(rates) / min(rates) if min(rates) > 0 else float("inf")
    for r in rows:
        logger.info("h=%g L1 error %.4e", r["h"], r["l1_error"])
    return {
        "rows": rows,
        "orders": orders,
        "monotone": all(b < a for a, b in zip(errors, errors[1:])),
        "transport_rate_spread": spread,
    }
