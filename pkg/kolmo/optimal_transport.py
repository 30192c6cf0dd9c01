"""
Monge-Kantorovich cost between grid measures for the mean-squared-derivative
cost: exact linear programming at small scale and log-domain Sinkhorn at grid
scale, plus the Euclidean W2 used by the scheme's equicontinuity monitor.
"""
# built-in imports
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

# third party imports
import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial.distance import cdist
from scipy.special import logsumexp, xlogy

# kolmo imports
from kolmo.cost_kernel import CostEvaluator
from kolmo.grid import GridMeasure

logger = logging.getLogger(__name__)

MAX_EXACT_ENTRIES = 10_000
MARGINAL_TOLERANCE = 1e-8


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message: str, violation: float = float("nan"),
                 step: Optional[int] = None):
        """
        Keep the final violation and, for scheme runs, the failing step index.
        """
        super().__init__(message)
        self.violation = violation
        self.step = step


@dataclass
class TransportPlan:
    """
    A coupling between two grid measures and its transport cost.

    ``method`` is "exact" or "entropic"; ``epsilon`` is set for the latter.
    ``cost_value`` never includes the entropy term.
    """
    source: GridMeasure
    target: GridMeasure
    matrix: np.ndarray
    cost_value: float
    method: str
    epsilon: Optional[float] = None
    violation: float = 0.0
    iterations: int = 0
    converged: bool = True

    def marginal_violation(self) -> float:
        """Largest deviation of row/column sums from the prescribed weights."""
        rows = np.abs(self.matrix.sum(axis=1) - self.source.weights).max()
        cols = np.abs(self.matrix.sum(axis=0) - self.target.weights).max()
        return float(max(rows, cols))


def cost_matrix(h: float, source: GridMeasure, target: GridMeasure,
                evaluator: CostEvaluator) -> np.ndarray:
    """
    Entries C_h(x_i, y_j) for source points x_i and target points y_j.
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    width = evaluator.n * evaluator.d
    if source.dim != width or target.dim != width:
        raise ValueError(
            f"Measures of dimension {source.dim}/{target.dim} do not match n*d = {width}")
    C = evaluator.pairwise(h, source.points, target.points)
    if not np.all(np.isfinite(C)):
        raise ValueError("Cost matrix has non-finite entries")
    return C


def _solve_lp(C: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Transportation LP solved with HiGHS; returns the plan matrix."""
    m, k = C.shape
    rows = sparse.kron(sparse.eye(m), np.ones((1, k)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(k))
    A_eq = sparse.vstack([rows, cols]).tocsr()
    b_eq = np.concatenate([a, b])
    res = linprog(
        C.reshape(-1), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise ConvergenceError(f"Transport LP failed: {res.message}")
    return np.clip(res.x.reshape(m, k), 0.0, None)


def solve_exact(h: float, source: GridMeasure, target: GridMeasure,
                evaluator: CostEvaluator,
                max_entries: int = MAX_EXACT_ENTRIES) -> TransportPlan:
    """
    Optimal plan for W_h(source, target) by linear programming.
    """
    if source.size * target.size > max_entries:
        raise ValueError(
            f"Instance {source.size}x{target.size} exceeds {max_entries} entries for the exact solver")
    C = cost_matrix(h, source, target, evaluator)
    P = _solve_lp(C, source.weights, target.weights)
    plan = TransportPlan(source, target, P, float(np.sum(P * C)), "exact")
    plan.violation = plan.marginal_violation()
    logger.debug("exact plan %dx%d cost=%.6g violation=%.2e",
                 source.size, target.size, plan.cost_value, plan.violation)
    return plan


def _log_weights(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(w)


def sinkhorn_log(C: np.ndarray, a: np.ndarray, b: np.ndarray, epsilon: float,
                 max_iters: int = 10_000, tol: float = 1e-9,
                 f: Optional[np.ndarray] = None, g: Optional[np.ndarray] = None,
                 check_every: int = 10
                 ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float, int]:
    """
    Log-domain Sinkhorn on the Gibbs kernel exp(-C/epsilon).

    Returns (plan, f, g, marginal violation, iterations) where f and g are the
    dual potentials, plan = exp((f_i + g_j - C_ij)/epsilon).
    """
    m, k = C.shape
    if a.shape != (m,):
        raise ValueError(f"Source marginal shape {a.shape} does not match cost matrix rows ({m},)")
    if b.shape != (k,):
        raise ValueError(f"Target marginal shape {b.shape} does not match cost matrix cols ({k},)")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")

    loga = _log_weights(a)
    logb = _log_weights(b)
    f = np.zeros(m) if f is None else f.copy()
    g = np.zeros(k) if g is None else g.copy()

    err = float("inf")
    it = 0
    for it in range(1, max_iters + 1):
        f = epsilon * (loga - logsumexp((g[None, :] - C) / epsilon, axis=1))
        g = epsilon * (logb - logsumexp((f[:, None] - C) / epsilon, axis=0))
        if it % check_every == 0 or it == max_iters:
            rows = np.exp(logsumexp((f[:, None] + g[None, :] - C) / epsilon, axis=1))
            err = float(np.abs(rows - a).max())
            if err < tol:
                break

    P = np.exp((f[:, None] + g[None, :] - C) / epsilon)
    err = float(max(np.abs(P.sum(axis=1) - a).max(), np.abs(P.sum(axis=0) - b).max()))
    return P, f, g, err, it


def epsilon_schedule(target: float, start_factor: float = 10.0) -> list:
    """Start at start_factor * target and halve down to target."""
    schedule = []
    eps = start_factor * target
    while eps > target:
        schedule.append(eps)
        eps *= 0.5
    schedule.append(target)
    return schedule


def solve_entropic(h: float, source: GridMeasure, target: GridMeasure,
                   evaluator: CostEvaluator, epsilon: float,
                   max_iters: int = 20_000, tol: float = 1e-9) -> TransportPlan:
    """
    Entropic surrogate for W_h with epsilon scaling. On non-convergence the plan
    is still returned, flagged and logged.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    C = cost_matrix(h, source, target, evaluator)
    a, b = source.weights, target.weights

    f = g = None
    total = 0
    schedule = epsilon_schedule(epsilon)
    for eps in schedule[:-1]:
        _, f, g, _, used = sinkhorn_log(C, a, b, eps, max(max_iters // 10, 1), tol * 10, f, g)
        total += used
    P, f, g, err, used = sinkhorn_log(C, a, b, epsilon, max_iters, tol, f, g)
    total += used

    converged = err < tol
    if not converged:
        logger.warning("Sinkhorn stopped after %d iterations with marginal violation %.3e",
                       total, err)
    return TransportPlan(source, target, P, float(np.sum(P * C)), "entropic",
                         epsilon=epsilon, violation=err, iterations=total, converged=converged)


def _w2_sorted(xs: np.ndarray, a: np.ndarray, ys: np.ndarray, b: np.ndarray) -> float:
    """Exact squared W2 on the line via the monotone coupling."""
    ix = np.argsort(xs, kind="stable")
    iy = np.argsort(ys, kind="stable")
    xs, a = xs[ix], a[ix].copy()
    ys, b = ys[iy], b[iy].copy()
    i = j = 0
    total = 0.0
    while i < len(xs) and j < len(ys):
        mass = min(a[i], b[j])
        total += mass * (xs[i] - ys[j]) ** 2
        a[i] -= mass
        b[j] -= mass
        if a[i] <= 1e-15:
            i += 1
        if b[j] <= 1e-15:
            j += 1
    return total


def _entropic_ot(C: np.ndarray, a: np.ndarray, b: np.ndarray, epsilon: float,
                 max_iters: int, tol: float) -> float:
    """<C, P> + epsilon KL(P | a x b) at the Sinkhorn plan."""
    P, _, _, err, _ = sinkhorn_log(C, a, b, epsilon, max_iters, tol)
    if err >= tol:
        logger.warning("Sinkhorn divergence solve stopped with marginal violation %.3e", err)
    ratio = np.where(P > 0, P / np.outer(a, b), 1.0)
    return float(np.sum(P * C) + epsilon * np.sum(xlogy(P, ratio)))


def sinkhorn_divergence(source: GridMeasure, target: GridMeasure, epsilon: float,
                        max_iters: int = 2_000, tol: float = 1e-6) -> float:
    """
    Debiased entropic estimate of the squared Euclidean W2:
    OT_eps(a, b) - (OT_eps(a, a) + OT_eps(b, b)) / 2, clipped at zero.
    """
    a_mask = source.weights > 0
    b_mask = target.weights > 0
    X, a = source.points[a_mask], source.weights[a_mask]
    Y, b = target.points[b_mask], target.weights[b_mask]
    cross = _entropic_ot(cdist(X, Y, "sqeuclidean"), a, b, epsilon, max_iters, tol)
    left = _entropic_ot(cdist(X, X, "sqeuclidean"), a, a, epsilon, max_iters, tol)
    right = _entropic_ot(cdist(Y, Y, "sqeuclidean"), b, b, epsilon, max_iters, tol)
    return max(0.0, cross - 0.5 * (left + right))


def wasserstein2_euclidean(source: GridMeasure, target: GridMeasure,
                           max_entries: int = MAX_EXACT_ENTRIES,
                           fallback_epsilon: Optional[float] = None) -> float:
    """
    Squared Euclidean Wasserstein distance, exact. Measures on the line use the
    monotone coupling; otherwise a linear program. Instances above
    ``max_entries`` fall back to the Sinkhorn divergence when
    ``fallback_epsilon`` is given.
    """
    if source.dim != target.dim:
        raise ValueError(f"Dimension mismatch: {source.dim} vs {target.dim}")
    if source.dim == 1:
        return _w2_sorted(source.points[:, 0], source.weights,
                          target.points[:, 0], target.weights)
    if source.size * target.size > max_entries:
        if fallback_epsilon is not None:
            logger.debug("W2 on %dx%d points via Sinkhorn divergence (eps=%g)",
                         source.size, target.size, fallback_epsilon)
            return sinkhorn_divergence(source, target, fallback_epsilon)
        raise ValueError(
            f"Instance {source.size}x{target.size} exceeds {max_entries} entries for the exact solver")
    C = cdist(source.points, target.points, "sqeuclidean")
    P = _solve_lp(C, source.weights, target.weights)
    return float(np.sum(P * C))
