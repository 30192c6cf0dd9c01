"""
Fundamental solution of the degenerate Kolmogorov equation

    d/dt f = sum_{i>=2} x_i . grad_{x_{i-1}} f + Lap_{x_n} f

in the form Phi(t, x, y) = beta t^{-n^2 d/2} exp(-C_t(x, y)/(4t)), and the
numerical checks that it is one: PDE residuals, normalisation, the Dirac
limit and the semigroup property. Phi(t, x, .) is also the transition
density of the forward equation, which evolve_by_kernel uses to build
reference solutions for the scheme.
"""
# built-in imports
import logging
from math import pi
from typing import Dict, List, NamedTuple, Optional, Sequence

# third party imports
import numpy as np
from scipy import linalg

# kolmo imports
from kolmo.cost_kernel import CostEvaluator
from kolmo.cost_kernel.exact import build_M, rat_det, symmetric_part
from kolmo.grid import GridError, GridMeasure, TensorGrid
from kolmo.observables import Constant, Observable
from kolmo.utils.parallel import thread_map
from kolmo.utils.quadrature import tensor_hermgauss, tensor_trapezoid

logger = logging.getLogger(__name__)

# Quadrature checks are restricted to n*d <= MAX_QUADRATURE_DIM.
MAX_QUADRATURE_DIM = 3
# exp(-TAIL_CUTOFF^2) is below double precision relative to the peak.
TAIL_CUTOFF = 6.5
MAX_MASS_ERROR = 0.01
DEFAULT_REFINEMENT_STEPS = (4e-2, 2e-2, 1e-2, 5e-3)
DEFAULT_DIRAC_TIMES = (0.5, 0.25, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001)


def beta_constant(n: int, d: int = 1) -> float:
    """
    Normalising constant (det(M_s)/(4 pi)^n)^{d/2}, with det(M_s) exact.
    """
    Ms = symmetric_part(build_M(n))
    det = rat_det(Ms)
    if det <= 0:
        raise ValueError(f"Symmetric part of M is not positive definite for n={n}")
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")
    return float((float(det) / (4.0 * pi) ** n) ** (d / 2.0))


class EvolvedMeasure(NamedTuple):
    """Result of evolve_by_kernel: the renormalised measure and the mass lost on the grid."""
    measure: GridMeasure
    mass_error: float


class Kernel:
    """
    Phi for a fixed order n and block dimension d.
    """

    def __init__(self, n: int, d: int = 1, evaluator: Optional[CostEvaluator] = None):
        """
        Build the cost evaluator and the normalising constant, then check
        int Phi(1, x, 0) dx = 1.
        """
        self.evaluator = evaluator or CostEvaluator(n, d)
        if self.evaluator.n != n or self.evaluator.d != d:
            raise ValueError("Evaluator order/dimension do not match the kernel")
        self.n = n
        self.d = d
        self.beta = beta_constant(n, d)
        self._log_beta = float(np.log(self.beta))

        _, _, logdet = self._x_frame(1.0, np.zeros(n * d))
        # the Gaussian integral of the kernel in closed form
        total = float(np.exp(self._log_prefactor(1.0) - d * logdet) * pi ** (n * d / 2.0))
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"Kernel normalisation failed for n={n}, d={d}: {total!r}")

    @property
    def width(self) -> int:
        """Dimension n*d of the state space."""
        return self.n * self.d

    def _log_prefactor(self, t: float) -> float:
        return self._log_beta - 0.5 * self.n ** 2 * self.d * np.log(t)

    @staticmethod
    def _check_time(t: float) -> float:
        t = float(t)
        if not t > 0:
            raise ValueError(f"t must be positive, got {t}")
        return t

    def phi(self, t: float, x, y) -> float:
        """Phi(t, x, y) for single points."""
        t = self._check_time(t)
        C = self.evaluator.cost(t, x, y)
        return float(np.exp(self._log_prefactor(t) - C / (4.0 * t)))

    def phi_matrix(self, t: float, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Phi(t, X_i, Y_j) as an |X| x |Y| matrix."""
        t = self._check_time(t)
        C = self.evaluator.pairwise(t, X, Y)
        return np.exp(self._log_prefactor(t) - C / (4.0 * t))

    def peak(self, t: float) -> float:
        """Upper bound beta t^{-n^2 d/2} of Phi(t, ., .)."""
        t = self._check_time(t)
        return float(np.exp(self._log_prefactor(t)))

    # PDE residual

    def pde_residual(self, t: float, x, y, fd_step: float = 1e-4) -> float:
        """
        Relative residual of the backward equation applied to Phi in (t, x), by
        central differences: time step fd_step*t, space step fd_step*(1+|x|).
        """
        t = self._check_time(t)
        if not fd_step > 0:
            raise ValueError(f"fd_step must be positive, got {fd_step}")
        if t < 10.0 * fd_step:
            raise ValueError(f"t={t} is too small for differencing with step {fd_step}")
        n, d = self.n, self.d
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        if x.size != self.width or y.size != self.width:
            raise ValueError(f"Expected points with {self.width} coordinates")

        tau = fd_step * t
        delta = fd_step * (1.0 + float(np.linalg.norm(x)))

        def f(tt, xx):
            return self.phi(tt, xx, y)

        dt = (f(t + tau, x) - f(t - tau, x)) / (2.0 * tau)
        centre = f(t, x)
        X = x.reshape(n, d)

        transport = 0.0
        for i in range(1, n):
            for k in range(d):
                e = np.zeros((n, d))
                e[i - 1, k] = delta
                e = e.reshape(-1)
                derivative = (f(t, x + e) - f(t, x - e)) / (2.0 * delta)
                transport += X[i, k] * derivative

        laplacian = 0.0
        for k in range(d):
            e = np.zeros((n, d))
            e[n - 1, k] = delta
            e = e.reshape(-1)
            laplacian += (f(t, x + e) - 2.0 * centre + f(t, x - e)) / delta ** 2

        scale = max(abs(dt), self.peak(t) / t)
        return (dt - transport - laplacian) / scale

    def residual_refinement(self, t: float, x, y,
                            steps: Sequence[float] = DEFAULT_REFINEMENT_STEPS) -> Dict[str, object]:
        """
        Residuals over a sequence of finite-difference steps and the fitted
        log-log slope (2 for a consistent second-order stencil).
        """
        if len(steps) < 2:
            raise ValueError("Need at least two steps to fit a slope")
        residuals = [self.pde_residual(t, x, y, s) for s in steps]
        magnitudes = np.maximum(np.abs(residuals), 1e-300)
        slope = float(np.polyfit(np.log(steps), np.log(magnitudes), 1)[0])
        return {"steps": list(steps), "residuals": residuals, "slope": slope}

    # Quadrature in whitened coordinates

    def _whitening(self, S: np.ndarray):
        """Lower Cholesky factor of an n x n precision block and log det."""
        try:
            R = linalg.cholesky(S, lower=True)
        except linalg.LinAlgError as e:
            raise ValueError("Quadratic form is not positive definite") from e
        return R, float(np.sum(np.log(np.diag(R))))

    def _x_frame(self, t: float, y: np.ndarray):
        """
        Centre, Cholesky factor and log det of Phi(t, ., y) viewed as a Gaussian
        exp(-(x-c)^T S (x-c)) in x, blockwise.
        """
        times = self.evaluator.times
        H1, H2 = times.h1(t), times.h2(t)
        Y = y.reshape(self.n, self.d)
        centre = linalg.solve_triangular(H2, H1 @ Y, lower=False)
        S = t ** (1 - 2 * self.n) * H2.T @ self.evaluator.M_s @ H2 / 4.0
        R, logdet = self._whitening(S)
        return centre, R, logdet

    def _z_frame(self, s: float, x: np.ndarray):
        """Same for Phi(s, x, .) viewed as a Gaussian in its second argument."""
        times = self.evaluator.times
        H1, H2 = times.h1(s), times.h2(s)
        X = x.reshape(self.n, self.d)
        centre = np.linalg.solve(H1, H2 @ X)
        S = s ** (1 - 2 * self.n) * H1.T @ self.evaluator.M_s @ H1 / 4.0
        R, logdet = self._whitening(S)
        return centre, R, logdet

    def _unwhiten(self, centre: np.ndarray, R: np.ndarray, u: np.ndarray) -> np.ndarray:
        """x = centre + R^{-T} u, blockwise, for u of shape (N, n*d)."""
        U = u.reshape(-1, self.n, self.d)
        count = U.shape[0]
        stacked = U.transpose(1, 0, 2).reshape(self.n, count * self.d)
        shift = linalg.solve_triangular(R.T, stacked, lower=False)
        shift = shift.reshape(self.n, count, self.d).transpose(1, 0, 2)
        return (centre[None] + shift).reshape(count, self.width)

    def _check_quadrature_dim(self):
        if self.width > MAX_QUADRATURE_DIM:
            raise ValueError(
                f"Quadrature checks support n*d <= {MAX_QUADRATURE_DIM}, got {self.width}")

    def normalization_check(self, t: float, y, nodes: int = 8) -> float:
        """
        Gauss-Hermite value of int Phi(t, x, y) dx. Nodes are placed in the
        whitened frame of the Gaussian factor and the kernel is evaluated there.
        """
        t = self._check_time(t)
        y = np.asarray(y, dtype=float).reshape(-1)
        self._check_quadrature_dim()
        centre, R, logdet = self._x_frame(t, y)
        u, weights = tensor_hermgauss(self.width, nodes)
        points = self._unwhiten(centre, R, u)
        values = self.phi_matrix(t, points, y[None, :])[:, 0]
        jacobian = np.exp(-self.d * logdet)
        return float(jacobian * np.sum(weights * np.exp(np.sum(u ** 2, axis=1)) * values))

    def integrate_against(self, t: float, y, observable: Observable,
                          tol: float = 1e-9, max_points: int = 200_000) -> Dict[str, object]:
        """
        int Phi(t, x, y) phi(x) dx by trapezoid rules in whitened coordinates
        on the box |u| <= TAIL_CUTOFF, truncated to phi's support, doubling the
        resolution until successive values agree to ``tol``.
        """
        self._check_quadrature_dim()
        t = self._check_time(t)
        y = np.asarray(y, dtype=float).reshape(-1)
        centre, R, logdet = self._x_frame(t, y)
        factor = float(np.exp(self._log_prefactor(t) - self.d * logdet))

        lows = np.full(self.width, -TAIL_CUTOFF)
        highs = np.full(self.width, TAIL_CUTOFF)
        box = observable.support_box()
        if box is not None:
            # u = R^T (x - centre): interval image of phi's support box
            RT = R.T
            mid = (0.5 * (box[:, 0] + box[:, 1])).reshape(self.n, self.d) - centre
            half = (0.5 * (box[:, 1] - box[:, 0])).reshape(self.n, self.d)
            u_mid = (RT @ mid).reshape(-1)
            u_half = (np.abs(RT) @ half).reshape(-1)
            lows = np.maximum(lows, u_mid - u_half)
            highs = np.minimum(highs, u_mid + u_half)
            if np.any(highs <= lows):
                return {"value": 0.0, "converged": True, "nodes": 0}

        def rule(m):
            u, w = tensor_trapezoid(lows, highs, m)
            x = self._unwhiten(centre, R, u)
            return factor * float(np.sum(w * np.exp(-np.sum(u ** 2, axis=1)) * observable(x)))

        m = 17
        previous = rule(m)
        while True:
            nxt = 2 * m - 1
            if nxt ** self.width > max_points:
                logger.warning("Quadrature at t=%g did not converge within %d points", t, max_points)
                return {"value": previous, "converged": False, "nodes": m}
            current = rule(nxt)
            m = nxt
            if abs(current - previous) <= tol * max(1.0, abs(current)):
                return {"value": current, "converged": True, "nodes": m}
            previous = current

    def dirac_limit_check(self, y, t_sequence: Sequence[float] = DEFAULT_DIRAC_TIMES,
                          test_function: Optional[Observable] = None,
                          threads: Optional[int] = None) -> Dict[str, object]:
        """
        Table of |int Phi(t, x, y) phi(x) dx - phi(y)| for decreasing t.
        """
        y = np.asarray(y, dtype=float).reshape(-1)
        test_function = test_function or Constant(1.0)
        target = float(test_function(y[None])[0])
        times = sorted((self._check_time(t) for t in t_sequence), reverse=True)

        def row(t):
            result = self.integrate_against(t, y, test_function)
            return {
                "t": t,
                "value": result["value"],
                "target": target,
                "error": abs(result["value"] - target),
                "converged": result["converged"],
                "nodes": result["nodes"],
            }

        rows = thread_map(row, times, threads)
        errors = [r["error"] for r in rows]
        monotone = all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
        return {
            "rows": rows,
            "monotone": monotone,
            "final_error": errors[-1] if errors else float("nan"),
            "all_converged": all(r["converged"] for r in rows),
        }

    def semigroup_check(self, s: float, t: float, x, y, nodes: int = 24) -> Dict[str, float]:
        """
        Compare int Phi(s, x, z) Phi(t, z, y) dz with Phi(s + t, x, y).
        Gauss-Hermite in z, aligned with the first factor. Informational.
        """
        self._check_quadrature_dim()
        s = self._check_time(s)
        t = self._check_time(t)
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        centre, R, logdet = self._z_frame(s, x)
        u, w = tensor_hermgauss(self.width, nodes)
        z = self._unwhiten(centre, R, u)
        second = self.phi_matrix(t, z, y[None])[:, 0]
        integral = float(np.exp(self._log_prefactor(s) - self.d * logdet) * np.sum(w * second))
        direct = self.phi(s + t, x, y)
        scale = max(abs(direct), 1e-300)
        return {"integral": integral, "direct": direct,
                "relative_error": abs(integral - direct) / scale}


def evolve_by_kernel(rho0: GridMeasure, t: float, kernel: Optional[Kernel] = None,
                     grid: Optional[TensorGrid] = None) -> EvolvedMeasure:
    """
    Forward evolution of a grid measure under the V = 0 equation:
    rho(t, y) = sum_j w_j Phi(t, x_j, y), sampled on the output grid and
    renormalised to unit mass.
    """
    grid = grid or rho0.grid
    if grid is None:
        raise GridError("evolve_by_kernel needs an output grid")
    kernel = kernel or Kernel(rho0.dim, 1)
    if grid.dim != rho0.dim or rho0.dim != kernel.width:
        raise ValueError(f"Dimension mismatch: grid {grid.dim}, measure {rho0.dim}, kernel {kernel.width}")

    support = rho0.weights > 0
    Phi = kernel.phi_matrix(t, rho0.points[support], grid.points)
    weights = (rho0.weights[support] @ Phi) * grid.cell_volume
    mass = float(weights.sum())
    mass_error = abs(mass - 1.0)
    if mass_error > MAX_MASS_ERROR:
        raise GridError(
            f"Output grid captures mass {mass:.6f} at t={t}; refine or enlarge the grid")
    logger.debug("evolve_by_kernel t=%g mass error %.3e", t, mass_error)
    return EvolvedMeasure(GridMeasure.from_weights(grid, weights), mass_error)


def heat_kernel(t: float, x, y) -> float:
    """Gaussian heat kernel (4 pi t)^{-d/2} exp(-|x-y|^2/(4t))."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    dim = x.size
    return float((4.0 * pi * t) ** (-dim / 2.0) * np.exp(-np.sum((x - y) ** 2) / (4.0 * t)))


def moment_curve(kernel: Kernel, rho0: GridMeasure, times: List[float]) -> List[float]:
    """Second moments of evolve_by_kernel(rho0, t) over the sampled times."""
    return [evolve_by_kernel(rho0, t, kernel).measure.second_moment() for t in times]
