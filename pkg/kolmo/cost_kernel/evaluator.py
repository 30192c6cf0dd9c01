"""
Floating-point evaluation of the mean-squared-derivative cost and its
derivatives.

Points are boundary states: n blocks x_1..x_n of R^d, given either as an
(n, d) array or as a flat vector of length n*d in block order. The n x n
scalar matrices act blockwise; the d-fold Kronecker structure is never built.
"""
# built-in imports
import logging
from dataclasses import dataclass
from math import factorial
from typing import Dict, Union

# third party imports
import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

# kolmo imports
from kolmo.cost_kernel.exact import build_M, check_order, to_float

logger = logging.getLogger(__name__)

MAX_FLOAT_ORDER = 12

ArrayLike = Union[np.ndarray, list, tuple]


@dataclass(frozen=True)
class BoundaryState:
    """
    Derivatives (x_1, ..., x_n) of a curve at one endpoint, each in R^d.
    """
    coords: np.ndarray

    @classmethod
    def from_vector(cls, values: ArrayLike, n: int, d: int = 1) -> "BoundaryState":
        """Build from a flat vector of length n*d (or an (n, d) array)."""
        return cls(as_blocks(values, n, d))

    @property
    def n(self) -> int:
        """Number of derivative blocks."""
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        """Spatial dimension of each block."""
        return self.coords.shape[1]

    def flat(self) -> np.ndarray:
        """Flat vector in block order."""
        return self.coords.reshape(-1)


def as_blocks(values: Union[ArrayLike, BoundaryState], n: int, d: int) -> np.ndarray:
    """
    Coerce a boundary state to an (n, d) float array, validating shape and finiteness.
    """
    if isinstance(values, BoundaryState):
        values = values.coords
    arr = np.asarray(values, dtype=float)
    if arr.size != n * d:
        raise ValueError(f"Expected {n * d} coordinates for n={n}, d={d}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Boundary state has non-finite entries")
    return arr.reshape(n, d)


def _check_time(t: float) -> float:
    t = float(t)
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return t


class TimeMatrix:
    """
    H_1(t), H_2(t) and their t-derivatives for a fixed order, in float64.
    """

    def __init__(self, n: int):
        """
        Precompute the index patterns for order n.
        """
        check_order(n)
        self.n = n
        i, j = np.indices((n, n))
        self._upper = j >= i
        self._gap = np.where(self._upper, j - i, 0)
        self._inv_fact = np.where(
            self._upper, 1.0 / np.array([factorial(int(g)) for g in self._gap.flat]).reshape(n, n), 0.0)
        self._col_power = j.astype(float)  # column index j (0-based) is the power of t
        self._diag_power = np.arange(n, dtype=float)

    def h1(self, t: float) -> np.ndarray:
        """diag(1, t, ..., t^{n-1})."""
        return np.diag(t ** self._diag_power)

    def h1_prime(self, t: float) -> np.ndarray:
        """diag(0, 1, 2t, ..., (n-1) t^{n-2})."""
        powers = self._diag_power
        return np.diag(np.where(powers > 0, powers * t ** np.maximum(powers - 1, 0), 0.0))

    def h2(self, t: float) -> np.ndarray:
        """(H_2)_{ij} = t^{j-1}/(j-i)! for j >= i."""
        return self._inv_fact * t ** self._col_power

    def h2_prime(self, t: float) -> np.ndarray:
        """t-derivative of H_2."""
        p = self._col_power
        return self._inv_fact * np.where(p > 0, p * t ** np.maximum(p - 1, 0), 0.0)

    def free_flow(self, t: float) -> np.ndarray:
        """
        F(t)_{ij} = t^{j-i}/(j-i)! for j >= i, the cost-zero map x -> F x.
        """
        return self._inv_fact * t ** self._gap


def comparability_constant(n: int, d: int = 1, t_max: float = 1.0) -> float:
    """
    A constant K with |y-x|^2 <= K [C_t(x,y) + t^2 (|x|^2 + |y|^2)] for 0 < t <= t_max.

    Write y - x = Tbar Q_s^{-1} z + w with |z|^2 = C_t, Tbar = diag(t^{n-1}, ..., 1),
    Q_s = M_s^{1/2} and w_i = sum_{j>i} t^{j-i}/(j-i)! x_j, so |w| <= t ||W(t_max)|| |x|.
    """
    check_order(n, MAX_FLOAT_ORDER)
    if d < 1:
        raise ValueError(f"Dimension must be positive, got {d}")
    t_max = float(t_max)
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")

    M = to_float(build_M(n))
    Ms = 0.5 * (M + M.T)
    eigvals, eigvecs = linalg.eigh(Ms)
    if eigvals[0] <= 0:
        raise ValueError(f"Symmetric part of M is not positive definite for n={n}")
    Qs = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    qs_inv_norm = np.linalg.norm(np.linalg.inv(Qs), 2)

    tbar_norm = max(1.0, t_max ** (n - 1))

    i, j = np.indices((n, n))
    strict = j > i
    W = np.zeros((n, n))
    for a, b in zip(*np.nonzero(strict)):
        W[a, b] = t_max ** (b - a - 1) / factorial(b - a)
    w_norm = np.linalg.norm(W, 2) if n > 1 else 0.0

    return 2.0 * max(tbar_norm ** 2 * qs_inv_norm ** 2, w_norm ** 2)


class CostEvaluator:
    """
    Evaluates C_t(x, y) = t^{2-2n} b^T M b with b = H_1(t) y - H_2(t) x, together
    with its gradients, time derivative, Laplacian in x_n and transport term.
    """

    def __init__(self, n: int, d: int = 1, t_max: float = 1.0):
        """
        Convert M to float, check its symmetric part and compute the comparability constant.
        """
        check_order(n, MAX_FLOAT_ORDER)
        if d < 1:
            raise ValueError(f"Dimension must be positive, got {d}")
        self.n = n
        self.d = d
        self.M = to_float(build_M(n))
        self.M_s = 0.5 * (self.M + self.M.T)
        try:
            # lower factor: M_s = R R^T
            self._chol = linalg.cholesky(self.M_s, lower=True)
        except linalg.LinAlgError as e:
            raise ValueError(f"Symmetric part of M is not positive definite for n={n}") from e
        self.K_bound = comparability_constant(n, d, t_max)
        self.times = TimeMatrix(n)
        self.t_max = float(t_max)

    def _blocks(self, x) -> np.ndarray:
        return as_blocks(x, self.n, self.d)

    def _scale(self, t: float) -> float:
        return t ** (2 - 2 * self.n)

    def assemble_b(self, t: float, x, y) -> np.ndarray:
        """
        b = H_1(t) y - H_2(t) x, applied blockwise; returned as an (n, d) array.
        """
        t = _check_time(t)
        X = self._blocks(x)
        Y = self._blocks(y)
        return self.times.h1(t) @ Y - self.times.h2(t) @ X

    def _quad(self, b: np.ndarray, c: np.ndarray = None) -> float:
        if c is None:
            c = b
        return float(np.einsum("ik,ij,jk->", b, self.M_s, c))

    def cost(self, t: float, x, y) -> float:
        """Mean-squared-derivative cost C_t(x, y) >= 0."""
        b = self.assemble_b(t, x, y)
        return max(0.0, self._scale(t) * self._quad(b))

    def cost_grad_x(self, t: float, x, y) -> np.ndarray:
        """Gradient of the cost in x, as a flat vector."""
        b = self.assemble_b(t, x, y)
        g = -2.0 * self._scale(t) * self.times.h2(t).T @ self.M_s @ b
        return g.reshape(-1)

    def cost_grad_y(self, t: float, x, y) -> np.ndarray:
        """Gradient of the cost in y, as a flat vector."""
        b = self.assemble_b(t, x, y)
        g = 2.0 * self._scale(t) * self.times.h1(t).T @ self.M_s @ b
        return g.reshape(-1)

    def cost_dt(self, t: float, x, y) -> float:
        """Partial derivative of the cost in t."""
        t = _check_time(t)
        X = self._blocks(x)
        Y = self._blocks(y)
        b = self.times.h1(t) @ Y - self.times.h2(t) @ X
        db = self.times.h1_prime(t) @ Y - self.times.h2_prime(t) @ X
        n = self.n
        return ((2 - 2 * n) * t ** (1 - 2 * n) * self._quad(b)
                + 2.0 * self._scale(t) * self._quad(b, db))

    def cost_laplacian_xn(self, t: float, x=None, y=None) -> float:  # pylint: disable=unused-argument
        """
        Laplacian of the cost in the last block: 2 t^{2-2n} d (H_2^T M H_2)_{nn}.
        The cost is quadratic, so this does not depend on x or y.
        """
        t = _check_time(t)
        H2 = self.times.h2(t)
        G = H2.T @ self.M_s @ H2
        return 2.0 * self._scale(t) * self.d * G[-1, -1]

    def cost_transport_term(self, t: float, x, y) -> float:
        """sum_{i>=2} x_i . grad_{x_{i-1}} C = x^T Q grad_x C."""
        X = self._blocks(x)
        g = self.cost_grad_x(t, x, y).reshape(self.n, self.d)
        return float(np.sum(X[1:] * g[:-1]))

    def verify_cost_pde(self, t: float, x, y) -> float:
        """
        Residual of dC/dt = C/t + x^T Q grad_x C - |grad_{x_n} C|^2/(4t) + Lap_{x_n} C - 2 d n^2.
        """
        t = _check_time(t)
        g = self.cost_grad_x(t, x, y).reshape(self.n, self.d)
        rhs = (self.cost(t, x, y) / t
               + self.cost_transport_term(t, x, y)
               - float(np.sum(g[-1] ** 2)) / (4.0 * t)
               + self.cost_laplacian_xn(t)
               - 2.0 * self.d * self.n ** 2)
        return self.cost_dt(t, x, y) - rhs

    def pde_tolerance(self, t: float, x, y, rel: float = 1e-8) -> float:
        """Acceptance bound rel * (1 + |C|/t) for verify_cost_pde."""
        return rel * (1.0 + abs(self.cost(t, x, y)) / t)

    def free_flow(self, t: float, x) -> np.ndarray:
        """The y with b = 0: y_i = sum_j t^{j-i}/(j-i)! x_j, as a flat vector."""
        t = _check_time(t)
        return (self.times.free_flow(t) @ self._blocks(x)).reshape(-1)

    def _transformed(self, points: np.ndarray, H: np.ndarray) -> np.ndarray:
        P = np.asarray(points, dtype=float).reshape(-1, self.n, self.d)
        T = self._chol.T @ H
        return np.einsum("ij,mjk->mik", T, P).reshape(P.shape[0], -1)

    def pairwise(self, t: float, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """
        Matrix of C_t(X_i, Y_j). With M_s = R R^T the cost is the squared
        distance between R^T H_2 x and R^T H_1 y, scaled by t^{2-2n}.
        """
        t = _check_time(t)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        width = self.n * self.d
        if X.shape[1] != width or Y.shape[1] != width:
            raise ValueError(
                f"Point sets must have {width} columns, got {X.shape[1]} and {Y.shape[1]}")
        TX = self._transformed(X, self.times.h2(t))
        TY = self._transformed(Y, self.times.h1(t))
        return self._scale(t) * cdist(TX, TY, "sqeuclidean")

    def comparability_holds(self, t: float, x, y) -> bool:
        """Check |y-x|^2 <= K [C_t + t^2 (|x|^2 + |y|^2)] at one point."""
        X = self._blocks(x)
        Y = self._blocks(y)
        lhs = float(np.sum((Y - X) ** 2))
        rhs = self.K_bound * (self.cost(t, x, y) + t ** 2 * (np.sum(X ** 2) + np.sum(Y ** 2)))
        return lhs <= rhs * (1.0 + 1e-12) + 1e-300


def kramers_comparison(t: float, x, y, d: int = 1) -> Dict[str, float]:
    """
    Compare the n=2 matrix cost with the explicit form
    12 |y_1 - x_1 - t (x_2 + y_2)/2|^2 / t^2 + |y_2 - x_2|^2.

    Informational only.
    """
    t = _check_time(t)
    evaluator = CostEvaluator(2, d)
    X = as_blocks(x, 2, d)
    Y = as_blocks(y, 2, d)
    matrix_cost = evaluator.cost(t, X, Y)
    mid = Y[0] - X[0] - 0.5 * t * (X[1] + Y[1])
    explicit = 12.0 * float(np.sum(mid ** 2)) / t ** 2 + float(np.sum((Y[1] - X[1]) ** 2))
    scale = max(abs(matrix_cost), abs(explicit), 1e-300)
    return {
        "matrix_cost": matrix_cost,
        "explicit_cost": explicit,
        "relative_difference": abs(matrix_cost - explicit) / scale,
    }
