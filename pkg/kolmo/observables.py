"""
Smooth test functions on R^{dn} with gradients and Hessian diagonals.

Used to test the Dirac limit of the kernel and the discrete Euler-Lagrange
equation of the scheme. Every function takes points as an (N, dim) array.
"""
# built-in imports
from dataclasses import dataclass
from typing import Optional, Sequence

# third party imports
import numpy as np


class Observable:
    """
    Base class. ``support_box`` is None for functions without compact support.
    """

    def value(self, points: np.ndarray) -> np.ndarray:
        """phi at every point, shape (N,)."""
        raise NotImplementedError

    def grad(self, points: np.ndarray) -> np.ndarray:
        """Gradient at every point, shape (N, dim)."""
        raise NotImplementedError

    def hessian_diag(self, points: np.ndarray) -> np.ndarray:
        """Pure second derivatives at every point, shape (N, dim)."""
        raise NotImplementedError

    def support_box(self) -> Optional[np.ndarray]:
        """(dim, 2) array of [low, high] per coordinate, or None."""
        return None

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.value(np.atleast_2d(points))


@dataclass
class Constant(Observable):
    """phi = level everywhere."""
    level: float = 1.0

    def value(self, points):
        return np.full(np.atleast_2d(points).shape[0], float(self.level))

    def grad(self, points):
        return np.zeros_like(np.atleast_2d(points), dtype=float)

    def hessian_diag(self, points):
        return np.zeros_like(np.atleast_2d(points), dtype=float)


class Gaussian(Observable):
    """phi(x) = exp(-sum_k a_k (x_k - c_k)^2)."""

    def __init__(self, center: Sequence[float], rates: Sequence[float]):
        """
        Initialize with a centre and positive per-coordinate rates a_k.
        """
        self.center = np.asarray(center, dtype=float)
        self.rates = np.broadcast_to(np.asarray(rates, dtype=float), self.center.shape).copy()
        if np.any(self.rates <= 0):
            raise ValueError("Gaussian rates must be positive")

    def value(self, points):
        z = np.atleast_2d(points) - self.center
        return np.exp(-np.sum(self.rates * z ** 2, axis=1))

    def grad(self, points):
        z = np.atleast_2d(points) - self.center
        return -2.0 * self.rates * z * self.value(points)[:, None]

    def hessian_diag(self, points):
        z = np.atleast_2d(points) - self.center
        return (4.0 * self.rates ** 2 * z ** 2 - 2.0 * self.rates) * self.value(points)[:, None]


class Bump(Observable):
    """
    phi(x) = exp(-1/q) with q = 1 - sum_k ((x_k - c_k)/r_k)^2, zero where q <= 0.

    Smooth and supported in the box c +- r.
    """

    def __init__(self, center: Sequence[float], radii: Sequence[float]):
        """
        Initialize with a centre and positive per-coordinate radii.
        """
        self.center = np.asarray(center, dtype=float)
        self.radii = np.broadcast_to(np.asarray(radii, dtype=float), self.center.shape).copy()
        if np.any(self.radii <= 0):
            raise ValueError("Bump radii must be positive")

    def _parts(self, points):
        z = np.atleast_2d(points) - self.center
        q = 1.0 - np.sum((z / self.radii) ** 2, axis=1)
        inside = q > 0
        safe_q = np.where(inside, q, 1.0)
        phi = np.where(inside, np.exp(-1.0 / safe_q), 0.0)
        # dq/dx_k
        dq = -2.0 * z / self.radii ** 2
        return phi, safe_q, dq, inside

    def value(self, points):
        return self._parts(points)[0]

    def grad(self, points):
        phi, q, dq, _ = self._parts(points)
        return (phi / q ** 2)[:, None] * dq

    def hessian_diag(self, points):
        phi, q, dq, _ = self._parts(points)
        ddq = -2.0 / self.radii ** 2
        inv = 1.0 / q[:, None]
        return phi[:, None] * (dq ** 2 * (inv ** 4 - 2.0 * inv ** 3) + ddq * inv ** 2)

    def support_box(self):
        return np.stack([self.center - self.radii, self.center + self.radii], axis=1)
