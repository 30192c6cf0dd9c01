"""
Confining potentials V acting on the last block x_n.
"""
# built-in imports
import logging
from typing import Dict, Optional, Sequence

# third party imports
import numpy as np
from numpy.polynomial import polynomial as P

# kolmo imports
from kolmo.config import POTENTIAL_KINDS, PotentialConfig

logger = logging.getLogger(__name__)


class PotentialSpec:
    """
    V(x) = sum_k v(s_k) over the coordinates s_k of x_n, where v is 0, s^2/2 or
    a polynomial with the given coefficients (lowest degree first).
    """

    def __init__(self, kind: str = "zero", coefficients: Sequence[float] = (),
                 n: int = 1, d: int = 1):
        """
        Initialize from a kind and, for polynomials, the coefficients.
        """
        if kind not in POTENTIAL_KINDS:
            raise ValueError(f"Unknown potential kind {kind!r}")
        if kind == "zero":
            coefficients = (0.0,)
        elif kind == "quadratic":
            coefficients = (0.0, 0.0, 0.5)
        elif not len(coefficients):
            raise ValueError("A polynomial potential needs coefficients")
        self.kind = kind
        self.coefficients = np.trim_zeros(np.asarray(coefficients, dtype=float), "b")
        if self.coefficients.size == 0:
            self.coefficients = np.zeros(1)
        self._d1 = P.polyder(self.coefficients)
        self._d2 = P.polyder(self.coefficients, 2)
        self.n = n
        self.d = d
        self.flags: Dict[str, object] = {}

    @classmethod
    def from_config(cls, config: PotentialConfig, n: int, d: int = 1) -> "PotentialSpec":
        """Build from a validated potential config."""
        return cls(config.kind, config.coefficients, n, d)

    @property
    def degree(self) -> int:
        """Polynomial degree of v."""
        return self.coefficients.size - 1

    @property
    def is_zero(self) -> bool:
        """True when V vanishes identically."""
        return not np.any(self.coefficients)

    def _last_block(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.n * self.d:
            raise ValueError(f"Expected points with {self.n * self.d} coordinates, got {points.shape[1]}")
        return points[:, (self.n - 1) * self.d:]

    def value(self, points: np.ndarray) -> np.ndarray:
        """V at every point, shape (N,)."""
        return P.polyval(self._last_block(points), self.coefficients).sum(axis=1)

    def grad(self, points: np.ndarray) -> np.ndarray:
        """grad_{x_n} V at every point, shape (N, d)."""
        return P.polyval(self._last_block(points), self._d1)

    def laplacian(self, points: np.ndarray) -> np.ndarray:
        """Lap_{x_n} V at every point, shape (N,)."""
        return P.polyval(self._last_block(points), self._d2).sum(axis=1)

    def declared_lipschitz(self, points: Optional[np.ndarray] = None) -> float:
        """
        Lipschitz constant of grad V: exact for degree <= 2, otherwise the
        largest |v''| over the given points (a grid-local bound).
        """
        if self.degree <= 2:
            return float(abs(self._d2[0]))
        if points is None:
            return float("inf")
        return float(np.abs(P.polyval(self._last_block(points), self._d2)).max())

    def check_assumptions(self, points: np.ndarray, samples: int = 200,
                          seed: int = 0) -> Dict[str, object]:
        """
        Check V >= 0 on the points and the Lipschitz bound on sampled pairs.
        Records the outcome in ``flags``; raises ValueError if V < 0 somewhere.
        """
        values = self.value(points)
        nonnegative = bool(np.all(values >= -1e-14))
        if not nonnegative:
            raise ValueError(f"Potential is negative on the grid (min {values.min():.3e})")

        constant = self.declared_lipschitz(points)
        rng = np.random.default_rng(seed)
        pts = np.atleast_2d(points)
        a = pts[rng.integers(0, pts.shape[0], samples)]
        b = pts[rng.integers(0, pts.shape[0], samples)]
        dist = np.linalg.norm(self._last_block(a) - self._last_block(b), axis=1)
        dgrad = np.linalg.norm(self.grad(a) - self.grad(b), axis=1)
        lipschitz = bool(np.all(dgrad <= constant * dist * (1 + 1e-12) + 1e-12))
        globally = self.degree <= 2
        if not globally:
            logger.warning("Potential of degree %d has a grid-local gradient Lipschitz bound only",
                           self.degree)
        self.flags = {
            "nonnegative": nonnegative,
            "lipschitz_gradient": lipschitz,
            "global_lipschitz": globally,
            "lipschitz_constant": constant,
        }
        return self.flags

    def to_dict(self) -> Dict[str, object]:
        """Description for reports."""
        return {"kind": self.kind, "coefficients": self.coefficients.tolist(), **self.flags}
