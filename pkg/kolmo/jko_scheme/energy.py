"""
Free energy F(rho) = int V(x_n) rho + int rho log rho on grid measures.
"""
# built-in imports
from dataclasses import asdict, dataclass
from typing import Dict

# third party imports
import numpy as np
from scipy.special import xlogy

# kolmo imports
from kolmo.grid import GridError, GridMeasure
from kolmo.jko_scheme.potentials import PotentialSpec


@dataclass(frozen=True)
class FreeEnergy:
    """Potential and entropy parts of F, plus int max(rho log rho, 0)."""
    potential: float
    entropy: float
    positive_entropy: float

    @property
    def total(self) -> float:
        """F = potential + entropy."""
        return self.potential + self.entropy

    def to_dict(self) -> Dict[str, float]:
        """Convert to dictionary, total included."""
        return {**asdict(self), "total": self.total}


def entropy_parts(rho: GridMeasure):
    """
    (int rho log rho, int max(rho log rho, 0)) by cell quadrature, with 0 log 0 = 0.
    """
    if rho.volumes is None:
        raise GridError("Entropy needs cell volumes")
    density = rho.density
    integrand = xlogy(density, density)
    entropy = float(np.sum(rho.volumes * integrand))
    positive = float(np.sum(rho.volumes * np.maximum(integrand, 0.0)))
    return entropy, positive


def free_energy(rho: GridMeasure, V: PotentialSpec) -> FreeEnergy:
    """F(rho) with its parts."""
    entropy, positive = entropy_parts(rho)
    potential = float(rho.weights @ V.value(rho.points))
    return FreeEnergy(potential, entropy, positive)
