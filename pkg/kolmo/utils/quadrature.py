"""
Tensor Gauss-Hermite and trapezoid rules.
"""
# built-in imports
import itertools
from typing import Sequence, Tuple

# third party imports
import numpy as np
from numpy.polynomial.hermite import hermgauss


def tensor_hermgauss(dim: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights for int_{R^dim} f(u) exp(-|u|^2) du on a tensor grid.

    Returns (points of shape (nodes**dim, dim), weights of shape (nodes**dim,)).
    """
    if dim < 1 or nodes < 1:
        raise ValueError(f"Need dim >= 1 and nodes >= 1, got {dim} and {nodes}")
    x, w = hermgauss(nodes)
    points = np.array(list(itertools.product(x, repeat=dim)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=dim))), axis=1)
    return points, weights


def tensor_trapezoid(lows: Sequence[float], highs: Sequence[float],
                     nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite trapezoid rule on a box with ``nodes`` points per axis.
    """
    axes = []
    axis_weights = []
    for lo, hi in zip(lows, highs):
        x = np.linspace(lo, hi, nodes)
        w = np.full(nodes, (hi - lo) / (nodes - 1))
        w[[0, -1]] *= 0.5
        axes.append(x)
        axis_weights.append(w)
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    wmesh = np.meshgrid(*axis_weights, indexing="ij")
    weights = np.prod(np.stack([m.reshape(-1) for m in wmesh], axis=1), axis=1)
    return points, weights
