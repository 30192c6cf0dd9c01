"""
Tensor grids and probability measures supported on them.
"""
# built-in imports
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

# third party imports
import numpy as np

MASS_TOLERANCE = 1e-12


class GridError(ValueError):
    """Grid unsuitable for the request (too coarse, zero volume, support on the boundary)."""


@dataclass(frozen=True)
class TensorGrid:
    """
    A uniform tensor grid of cell centres in R^dim, one axis per coordinate.
    """
    axes: Tuple[np.ndarray, ...]

    @classmethod
    def from_bounds(cls, bounds: Sequence[Tuple[float, float]],
                    cells: Sequence[int]) -> "TensorGrid":
        """
        Build a grid with ``cells[k]`` equal cells on ``bounds[k]`` for every axis.
        """
        if len(bounds) != len(cells):
            raise GridError(f"Got {len(bounds)} bounds for {len(cells)} axes")
        axes = []
        for (lo, hi), m in zip(bounds, cells):
            if m < 1 or not hi > lo:
                raise GridError(f"Invalid axis: bounds ({lo}, {hi}) with {m} cells")
            step = (hi - lo) / m
            axes.append(lo + step * (np.arange(m) + 0.5))
        return cls(tuple(axes))

    @property
    def dim(self) -> int:
        """Number of axes."""
        return len(self.axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        """Cells per axis."""
        return tuple(len(axis) for axis in self.axes)

    @property
    def size(self) -> int:
        """Total number of cells."""
        return int(np.prod(self.shape))

    @property
    def spacings(self) -> np.ndarray:
        """Cell width along each axis."""
        widths = []
        for axis in self.axes:
            if len(axis) < 2:
                raise GridError("Cell width is undefined for a single-cell axis")
            widths.append(axis[1] - axis[0])
        return np.array(widths)

    @property
    def cell_volume(self) -> float:
        """Volume of one cell."""
        volume = float(np.prod(self.spacings))
        if not volume > 0:
            raise GridError("Grid has zero-volume cells")
        return volume

    @property
    def points(self) -> np.ndarray:
        """Cell centres as an (size, dim) array, C order over the axes."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def boundary_mask(self) -> np.ndarray:
        """True for cells in the outermost layer along any axis."""
        masks = np.zeros(self.shape, dtype=bool)
        for k, m in enumerate(self.shape):
            index = [slice(None)] * self.dim
            index[k] = [0, m - 1]
            masks[tuple(index)] = True
        return masks.reshape(-1)

    def interior_margin(self, points: np.ndarray) -> np.ndarray:
        """Distance of each point to the grid's outer faces (per point, minimum over axes)."""
        lows = np.array([axis[0] for axis in self.axes]) - 0.5 * self.spacings
        highs = np.array([axis[-1] for axis in self.axes]) + 0.5 * self.spacings
        return np.minimum(points - lows, highs - points).min(axis=1)


@dataclass
class GridMeasure:
    """
    A probability measure carried by grid points: nonnegative weights summing to one.

    ``volumes`` holds the cell volume of every point when the measure
    discretises a density; densities are then weights / volumes.
    """
    points: np.ndarray
    weights: np.ndarray
    volumes: Optional[np.ndarray] = None
    grid: Optional[TensorGrid] = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError(
                f"{self.points.shape[0]} points but {self.weights.shape[0]} weights")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("Weights must be finite and nonnegative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ValueError(f"Weights sum to {total!r}, expected 1")
        if self.volumes is not None:
            self.volumes = np.broadcast_to(
                np.asarray(self.volumes, dtype=float), self.weights.shape).copy()
            if np.any(self.volumes <= 0):
                raise GridError("Zero-volume cells")

    @classmethod
    def from_weights(cls, grid: TensorGrid, weights: np.ndarray,
                     normalize: bool = True) -> "GridMeasure":
        """Measure on a tensor grid from raw cell weights."""
        weights = np.clip(np.asarray(weights, dtype=float).reshape(-1), 0.0, None)
        if weights.shape[0] != grid.size:
            raise GridError(f"Expected {grid.size} weights, got {weights.shape[0]}")
        if normalize:
            total = weights.sum()
            if not total > 0:
                raise GridError("Cannot normalise a measure with zero mass")
            weights = weights / total
        return cls(grid.points, weights, volumes=grid.cell_volume, grid=grid)

    @classmethod
    def from_density(cls, grid: TensorGrid,
                     density: Callable[[np.ndarray], np.ndarray]) -> "GridMeasure":
        """Sample a density at cell centres and normalise to unit mass."""
        values = np.asarray(density(grid.points), dtype=float)
        return cls.from_weights(grid, values * grid.cell_volume)

    @classmethod
    def dirac(cls, grid: TensorGrid, point: Sequence[float]) -> "GridMeasure":
        """All mass in the cell whose centre is closest to ``point``."""
        pts = grid.points
        index = int(np.argmin(np.sum((pts - np.asarray(point, dtype=float)) ** 2, axis=1)))
        weights = np.zeros(grid.size)
        weights[index] = 1.0
        return cls(pts, weights, volumes=grid.cell_volume, grid=grid)

    @property
    def size(self) -> int:
        """Number of support points."""
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        """Ambient dimension."""
        return self.points.shape[1]

    @property
    def density(self) -> np.ndarray:
        """Weights divided by cell volumes."""
        if self.volumes is None:
            raise GridError("Measure has no cell volumes")
        return self.weights / self.volumes

    def second_moment(self) -> float:
        """M_2 = sum_i w_i |x_i|^2."""
        return float(self.weights @ np.sum(self.points ** 2, axis=1))

    def mean(self) -> np.ndarray:
        """First moment."""
        return self.weights @ self.points

    def boundary_mass(self) -> float:
        """Mass in the outermost layer of the grid (zero without a grid)."""
        if self.grid is None:
            return 0.0
        return float(self.weights[self.grid.boundary_mask()].sum())

    def with_weights(self, weights: np.ndarray) -> "GridMeasure":
        """Same support, new weights (normalised)."""
        weights = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return GridMeasure(self.points, weights / weights.sum(), self.volumes, self.grid)

    def l1_distance(self, other: "GridMeasure") -> float:
        """Grid L^1 distance of the densities, i.e. the total variation of the weights."""
        if self.size != other.size:
            raise ValueError("Measures live on different supports")
        return float(np.abs(self.weights - other.weights).sum())

    def permuted(self, order: List[int]) -> "GridMeasure":
        """Relabel the support points."""
        order = np.asarray(order)
        volumes = None if self.volumes is None else self.volumes[order]
        return GridMeasure(self.points[order], self.weights[order], volumes, None)
