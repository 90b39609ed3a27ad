"""Gaussian kernel density estimates of scalar error populations."""

from dataclasses import dataclass

import numpy as np

from ..errors import ToolkitError

GRID_POINTS = 512
BANDWIDTH_FLOOR = 1e-12


@dataclass(frozen=True)
class KdeCurve:
    """Density curve; construction enforces near-unit mass on the grid."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        dens = np.asarray(self.density, dtype=np.float64)
        if grid.ndim != 1 or grid.shape != dens.shape or grid.shape[0] < 2:
            raise ToolkitError("bad-kde", "grid and density must be matching 1D")
        if np.any(np.diff(grid) <= 0.0):
            raise ToolkitError("bad-kde", "grid must strictly increase")
        if np.any(dens < 0.0) or not np.all(np.isfinite(dens)):
            raise ToolkitError("bad-kde", "density must be finite and >= 0")
        mass = self.integral_of(grid, dens)
        if not 0.98 <= mass <= 1.02:
            raise ToolkitError("bad-kde",
                               f"density mass {mass:.4f} outside [0.98, 1.02]")
        for name, arr in (("grid", grid), ("density", dens)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @staticmethod
    def integral_of(grid, density) -> float:
        return float(np.trapezoid(density, grid))

    def integral(self) -> float:
        return self.integral_of(self.grid, self.density)


def scott_bandwidth(samples: np.ndarray) -> float:
    """Scott's rule with population std; widened fallbacks for degenerate
    (constant) sample sets."""
    n = samples.shape[0]
    std = float(np.std(samples))
    h = std * n ** (-1.0 / 5.0)
    if h <= 0.0:
        h = 0.01 * abs(float(np.mean(samples)))
    return max(h, BANDWIDTH_FLOOR)


def kde(samples, bandwidth: float | None = None) -> KdeCurve:
    """Gaussian KDE on a 512-point grid spanning the samples plus 3 bandwidths."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise ToolkitError("empty-dataset", "no samples for density estimate")
    if not np.all(np.isfinite(x)):
        raise ToolkitError("bad-kde", "samples must be finite")
    h = scott_bandwidth(x) if bandwidth is None else float(bandwidth)
    if h <= 0.0:
        raise ToolkitError("bad-kde", f"bandwidth must be positive, got {h}")
    grid = np.linspace(x.min() - 3.0 * h, x.max() + 3.0 * h, GRID_POINTS)
    z = (grid[None, :] - x[:, None]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=0) / (x.shape[0] * h * np.sqrt(2.0 * np.pi))
    return KdeCurve(grid=grid, density=dens, bandwidth=h)
