"""Ground-truth slowness fields, error metrics, and grayscale image export.

An image vector holds one slowness value per grid cell (length N*N, row-major)
with zeros on every cell outside the reconstruction region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyRegion, IoFailure
from .geometry import CELL_EXTERIOR, CELL_OBSTACLE, CELL_REGION, Point, Scene


@dataclass(frozen=True)
class PhantomSpec:
    """Radial cone field: slowness grows linearly with distance from a center.

    ``f(x, y) = k * sqrt((x - x0)^2 + (y - y0)^2)``
    """

    k: float
    center: Point
    kind: str = "cone"

    def __post_init__(self):
        if self.kind != "cone":
            raise ValueError(f"unknown phantom kind {self.kind!r}")
        if self.k <= 0:
            raise ValueError("phantom slope k must be positive")

    def evaluate(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.k * np.hypot(xs - self.center[0], ys - self.center[1])


def discretize(spec: PhantomSpec, scene: Scene) -> np.ndarray:
    """Cell-constant field: formula sampled at cell centers, masked cells zero."""
    xs, ys = scene.grid.cell_centers()
    values = spec.evaluate(xs, ys)
    values[~scene.region_mask] = 0.0
    return values


def apply_mask(values: np.ndarray, scene: Scene) -> np.ndarray:
    """Zero out every non-region cell (idempotent)."""
    out = np.array(values, dtype=np.float64, copy=True)
    out[~scene.region_mask] = 0.0
    return out


def _check_pair(f_true: np.ndarray, x: np.ndarray, cell_classes: np.ndarray):
    f_true = np.asarray(f_true, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if f_true.shape != x.shape or f_true.shape != cell_classes.shape:
        raise DimensionMismatch(
            f"shapes differ: {f_true.shape} vs {x.shape} vs {cell_classes.shape}")
    region = cell_classes == CELL_REGION
    if not region.any():
        raise EmptyRegion("no reconstruction cells in mask")
    return f_true, x, region


def avg_error_per_cell(f_true: np.ndarray, x: np.ndarray,
                       cell_classes: np.ndarray) -> float:
    """Mean absolute difference over reconstruction cells only."""
    f_true, x, region = _check_pair(f_true, x, cell_classes)
    return float(np.abs(f_true[region] - x[region]).mean())


def error_norm(f_true: np.ndarray, x: np.ndarray, cell_classes: np.ndarray,
               norm: str = "euclidean") -> float:
    """Euclidean or max norm of the region-restricted difference vector."""
    f_true, x, region = _check_pair(f_true, x, cell_classes)
    diff = f_true[region] - x[region]
    if norm == "euclidean":
        return float(np.linalg.norm(diff))
    if norm == "max":
        return float(np.max(np.abs(diff)))
    raise ValueError(f"unknown norm {norm!r}")


def export_pgm(x: np.ndarray, scene: Scene, path) -> None:
    """Write an 8-bit binary PGM (P5), N x N pixels, grid row 0 at the top.

    Region values are mapped linearly min -> 0 (black) to max -> 255 (white);
    a constant region (min == max) maps to all black.  Obstacle cells are
    forced black, exterior cells white.
    """
    x = np.asarray(x, dtype=np.float64)
    n = scene.grid.n
    if x.shape != (n * n,):
        raise DimensionMismatch(f"vector length {x.shape} != {n * n} cells")
    pixels = np.zeros(n * n, dtype=np.uint8)
    region = scene.region_mask
    if region.any():
        vals = x[region]
        lo, hi = float(vals.min()), float(vals.max())
        if hi > lo:
            scaled = np.rint((vals - lo) / (hi - lo) * 255.0)
            pixels[region] = scaled.astype(np.uint8)
    pixels[scene.cell_classes == CELL_OBSTACLE] = 0
    pixels[scene.cell_classes == CELL_EXTERIOR] = 255
    # row-major cell layout has j increasing upward; image rows go top-down
    image = pixels.reshape(n, n)[::-1, :]
    header = f"P5\n{n} {n}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(image.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write image {path}: {exc}") from exc
