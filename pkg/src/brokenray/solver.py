"""Cyclic Kaczmarz (row-action) solver with a dual-norm stopping rule.

Each update projects the iterate onto one row's hyperplane
``{x : w_h . x = t_h}``, cycling through the rows in order (``h = i mod r``).
The run stops once the iterate's change over a full sweep stays below a
Euclidean radius and a max-norm radius for a required number of consecutive
sweep checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, ZeroRow
from .projection import RaySystem, SparseRow, forward_project


@dataclass(frozen=True)
class SolveOptions:
    """Stopping parameters for a Kaczmarz run.

    ``relaxation`` scales every projection step; 1.0 lands exactly on each
    row's hyperplane.  Convergence requires the sweep-to-sweep change to fall
    below both radii for ``required_consecutive`` consecutive sweeps.
    """

    radius_euclidean: float
    radius_max: float
    required_consecutive: int = 2
    max_sweeps: int = 500
    relaxation: float = 1.0

    def __post_init__(self):
        if self.radius_euclidean <= 0 or self.radius_max <= 0:
            raise ValueError("convergence radii must be positive")
        if self.required_consecutive < 2:
            raise ValueError("required_consecutive must be at least 2")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        if not 0.0 < self.relaxation <= 2.0:
            raise ValueError("relaxation must lie in (0, 2]")

    @classmethod
    def for_scale(cls, f_scale: float, region_cells: int, **overrides) -> "SolveOptions":
        """Scale-free default radii for a field of magnitude ``f_scale``.

        Euclidean radius 1e-6 * sqrt(region_cells) * f_scale, max radius
        1e-6 * f_scale.
        """
        if f_scale <= 0 or region_cells <= 0:
            raise ValueError("need a positive field scale and cell count")
        opts = cls(
            radius_euclidean=1e-6 * math.sqrt(region_cells) * f_scale,
            radius_max=1e-6 * f_scale,
        )
        return replace(opts, **overrides) if overrides else opts


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of one solve: final iterate plus bookkeeping."""

    solution: np.ndarray
    iterations: int          # individual row updates = sweeps * r
    sweeps: int
    converged: bool
    final_residual_norm: float


def kaczmarz_step(row: SparseRow, t: float, x: np.ndarray,
                  relaxation: float = 1.0) -> np.ndarray:
    """Project ``x`` onto the hyperplane of one row (returns a new vector).

    With relaxation 1 the result satisfies ``w . x' = t`` up to rounding; only
    the row's support cells change.
    """
    norm_sq = row.norm_sq()
    if norm_sq == 0.0:
        raise ZeroRow("cannot project onto a row with zero normal vector")
    out = np.array(x, dtype=np.float64, copy=True)
    residual = t - float(np.dot(row.weights, out[row.indices]))
    out[row.indices] += (relaxation * residual / norm_sq) * row.weights
    return out


def solve(system: RaySystem, opts: SolveOptions) -> SolveReport:
    """Run cyclic Kaczmarz from the zero vector until converged or capped.

    Convergence is checked at sweep boundaries by comparing the iterate with
    the previous sweep's end state in both the Euclidean and max norms.  The
    result is deterministic for a given system and options.  A run that hits
    ``max_sweeps`` returns ``converged=False`` rather than raising.
    """
    if system.r == 0:
        raise ValueError("system has no rows")
    row_norms_sq = np.asarray(system.row_norms_sq, dtype=np.float64)
    if np.any(row_norms_sq == 0.0):
        raise ZeroRow("system contains an all-zero row; filter it at assembly")
    x = np.zeros(system.n_cols, dtype=np.float64)
    prev = x.copy()
    consecutive = 0
    sweeps = 0
    converged = False
    indptr = np.ascontiguousarray(system.indptr, dtype=np.int64)
    indices = np.ascontiguousarray(system.indices, dtype=np.int64)
    weights = np.ascontiguousarray(system.weights, dtype=np.float64)
    times = np.ascontiguousarray(system.times, dtype=np.float64)
    for _ in range(opts.max_sweeps):
        _kernels.kaczmarz_sweep(indptr, indices, weights, times,
                                row_norms_sq, x, opts.relaxation)
        sweeps += 1
        diff = x - prev
        dist_euclid = float(np.linalg.norm(diff))
        dist_max = float(np.max(np.abs(diff))) if len(diff) else 0.0
        if dist_euclid < opts.radius_euclidean and dist_max < opts.radius_max:
            consecutive += 1
            if consecutive >= opts.required_consecutive:
                converged = True
                break
        else:
            consecutive = 0
        prev[:] = x
    residual = float(np.linalg.norm(forward_project(system, x) - times))
    return SolveReport(
        solution=x,
        iterations=sweeps * system.r,
        sweeps=sweeps,
        converged=converged,
        final_residual_norm=residual,
    )


def residual_norms(system: RaySystem, x: np.ndarray) -> tuple[float, float]:
    """Euclidean and max norms of ``W x - T``."""
    res = forward_project(system, x) - system.times
    if len(res) == 0:
        return 0.0, 0.0
    return float(np.linalg.norm(res)), float(np.max(np.abs(res)))
