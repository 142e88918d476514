"""Ray-cell intersection rows, linear-system assembly, and forward projection.

A ray's row holds the length it spends in every reconstruction cell; stacking
the rows of a ray set gives the sparse system ``W f = T`` that the solver
inverts.  The system is stored in CSR form internally and never densified.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import AllRaysEmpty, DimensionMismatch, EmptyRow
from .geometry import Grid, Point, Scene

if TYPE_CHECKING:  # rays imports this module; keep the runtime graph acyclic
    from .rays import RayPath, RaySet

logger = logging.getLogger(__name__)

# intersections shorter than this fraction of a cell side are corner grazes
WEIGHT_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class SparseRow:
    """One matrix row: (cell index, intersection length) pairs, index-sorted."""

    indices: np.ndarray   # int64, strictly increasing
    weights: np.ndarray   # float64, all positive

    @property
    def nnz(self) -> int:
        return len(self.indices)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def dot(self, x: np.ndarray) -> float:
        return float(np.dot(self.weights, x[self.indices]))

    def norm_sq(self) -> float:
        return float(np.dot(self.weights, self.weights))


def _sorted_row(idx: np.ndarray, w: np.ndarray) -> SparseRow:
    order = np.argsort(idx, kind="stable")
    idx = np.ascontiguousarray(idx[order], dtype=np.int64)
    w = np.ascontiguousarray(w[order], dtype=np.float64)
    idx.setflags(write=False)
    w.setflags(write=False)
    return SparseRow(idx, w)


def traverse(grid: Grid, a: Point, b: Point) -> SparseRow:
    """Exact per-cell intersection lengths of segment [a, b] with the grid.

    Cells the segment merely grazes at a corner are omitted.  A segment
    entirely outside the grid yields an empty row.
    """
    if a == b:
        raise ValueError("traverse requires two distinct endpoints")
    buf_idx = np.empty(2 * grid.n + 4, dtype=np.int64)
    buf_w = np.empty(2 * grid.n + 4, dtype=np.float64)
    count = _kernels.traverse_segment(
        grid.origin[0], grid.origin[1], grid.n, grid.cell_size,
        a[0], a[1], b[0], b[1], buf_idx, buf_w,
    )
    return _sorted_row(buf_idx[:count].copy(), buf_w[:count].copy())


def _accumulate_legs(grid: Grid, legs: Sequence[tuple[Point, Point]]):
    """Concatenate leg traversals, summing weights of cells hit by both legs."""
    all_idx = []
    all_w = []
    buf_idx = np.empty(2 * grid.n + 4, dtype=np.int64)
    buf_w = np.empty(2 * grid.n + 4, dtype=np.float64)
    for a, b in legs:
        count = _kernels.traverse_segment(
            grid.origin[0], grid.origin[1], grid.n, grid.cell_size,
            a[0], a[1], b[0], b[1], buf_idx, buf_w,
        )
        all_idx.append(buf_idx[:count].copy())
        all_w.append(buf_w[:count].copy())
    idx = np.concatenate(all_idx)
    w = np.concatenate(all_w)
    if len(legs) > 1 and len(idx):
        uniq, inverse = np.unique(idx, return_inverse=True)
        sums = np.zeros(len(uniq))
        np.add.at(sums, inverse, w)
        return uniq, sums
    return idx, w


def ray_row(scene: Scene, ray: RayPath) -> SparseRow:
    """Matrix row of a ray: leg traversals summed, then masked cells removed.

    The cell containing a broken ray's reflection point receives the sum of
    both legs' lengths inside it.  Raises EmptyRow when every intersected cell
    is masked (obstacle or exterior); such rays must not enter the system.
    """
    idx, w = _accumulate_legs(scene.grid, ray.legs)
    if len(idx):
        keep = scene.region_mask[idx]
        idx, w = idx[keep], w[keep]
    if not len(idx):
        raise EmptyRow("ray intersects no reconstruction cell")
    return _sorted_row(idx, w)


@dataclass(eq=False)
class RaySystem:
    """Sparse system ``W f = T`` for a sampled ray set (CSR storage).

    ``rows[j]`` is the weight row of ray j and ``times[j]`` its travel time.
    Every stored row is nonempty; empty rows are dropped at assembly.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    times: np.ndarray
    n_cols: int

    @classmethod
    def from_rows(cls, rows: Sequence[SparseRow], times: Iterable[float], n_cols: int) -> "RaySystem":
        times = np.asarray(list(times), dtype=np.float64)
        if len(rows) != len(times) or len(rows) == 0:
            raise ValueError("need equally many (nonzero) rows and times")
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        for j, row in enumerate(rows):
            indptr[j + 1] = indptr[j] + row.nnz
        indices = np.concatenate([r.indices for r in rows]) if rows else np.empty(0, np.int64)
        weights = np.concatenate([r.weights for r in rows]) if rows else np.empty(0, np.float64)
        return cls(indptr, indices.astype(np.int64), weights.astype(np.float64), times, n_cols)

    @property
    def r(self) -> int:
        return len(self.times)

    def __len__(self) -> int:
        return self.r

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def row(self, j: int) -> SparseRow:
        s, e = self.indptr[j], self.indptr[j + 1]
        return SparseRow(self.indices[s:e], self.weights[s:e])

    @property
    def rows(self) -> list[SparseRow]:
        return [self.row(j) for j in range(self.r)]

    @cached_property
    def row_norms_sq(self) -> np.ndarray:
        return _row_sums(self.weights * self.weights, self.indptr)


def _row_sums(values: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    """Per-row sums of a CSR value array; rows of zero length sum to zero."""
    r = len(indptr) - 1
    if len(values) == 0:
        return np.zeros(r)
    counts = np.diff(indptr)
    starts = np.minimum(indptr[:-1], len(values) - 1)
    sums = np.add.reduceat(values, starts)
    return np.where(counts > 0, sums, 0.0)


def assemble(scene: Scene, rays: RaySet, f_true: np.ndarray) -> RaySystem:
    """Build the system for a ray set with synthetic travel times.

    Travel times are forward-projected through the same discretization used
    for reconstruction: ``times[j] = sum_i w[j][i] * f_true[i]``.  Rays whose
    row is empty after masking are dropped (their count is logged).
    """
    f_true = np.asarray(f_true, dtype=np.float64)
    if f_true.shape != (scene.grid.n_cells,):
        raise DimensionMismatch(
            f"phantom has length {f_true.shape}, grid has {scene.grid.n_cells} cells")
    if not rays.rays:
        raise ValueError("ray set is empty")
    grid = scene.grid
    region = scene.region_mask
    idx_parts = []
    w_parts = []
    counts = []
    dropped = 0
    for ray in rays.rays:
        idx, w = _accumulate_legs(grid, ray.legs)
        if len(idx):
            keep = region[idx]
            idx, w = idx[keep], w[keep]
        if not len(idx):
            dropped += 1
            continue
        order = np.argsort(idx, kind="stable")
        idx_parts.append(idx[order])
        w_parts.append(w[order])
        counts.append(len(idx))
    if dropped:
        logger.info("assemble: dropped %d rays with empty rows", dropped)
    if not counts:
        raise AllRaysEmpty("no ray intersects the reconstruction region")
    indptr = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.concatenate(idx_parts)
    weights = np.concatenate(w_parts)
    times = np.add.reduceat(weights * f_true[indices], indptr[:-1])
    return RaySystem(indptr, indices, weights, times, grid.n_cells)


def forward_project(system: RaySystem, x: np.ndarray) -> np.ndarray:
    """Compute ``W x`` for the system's weight matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (system.n_cols,):
        raise DimensionMismatch(f"vector length {x.shape} != {system.n_cols} columns")
    if system.r == 0:
        return np.empty(0)
    return _row_sums(system.weights * x[system.indices], system.indptr)


def save_system(system: RaySystem, path) -> None:
    """Write the system as text: header ``r n_cols``, then one row per line.

    Row lines are ``k idx:w idx:w ... | t`` with 17-significant-digit reals,
    where ``k`` is the entry count of the row.
    """
    with open(path, "w") as fh:
        fh.write(f"{system.r} {system.n_cols}\n")
        for j in range(system.r):
            s, e = system.indptr[j], system.indptr[j + 1]
            entries = " ".join(
                f"{int(i)}:{w:.17g}"
                for i, w in zip(system.indices[s:e], system.weights[s:e])
            )
            fh.write(f"{e - s} {entries} | {system.times[j]:.17g}\n")


def load_system(path) -> RaySystem:
    """Read a system written by :func:`save_system`."""
    with open(path) as fh:
        header = fh.readline().split()
        r, n_cols = int(header[0]), int(header[1])
        rows = []
        times = []
        for _ in range(r):
            parts = fh.readline().split()
            k = int(parts[0])
            idx = np.empty(k, dtype=np.int64)
            w = np.empty(k, dtype=np.float64)
            for m in range(k):
                i_str, w_str = parts[1 + m].split(":")
                idx[m] = int(i_str)
                w[m] = float(w_str)
            assert parts[1 + k] == "|"
            times.append(float(parts[2 + k]))
            rows.append(SparseRow(idx, w))
    return RaySystem.from_rows(rows, times, n_cols)
